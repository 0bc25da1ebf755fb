"""Quadratic spaces with nondegenerate symmetric forms.

A space carries a symmetric Gram matrix in the canonical basis order.  For
"hyperbolic" spaces the basis is e_1, e_-1, ..., e_p, e_-p (and e_0 when the
dimension is odd), with <e_i, e_-i> = 1, <e_0, e_0> = 2*c0 and all other
pairings zero.  "plain" spaces hold an arbitrary nondegenerate symmetric
Gram matrix over labels 1..n.

Subspaces are identified by their reduced row echelon basis, which makes
equality exact and canonical.
"""

import random
from dataclasses import dataclass

from . import linalg
from .exterior import HYPERBOLIC, PLAIN, canonical_labels, label_positions
from .rationals import Q, QONE, QZERO, rat


class WittIndexError(ValueError):
    """The form does not have maximal Witt index (or we failed to prove it)."""


class QuadraticSpace:
    __slots__ = ("dim", "kind", "gram", "c0", "p")

    def __init__(self, dim, kind, gram, c0=None):
        self.dim = dim
        self.kind = kind
        self.gram = tuple(tuple(rat(x) for x in row) for row in gram)
        self.c0 = rat(c0) if c0 is not None else None
        self.p = dim // 2
        if len(self.gram) != dim or any(len(r) != dim for r in self.gram):
            raise ValueError("gram matrix shape does not match dimension")
        for i in range(dim):
            for j in range(i):
                if self.gram[i][j] != self.gram[j][i]:
                    raise ValueError("gram matrix is not symmetric")
        if linalg.rank(self.gram) != dim:
            raise ValueError("gram matrix is degenerate")

    @classmethod
    def standard(cls, dim, c0=None):
        """Split form in a hyperbolic basis; c0 = <e_0,e_0>/2 when dim is odd."""
        if dim % 2 and c0 is None:
            c0 = Q(1, 2)
        if dim % 2 == 0:
            c0 = None
        pos = label_positions(dim, HYPERBOLIC)
        g = [[QZERO] * dim for _ in range(dim)]
        for i in range(1, dim // 2 + 1):
            a, b = pos[i], pos[-i]
            g[a][b] = QONE
            g[b][a] = QONE
        if dim % 2:
            z = pos[0]
            g[z][z] = 2 * rat(c0)
        return cls(dim, HYPERBOLIC, g, c0)

    @classmethod
    def from_gram(cls, gram):
        """Plain space from an arbitrary symmetric rational Gram matrix."""
        return cls(len(gram), PLAIN, gram)

    @property
    def labels(self):
        return canonical_labels(self.dim, self.kind)

    @property
    def positions(self):
        return label_positions(self.dim, self.kind)

    def basis_vector(self, label):
        i = self.positions[label]
        return tuple(QONE if j == i else QZERO for j in range(self.dim))

    def vector(self, coeffs_by_label):
        """Dense vector from a {label: coefficient} mapping."""
        out = [QZERO] * self.dim
        for lab, c in coeffs_by_label.items():
            out[self.positions[lab]] = rat(c)
        return tuple(out)

    def gram_times(self, v):
        """Covector coordinates of <v, .>."""
        return linalg.vecmat(v, self.gram)

    def __repr__(self):
        return f"QuadraticSpace(dim={self.dim}, kind={self.kind!r})"

    def __eq__(self, other):
        return (
            isinstance(other, QuadraticSpace)
            and self.dim == other.dim
            and self.kind == other.kind
            and self.gram == other.gram
        )

    def __hash__(self):
        return hash((self.dim, self.kind, self.gram))


def space_from_name(name: str) -> QuadraticSpace:
    """CLI preset names: std:<n>, j7, j8.

    j7 is the 7-dimensional form whose Gram matrix has <e_0, e_0> = -1/2;
    that normalization is what makes the counterexample stabilizer
    dimensions come out to (14, 8, 6).
    """
    if name == "j7":
        return QuadraticSpace.standard(7, c0=Q(-1, 4))
    if name == "j8":
        return QuadraticSpace.standard(8)
    if name.startswith("std:"):
        n = int(name.split(":", 1)[1])
        return QuadraticSpace.standard(n)
    raise ValueError(f"unknown space preset {name!r}")


def gram_from_json(data) -> QuadraticSpace:
    return QuadraticSpace.from_gram(
        [[rat(x) for x in row] for row in data]
    )


def bilinear(space: QuadraticSpace, v, w):
    """<v, w> = v^T G w."""
    if len(v) != space.dim or len(w) != space.dim:
        raise ValueError("vector length does not match dimension")
    return linalg.dot(space.gram_times(v), w)


def is_isotropic(space: QuadraticSpace, v) -> bool:
    return not bilinear(space, v, v)


class Subspace:
    """Linear subspace identified by its reduced row echelon basis."""

    __slots__ = ("space", "rows")

    def __init__(self, space, rows):
        self.space = space
        if rows:
            reduced, _ = linalg.rref(rows)
            self.rows = tuple(reduced)
        else:
            self.rows = ()

    @property
    def dim(self) -> int:
        return len(self.rows)

    def contains(self, v) -> bool:
        if not self.rows:
            return not any(v)
        stacked, _ = linalg.rref(list(self.rows) + [tuple(v)])
        return len(stacked) == len(self.rows)

    def intersect(self, other) -> "Subspace":
        # x in A and x in B  <=>  x is orthogonal to ann(A) and ann(B)
        ann_a = linalg.nullspace(self.rows, self.space.dim)
        ann_b = linalg.nullspace(other.rows, other.space.dim)
        rows = linalg.nullspace(ann_a + ann_b, self.space.dim)
        return Subspace(self.space, rows)

    def add(self, other) -> "Subspace":
        return Subspace(self.space, list(self.rows) + list(other.rows))

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.space == other.space
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.space, self.rows))

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.space.dim})"


def is_isotropic_subspace(space: QuadraticSpace, sub: Subspace) -> bool:
    rows = sub.rows if isinstance(sub, Subspace) else sub
    covs = [space.gram_times(r) for r in rows]
    for i, u in enumerate(rows):
        for cov in covs[i:]:
            if linalg.dot(cov, u):
                return False
    return True


def orthogonal_complement(space: QuadraticSpace, sub: Subspace) -> Subspace:
    rows = sub.rows if isinstance(sub, Subspace) else sub
    if not rows:
        return Subspace(space, [space.basis_vector(l) for l in space.labels])
    constraints = [space.gram_times(r) for r in rows]
    return Subspace(space, linalg.nullspace(constraints, space.dim))


@dataclass(frozen=True)
class HyperbolicTuple:
    """Vectors (e_1, e_-1, ..., e_k, e_-k) with <e_i,e_-j> = delta_ij and all
    other pairings zero; optionally an anisotropic e_0 orthogonal to all."""

    pairs: tuple  # tuple of (e_i, e_minus_i) coordinate-row pairs
    e0: tuple = None

    def rows(self):
        out = []
        for a, b in self.pairs:
            out.append(a)
            out.append(b)
        if self.e0 is not None:
            out.append(self.e0)
        return out

    def validate(self, space: QuadraticSpace):
        flat = []
        for a, b in self.pairs:
            flat.append(a)
            flat.append(b)
        k = len(self.pairs)
        for i in range(2 * k):
            for j in range(i, 2 * k):
                val = bilinear(space, flat[i], flat[j])
                same_pair = i // 2 == j // 2 and i != j
                expected = QONE if same_pair else QZERO
                if val != expected:
                    raise ValueError(
                        f"hyperbolic pairing violated at ({i},{j}): {val}"
                    )
        if self.e0 is not None:
            for u in flat:
                if bilinear(space, self.e0, u):
                    raise ValueError("e0 is not orthogonal to the tuple")
            if not bilinear(space, self.e0, self.e0):
                raise ValueError("e0 is isotropic")


def _solve_constraints(space, constraint_rows, rhs, within=None):
    """Vector w with <c_i, w> = rhs_i; optionally confined to a row span."""
    if within is None:
        return linalg.solve(constraint_rows, rhs)
    basis = list(within)
    sys_rows = [
        tuple(linalg.dot(c, b) for b in basis) for c in constraint_rows
    ]
    coeffs = linalg.solve(sys_rows, rhs)
    if coeffs is None:
        return None
    out = [QZERO] * space.dim
    for c, b in zip(coeffs, basis):
        if c:
            for j, x in enumerate(b):
                if x:
                    out[j] = out[j] + c * x
    return tuple(out)


def complete_hyperbolic(space: QuadraticSpace, sub, within=None) -> HyperbolicTuple:
    """Extend a basis of an isotropic subspace to a hyperbolic tuple.

    Given isotropic u_1..u_k, finds partners w_i with <u_i, w_j> = delta_ij,
    <w_i, w_j> = 0.  Each partner is first solved linearly and then made
    isotropic by w -> w - <w,w>/2 * u_i, which preserves all pairings.  The
    optional `within` row set confines the partners to a subspace (used for
    quotient constructions).
    """
    rows = sub.rows if isinstance(sub, Subspace) else [tuple(r) for r in sub]
    if not rows:
        return HyperbolicTuple(pairs=())
    covs = [space.gram_times(u) for u in rows]
    for i, u in enumerate(rows):
        for cov in covs[i:]:
            if linalg.dot(cov, u):
                raise ValueError("subspace is not isotropic")
    partners = []
    for i, u in enumerate(rows):
        constraints = list(covs)
        rhs = [QONE if j == i else QZERO for j in range(len(rows))]
        for w in partners:
            constraints.append(space.gram_times(w))
            rhs.append(QZERO)
        w = _solve_constraints(space, constraints, rhs, within)
        if w is None:
            raise ValueError("cannot complete hyperbolic tuple (degenerate restriction)")
        ww = bilinear(space, w, w)
        if ww:
            half = ww / 2
            w = tuple(a - half * b for a, b in zip(w, u))
        partners.append(w)
    return HyperbolicTuple(pairs=tuple(zip(rows, partners)))


def common_hyperbolic_basis(space: QuadraticSpace, w1: Subspace, w2: Subspace):
    """Hyperbolic basis adapted to two maximal isotropic subspaces.

    Returns (HyperbolicTuple, q) with q = dim(W1 cap W2),
    W1 = span{e_1..e_p} and W2 = span{e_1..e_q, e_-(q+1)..e_-p}.  Built as:
    intersection basis first, dual pairing between complements, then
    completion inside the orthogonal complement of the paired part.
    """
    p = space.p
    if w1.dim != p or not is_isotropic_subspace(space, w1):
        raise ValueError("W1 is not maximal isotropic")
    if w2.dim != p or not is_isotropic_subspace(space, w2):
        raise ValueError("W2 is not maximal isotropic")
    inter = w1.intersect(w2)
    q = inter.dim
    e_pos = list(inter.rows)  # e_1..e_q

    def extend(base, rows):
        picked = []
        cur = list(base)
        cur_rank = linalg.rank(cur) if cur else 0
        for r in rows:
            cand = cur + [r]
            if linalg.rank(cand) > cur_rank:
                picked.append(r)
                cur = cand
                cur_rank += 1
        return picked

    u1 = extend(e_pos, list(w1.rows))  # e_{q+1}..e_p
    u2 = extend(e_pos, list(w2.rows))
    # dual pairing: e_-(q+j) in span(u2) with <e_{q+a}, e_-(q+j)> = delta_aj
    m = len(u1)
    neg_high = []
    if m:
        pairing = [
            [bilinear(space, a, b) for b in u2] for a in u1
        ]
        for j in range(m):
            rhs = [QONE if a == j else QZERO for a in range(m)]
            coeffs = linalg.solve(pairing, rhs)
            if coeffs is None:
                raise ValueError("dual pairing between complements is singular")
            vec = [QZERO] * space.dim
            for c, b in zip(coeffs, u2):
                if c:
                    for t, x in enumerate(b):
                        if x:
                            vec[t] = vec[t] + c * x
            neg_high.append(tuple(vec))
    # complete the intersection inside the complement of the paired part
    paired = u1 + neg_high
    if paired:
        constraints = [space.gram_times(r) for r in paired]
        t_rows = linalg.nullspace(constraints, space.dim)
    else:
        t_rows = [space.basis_vector(l) for l in space.labels]
    if q:
        low = complete_hyperbolic(space, e_pos, within=t_rows)
        pairs_low = low.pairs
    else:
        pairs_low = ()
    pairs = tuple(pairs_low) + tuple(zip(u1, neg_high))
    e0 = None
    if space.dim % 2:
        all_rows = [r for pr in pairs for r in pr]
        constraints = [space.gram_times(r) for r in all_rows]
        rest = linalg.nullspace(constraints, space.dim)
        if len(rest) != 1:
            raise ValueError("odd-dimensional completion failed")
        e0 = rest[0]
    tup = HyperbolicTuple(pairs=pairs, e0=e0)
    tup.validate(space)
    return tup, q


def random_isotropic_vector(space: QuadraticSpace, rng: random.Random, box=10):
    """Nonzero isotropic vector, exact and square-root free.

    Draws x in the span of all but the last hyperbolic pair with integer
    coordinates, a nonzero integer lambda, and returns
    x + lambda*e_p + mu*e_-p with mu = -<x,x>/(2*lambda).
    """
    if space.kind != HYPERBOLIC:
        raise ValueError("isotropic sampling needs a hyperbolic basis")
    p = space.p
    pos = space.positions
    while True:
        coords = [QZERO] * space.dim
        for lab in space.labels:
            if lab in (p, -p):
                continue
            c = rng.randint(-box, box)
            if c:
                coords[pos[lab]] = Q(c)
        lam = Q(rng.choice([k for k in range(-box, box + 1) if k]))
        xx = linalg.dot(space.gram_times(coords), coords)
        coords[pos[p]] = lam
        coords[pos[-p]] = -xx / (2 * lam)
        v = linalg.scale_to_integers(coords)
        if any(v):
            return v


def maximal_isotropic(space: QuadraticSpace) -> Subspace:
    """A maximal isotropic subspace; for hyperbolic spaces span{e_1..e_p}."""
    if space.kind == HYPERBOLIC:
        return Subspace(
            space, [space.basis_vector(i) for i in range(1, space.p + 1)]
        )
    tup = _greedy_hyperbolic(space)
    return Subspace(space, [a for a, _ in tup.pairs])


def _find_isotropic_in_box(space, rows):
    """Small-height isotropic vector in the row span, or None.

    Searches integer combinations of up to four basis rows with entries in a
    small box.  This is a bounded search: exotic rational forms can have all
    their isotropic vectors outside the box, in which case we give up and
    report failure rather than answer incorrectly.
    """
    k = len(rows)

    def pairing(i, j):
        return bilinear(space, rows[i], rows[j])

    for i in range(k):
        if not pairing(i, i):
            return rows[i]
    for i in range(k):
        for j in range(i + 1, k):
            gii, gij, gjj = pairing(i, i), pairing(i, j), pairing(j, j)
            for a in range(1, 7):
                for b in range(-6, 7):
                    if not b:
                        continue
                    if gii * a * a + 2 * gij * a * b + gjj * b * b == 0:
                        return tuple(
                            a * x + b * y for x, y in zip(rows[i], rows[j])
                        )
    from itertools import combinations, product

    for size, lim in ((3, 3), (4, 2)):
        if k < size:
            continue
        for idx in combinations(range(k), size):
            for coeffs in product(range(-lim, lim + 1), repeat=size):
                if not any(coeffs) or coeffs[0] < 0:
                    continue
                v = [QZERO] * space.dim
                for c, i in zip(coeffs, idx):
                    if c:
                        for t, x in enumerate(rows[i]):
                            v[t] = v[t] + c * x
                if not any(v):
                    continue
                if not bilinear(space, v, v):
                    return tuple(v)
    return None


def _greedy_hyperbolic(space) -> HyperbolicTuple:
    """Split off hyperbolic planes until no isotropic vector is found."""
    rows = [space.basis_vector(l) for l in space.labels]
    pairs = []
    while len(rows) >= 2:
        v = _find_isotropic_in_box(space, rows)
        if v is None:
            break
        w = _solve_constraints(
            space, [space.gram_times(v)], [QONE], within=rows
        )
        if w is None:
            raise WittIndexError("restricted form is degenerate")
        ww = bilinear(space, w, w)
        if ww:
            half = ww / 2
            w = tuple(a - half * b for a, b in zip(w, v))
        pairs.append((v, w))
        constraints = [space.gram_times(v), space.gram_times(w)]
        sys_rows = [
            tuple(linalg.dot(c, b) for b in rows) for c in constraints
        ]
        keep = linalg.nullspace(sys_rows, len(rows))
        rows = [
            tuple(
                sum((c * b[t] for c, b in zip(combo, rows)), QZERO)
                for t in range(space.dim)
            )
            for combo in keep
        ]
    expected = space.p
    if len(pairs) != expected:
        raise WittIndexError(
            f"form does not have maximal Witt index: found {len(pairs)} "
            f"hyperbolic pairs, need {expected} (bounded search)"
        )
    e0 = rows[0] if rows else None
    return HyperbolicTuple(pairs=tuple(pairs), e0=e0)


def witt_index(space: QuadraticSpace) -> int:
    """p = floor(dim/2) after constructing a maximal isotropic subspace.

    Raises WittIndexError when the form provably (or, for the bounded
    search, apparently) has smaller Witt index.
    """
    if space.kind == HYPERBOLIC:
        # the standard gram pattern is verified at construction time
        return space.p
    tup = _greedy_hyperbolic(space)
    tup.validate(space)
    return len(tup.pairs)
