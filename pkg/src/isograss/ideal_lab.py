"""Degree-2 ideal of the small maximal isotropic Grassmannians.

Pipeline (all exact, with a modular fast path):

1. Sample integral points by parametrizing a dense open cell of the variety
   with small integer parameters; every point is the Plücker coordinate
   vector of an isotropic frame.
2. Linear forms = exact kernel of point evaluation on coordinates; they are
   split into torus-weight-homogeneous pieces and eliminated by
   substitution.
3. Quadrics: the kernel on degree-2 monomials of the reduced coordinates is
   computed modulo two 31-bit primes, reconstructed to rationals, and then
   certified exactly: the candidates vanish exactly on rows whose mod-p
   rank already bounds the kernel dimension from above, so spanning is
   forced, and on 100 held-out points.
4. The quadric space decomposes under the torus into weight spaces; raising
   operators cut out highest weight vectors; repeatedly picking a
   minimal-rank highest weight vector not yet generated and closing under
   lowering operators exhausts the space with generators of rank <= 4.

The polynomial action convention is (X . f)(w) := -f(X . w), extended as a
derivation; under it the negative-root matrices raise the torus weight of
coordinates (the weight of x_I being the signed label sum), so those are
the "raising" operators exposed here.
"""

import random
from dataclasses import dataclass
from math import comb, gcd, isqrt

import numpy as np

from . import linalg
from .counterexamples import lie_act
from .exterior import (
    MultiVector,
    all_index_sets,
    label_positions,
    sort_labels,
    wedge_all,
)
from .quadratic import QuadraticSpace
from .rationals import Q, QONE, QZERO, rat, rat_str

PRIMES = (2147483647, 2147483629, 2147483587, 2147483563)
# small enough that a full int64 matmul of mod-p matrices cannot overflow
VERIFY_PRIMES = (1048573, 1048583)


class InsufficientSamplesError(RuntimeError):
    """Evaluation rank did not stabilize across sample batches."""


class PipelineError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# variety contexts


@dataclass(frozen=True)
class VarietyContext:
    name: str
    space: QuadraticSpace
    grade: int
    coords: tuple  # index sets in canonical order
    coord_pos: dict

    @classmethod
    def make(cls, name):
        if name == "iso37":
            space = QuadraticSpace.standard(7)
            grade = 3
        elif name in ("iso48", "iso48_component"):
            space = QuadraticSpace.standard(8)
            grade = 4
            name = "iso48"
        else:
            raise ValueError(f"unknown variety {name!r}")
        coords = tuple(all_index_sets(space.dim, grade, space.kind))
        return cls(
            name, space, grade, coords, {c: i for i, c in enumerate(coords)}
        )


def index_set_weight(space: QuadraticSpace, index_set) -> tuple:
    """Torus weight: label i adds +-1 in slot |i|; label 0 adds nothing."""
    w = [0] * space.p
    for lab in index_set:
        if lab > 0:
            w[lab - 1] += 1
        elif lab < 0:
            w[-lab - 1] -= 1
    return tuple(w)


def sample_variety_points(variety: str, count: int, rng: random.Random):
    """Integral Plücker vectors of random isotropic frames in a dense cell.

    iso37: rows e_i + sum_j A_ij e_-j + b_i e_0 with A = C - c0 b b^T, C
    skew; iso48: rows e_i + sum_j A_ij e_-j with A skew, which fixes the
    component where dim(L cap span{e_1..e_4}) is even.
    """
    ctx = VarietyContext.make(variety)
    space = ctx.space
    kind = space.kind
    points = []
    for _ in range(count):
        if ctx.name == "iso37":
            c12, c13, c23 = (rng.randint(-6, 6) for _ in range(3))
            b = [rng.randint(-3, 3) for _ in range(3)]
            skew = [[0, c12, c13], [-c12, 0, c23], [-c13, -c23, 0]]
            c0 = space.c0
            rows = []
            for i in range(3):
                vec = {i + 1: QONE}
                for j in range(3):
                    vec[-(j + 1)] = rat(skew[i][j]) - c0 * b[i] * b[j]
                vec[0] = rat(b[i])
                rows.append(space.vector(vec))
        else:
            a = [[QZERO] * 4 for _ in range(4)]
            for i in range(4):
                for j in range(i + 1, 4):
                    v = rat(rng.randint(-9, 9))
                    a[i][j] = v
                    a[j][i] = -v
            rows = []
            for i in range(4):
                vec = {i + 1: QONE}
                for j in range(4):
                    vec[-(j + 1)] = a[i][j]
                rows.append(space.vector(vec))
        mv = wedge_all([MultiVector.from_vector(r, kind) for r in rows])
        dense = [QZERO] * len(ctx.coords)
        for key, c in mv.terms.items():
            dense[ctx.coord_pos[key]] = c
        dense = linalg.scale_to_integers(dense)
        # normalize the leading sign for reproducible reports
        for x in dense:
            if x:
                if x < 0:
                    dense = tuple(-y for y in dense)
                break
        points.append(tuple(int(x) for x in dense))
    return points


# ---------------------------------------------------------------------------
# linear and quadratic forms over Plücker coordinates


@dataclass
class LinearForm:
    ctx: VarietyContext
    coeffs: dict  # index set -> Q

    def evaluate(self, point):
        pos = self.ctx.coord_pos
        return sum(
            (c * point[pos[k]] for k, c in self.coeffs.items()), QZERO
        )

    def weight(self):
        ws = {index_set_weight(self.ctx.space, k) for k in self.coeffs}
        return ws.pop() if len(ws) == 1 else "mixed"

    def to_json_dict(self):
        pos = self.ctx.coord_pos
        items = sorted(self.coeffs.items(), key=lambda kv: pos[kv[0]])
        w = self.weight()
        return {
            "coeffs": [
                {"indices": list(k), "coeff": rat_str(c)} for k, c in items
            ],
            "weight": list(w) if w != "mixed" else "mixed",
        }


@dataclass
class Quadric:
    """Symmetric quadratic form over Plücker coordinates, stored sparsely as
    monomial coefficients {(A, B): c} with A <= B in coordinate order."""

    ctx: VarietyContext
    terms: dict

    def evaluate(self, point):
        pos = self.ctx.coord_pos
        total = QZERO
        for (a, b), c in self.terms.items():
            xa = point[pos[a]]
            if not xa:
                continue
            xb = point[pos[b]]
            if xb:
                total = total + c * xa * xb
        return total

    def weight(self):
        space = self.ctx.space
        ws = {
            tuple(
                x + y
                for x, y in zip(
                    index_set_weight(space, a), index_set_weight(space, b)
                )
            )
            for a, b in self.terms
        }
        return ws.pop() if len(ws) == 1 else "mixed"

    def rank(self) -> int:
        """Rank of the symmetric Gram matrix of the form."""
        support = sorted(
            {a for a, _ in self.terms} | {b for _, b in self.terms},
            key=lambda k: self.ctx.coord_pos[k],
        )
        idx = {k: i for i, k in enumerate(support)}
        n = len(support)
        sym = [[QZERO] * n for _ in range(n)]
        half = Q(1, 2)
        for (a, b), c in self.terms.items():
            if a == b:
                sym[idx[a]][idx[a]] = c
            else:
                sym[idx[a]][idx[b]] = c * half
                sym[idx[b]][idx[a]] = c * half
        return linalg.rank(sym)

    def to_json_dict(self):
        pos = self.ctx.coord_pos
        items = sorted(
            self.terms.items(), key=lambda kv: (pos[kv[0][0]], pos[kv[0][1]])
        )
        w = self.weight()
        return {
            "monomials": [
                {"a": list(a), "b": list(b), "coeff": rat_str(c)}
                for (a, b), c in items
            ],
            "rank": self.rank(),
            "weight": list(w) if w != "mixed" else "mixed",
        }

    @classmethod
    def from_json_dict(cls, ctx, data):
        terms = {}
        for idx, mono in enumerate(data["monomials"]):
            try:
                a = tuple(int(x) for x in mono["a"])
                b = tuple(int(x) for x in mono["b"])
                c = rat(mono["coeff"])
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"malformed monomial {idx}: {exc}") from exc
            if a not in ctx.coord_pos or b not in ctx.coord_pos:
                raise ValueError(f"malformed monomial {idx}: unknown index set")
            key = (a, b) if ctx.coord_pos[a] <= ctx.coord_pos[b] else (b, a)
            terms[key] = terms.get(key, QZERO) + c
        return cls(ctx, {k: v for k, v in terms.items() if v})


def quadric_from_tuples(ctx: VarietyContext, monomials):
    """Quadric from ((tuple_a, tuple_b, coeff), ...) with index tuples in any
    written order; sorting signs are applied per tuple."""
    pos = label_positions(ctx.space.dim, ctx.space.kind)
    terms = {}
    for a_tup, b_tup, coeff in monomials:
        a_key, a_sign = sort_labels(tuple(a_tup), pos)
        b_key, b_sign = sort_labels(tuple(b_tup), pos)
        if a_key is None or b_key is None:
            raise ValueError("repeated label inside an index tuple")
        c = rat(coeff) * a_sign * b_sign
        key = (
            (a_key, b_key)
            if ctx.coord_pos[a_key] <= ctx.coord_pos[b_key]
            else (b_key, a_key)
        )
        terms[key] = terms.get(key, QZERO) + c
    return Quadric(ctx, {k: v for k, v in terms.items() if v})


def reference_quadrics(variety: str):
    """Known rank-<=4 generating quadrics used to cross-check the pipeline."""
    ctx = VarietyContext.make(variety)
    if ctx.name == "iso37":
        data = [
            # x_{0,1,2}^2 + 2 x_{1,2,3} x_{1,2,-3}
            [((0, 1, 2), (0, 1, 2), 1), ((1, 2, 3), (1, 2, -3), 2)],
            # x_{0,1,2}(x_{1,2,-2} + x_{1,3,-3}) + 2 x_{1,2,3} x_{0,1,-3}
            [
                ((0, 1, 2), (1, 2, -2), 1),
                ((0, 1, 2), (1, 3, -3), 1),
                ((1, 2, 3), (0, 1, -3), 2),
            ],
            # x_{0,1,3} x_{0,1,-3} + x_{0,1,2} x_{0,1,-2}
            [((0, 1, 3), (0, 1, -3), 1), ((0, 1, 2), (0, 1, -2), 1)],
            # x_{1,2,3}(x_{0,1,-1}+x_{0,2,-2}-x_{0,3,-3})
            #   + x_{0,1,2}(x_{2,3,-2}+x_{1,3,-1})
            [
                ((1, 2, 3), (0, 1, -1), 1),
                ((1, 2, 3), (0, 2, -2), 1),
                ((1, 2, 3), (0, 3, -3), -1),
                ((0, 1, 2), (2, 3, -2), 1),
                ((0, 1, 2), (1, 3, -1), 1),
            ],
            # x_{0,1,-1}^2 - (x_{0,2,-2}+x_{0,3,-3})^2
            #   + 2(x_{1,3,-3}+x_{1,2,-2})(x_{3,-1,-3}+x_{2,-1,-2})
            [
                ((0, 1, -1), (0, 1, -1), 1),
                ((0, 2, -2), (0, 2, -2), -1),
                ((0, 2, -2), (0, 3, -3), -2),
                ((0, 3, -3), (0, 3, -3), -1),
                ((1, 3, -3), (3, -1, -3), 2),
                ((1, 3, -3), (2, -1, -2), 2),
                ((1, 2, -2), (3, -1, -3), 2),
                ((1, 2, -2), (2, -1, -2), 2),
            ],
        ]
    else:
        data = [
            # x_{1,2,3,-3}^2 - x_{1,2,3,4} x_{1,2,-3,-4}
            [
                ((1, 2, 3, -3), (1, 2, 3, -3), 1),
                ((1, 2, 3, 4), (1, 2, -3, -4), -1),
            ],
            # 2 x_{1,2,3,-3} x_{1,3,4,-1}
            #   - x_{1,2,3,4}(x_{1,2,-1,-2} - x_{1,3,-1,-3} - x_{1,4,-1,-4})
            [
                ((1, 2, 3, -3), (1, 3, 4, -1), 2),
                ((1, 2, 3, 4), (1, 2, -1, -2), -1),
                ((1, 2, 3, 4), (1, 3, -1, -3), 1),
                ((1, 2, 3, 4), (1, 4, -1, -4), 1),
            ],
            # (x_{1,4,-1,-4}+x_{2,4,-2,-4}-x_{3,4,-3,-4})^2
            #   - 4 x_{3,4,-1,-2} x_{1,2,-3,-4}
            [
                ((1, 4, -1, -4), (1, 4, -1, -4), 1),
                ((2, 4, -2, -4), (2, 4, -2, -4), 1),
                ((3, 4, -3, -4), (3, 4, -3, -4), 1),
                ((1, 4, -1, -4), (2, 4, -2, -4), 2),
                ((1, 4, -1, -4), (3, 4, -3, -4), -2),
                ((2, 4, -2, -4), (3, 4, -3, -4), -2),
                ((3, 4, -1, -2), (1, 2, -3, -4), -4),
            ],
        ]
    return [quadric_from_tuples(ctx, monos) for monos in data]


# ---------------------------------------------------------------------------
# modular elimination helpers


def _modp_rref(matrix_rows, p):
    """Vectorized rref mod p.  Returns (rank, pivot_cols, pivot_row_ids,
    reduced) where pivot_row_ids index into the input row list."""
    a = np.array([[x % p for x in row] for row in matrix_rows], dtype=np.int64)
    m, n = a.shape
    order = np.arange(m)
    r = 0
    piv_cols = []
    for c in range(n):
        if r >= m:
            break
        col = a[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
            order[[r, i]] = order[[i, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        col_vals = a[:, c].copy()
        col_vals[r] = 0
        mask = col_vals != 0
        if mask.any():
            a[mask] = (a[mask] - np.outer(col_vals[mask], a[r])) % p
        piv_cols.append(c)
        r += 1
    return r, piv_cols, [int(x) for x in order[:r]], a[:r]


def _modp_kernel(matrix_rows, p):
    """Canonical kernel basis mod p (one vector per free column)."""
    rank, piv_cols, _, red = _modp_rref(matrix_rows, p)
    n = len(matrix_rows[0])
    piv_set = set(piv_cols)
    free = [c for c in range(n) if c not in piv_set]
    vecs = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for r, pc in enumerate(piv_cols):
            x = int(red[r, fc])
            if x:
                v[pc] = (-x) % p
        vecs.append(v)
    return free, vecs


def _crt_pair(r1, p1, r2, p2):
    inv = pow(p1 % p2, p2 - 2, p2)
    t = ((r2 - r1) * inv) % p2
    return r1 + p1 * t


def _rational_reconstruct(u, m):
    """p/q with u*q = p (mod m), |p|, q <= sqrt(m/2); None on failure."""
    u %= m
    bound = isqrt(m // 2)
    r0, r1 = m, u
    t0, t1 = 0, 1
    while r1 > bound:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        t0, t1 = t1, t0 - qt * t1
    if t1 == 0 or abs(t1) > bound or gcd(abs(t1), m) != 1:
        return None
    num, den = r1, t1
    if den < 0:
        num, den = -num, -den
    return Q(num, den)


def _exact_kernel(rows, ncols, primes=PRIMES):
    """Certified exact kernel of integer rows.

    The kernel is computed mod two primes, CRT-combined, reconstructed to
    rationals, and certified: each candidate is verified exactly against
    the pivot rows (whose mod-p rank lower-bounds the rational rank, so the
    independent exact-vanishing candidates must span the whole kernel).
    Returns (kernel_vectors, pivot_row_ids).
    """
    for attempt in range(len(primes) - 1):
        p1, p2 = primes[attempt], primes[attempt + 1]
        rank1, piv_cols1, piv_rows1, _ = _modp_rref(rows, p1)
        free1, k1 = _modp_kernel(rows, p1)
        free2, k2 = _modp_kernel(rows, p2)
        if free1 != free2:
            continue
        m = p1 * p2
        candidates = []
        ok = True
        for v1, v2 in zip(k1, k2):
            vec = []
            for x1, x2 in zip(v1, v2):
                q = _rational_reconstruct(_crt_pair(x1, p1, x2, p2), m)
                if q is None:
                    ok = False
                    break
                vec.append(q)
            if not ok:
                break
            candidates.append(linalg.scale_to_integers(vec))
        if not ok:
            continue
        pivot_rows = [rows[i] for i in piv_rows1]
        if not _verify_kernel(pivot_rows, candidates):
            continue
        # mod-p rank of pivot rows = rank1 <= rational rank of those rows,
        # so their kernel has dim <= ncols - rank1 = len(candidates); the
        # candidates are independent (echelon pattern), hence they span it.
        return candidates, piv_rows1
    raise PipelineError("modular kernel reconstruction failed for all primes")


def _verify_kernel(rows, candidates) -> bool:
    """Exact check rows @ candidate = 0, vectorized when bounds allow."""
    if not candidates:
        return True
    max_row = max((max(abs(x) for x in r) for r in rows), default=0)
    max_c = 0
    for c in candidates:
        for x in c:
            max_c = max(max_c, abs(int(x)))
    n = len(rows[0])
    if max_row and max_c and max_row * max_c * n < 2**62:
        a = np.array(rows, dtype=np.int64)
        b = np.array(
            [[int(x) for x in c] for c in candidates], dtype=np.int64
        ).T
        return not np.any(a @ b)
    for c in candidates:
        ci = [int(x) for x in c]
        for r in rows:
            if sum(a * b for a, b in zip(r, ci)):
                return False
    return True


# ---------------------------------------------------------------------------
# degree parts


@dataclass
class DegreeParts:
    ctx: VarietyContext
    linear: list  # LinearForm, weight-homogeneous echelon basis
    quadrics: list  # Quadric basis of I2 in the reduced coordinates
    free_coords: tuple  # index sets surviving the linear substitution
    substitution: dict  # pivot index set -> {free index set: Q}
    n_points: int
    n_holdout: int

    @property
    def dim_linear(self):
        return len(self.linear)

    @property
    def dim_i2(self):
        return len(self.quadrics)


def _weight_split_rows(ctx, rows):
    """Split kernel rows into weight-homogeneous components, re-echelonized.

    Works because the span is stable under the torus, so the weight
    components of any member stay inside the span.
    """
    space = ctx.space
    coords = ctx.coords
    pieces = []
    for row in rows:
        by_weight = {}
        for i, c in enumerate(row):
            if c:
                w = index_set_weight(space, coords[i])
                by_weight.setdefault(w, [QZERO] * len(coords))[i] = c
        pieces.extend(by_weight.values())
    reduced, _ = linalg.rref(pieces)
    return [tuple(r) for r in reduced]


def degree_parts(points, variety: str = None, ctx: VarietyContext = None):
    """Linear forms and quadrics vanishing on the sampled points.

    The last 100 points are reserved as an exact-vanishing holdout; the
    construction rank must agree between the first half of the remaining
    points and all of them, otherwise InsufficientSamplesError is raised.
    """
    if ctx is None:
        ctx = VarietyContext.make(variety)
    ncoords = len(ctx.coords)
    n_monomials = comb(ncoords + 1, 2)
    if len(points) - 100 < 3 * n_monomials and len(points) <= 100:
        raise ValueError("need at least 100 holdout points plus samples")
    holdout = points[-100:]
    build = points[:-100]
    if len(build) < 3 * n_monomials:
        raise ValueError(
            f"need at least 3x{n_monomials} construction points, got {len(build)}"
        )

    # --- linear part -------------------------------------------------------
    p0 = PRIMES[0]
    lin_probe = build[: min(len(build), 2 * ncoords + 50)]
    rank_l, _, piv_rows_l, _ = _modp_rref(lin_probe, p0)
    sel = [lin_probe[i] for i in piv_rows_l]
    lin_kernel = linalg.nullspace(
        [[rat(x) for x in r] for r in sel], ncoords
    ) if sel else []
    lin_rows = _weight_split_rows(ctx, lin_kernel) if lin_kernel else []
    linear_forms = [
        LinearForm(
            ctx,
            {ctx.coords[i]: c for i, c in enumerate(row) if c},
        )
        for row in lin_rows
    ]
    for form in linear_forms:
        if form.weight() == "mixed":
            raise PipelineError("linear form failed weight splitting")
        for pt in points:
            if form.evaluate(pt):
                raise PipelineError("linear form does not vanish on samples")

    # --- substitution ------------------------------------------------------
    substitution = {}
    pivot_sets = set()
    for row in lin_rows:
        lead = next(i for i, c in enumerate(row) if c)
        piv = ctx.coords[lead]
        pivot_sets.add(piv)
        substitution[piv] = {
            ctx.coords[i]: -c for i, c in enumerate(row) if c and i != lead
        }
    free_coords = tuple(c for c in ctx.coords if c not in pivot_sets)
    free_pos = {c: i for i, c in enumerate(free_coords)}
    nfree = len(free_coords)
    keep = [ctx.coord_pos[c] for c in free_coords]

    # --- quadratic part ----------------------------------------------------
    monomials = [
        (i, j) for i in range(nfree) for j in range(i, nfree)
    ]
    n_mono = len(monomials)
    need = n_mono + 200

    def e2_rows(pts):
        rows = []
        for pt in pts:
            red = [pt[i] for i in keep]
            rows.append([red[i] * red[j] for i, j in monomials])
        return rows

    probe = build[: min(len(build), need)]
    rows_a = e2_rows(probe[: len(probe) // 2])
    rows_b = e2_rows(probe)
    rank_a = _modp_rref(rows_a, p0)[0]
    rank_b = _modp_rref(rows_b, p0)[0]
    if rank_a != rank_b:
        raise InsufficientSamplesError(
            f"rank did not stabilize across two batches ({rank_a} vs {rank_b})"
        )
    kernel, _ = _exact_kernel(rows_b, n_mono)

    # verify the remaining construction points modulo two small primes
    rest = build[len(probe):]
    if rest and kernel:
        for p in VERIFY_PRIMES:
            kk = np.array(
                [[int(x) % p for x in v] for v in kernel], dtype=np.int64
            ).T
            for start in range(0, len(rest), 512):
                chunk = e2_rows(rest[start : start + 512])
                a = np.array([[x % p for x in r] for r in chunk], dtype=np.int64)
                # entries < 2^20 so a full int64 matmul stays exact
                if np.any((a @ kk) % p):
                    raise PipelineError("kernel fails on construction points")

    quads = []
    for vec in kernel:
        terms = {}
        for (i, j), c in zip(monomials, vec):
            if c:
                terms[(free_coords[i], free_coords[j])] = c
        quads.append(Quadric(ctx, terms))
    # weight-split the quadrics, re-echelonized per weight
    quads = _weight_split_quadrics(ctx, quads, free_pos)
    for q in quads:
        for pt in holdout:
            if q.evaluate(pt):
                raise PipelineError("quadric fails exact holdout check")
    for form in linear_forms:
        for pt in holdout:
            if form.evaluate(pt):
                raise PipelineError("linear form fails exact holdout check")
    return DegreeParts(
        ctx=ctx,
        linear=linear_forms,
        quadrics=quads,
        free_coords=free_coords,
        substitution=substitution,
        n_points=len(build),
        n_holdout=len(holdout),
    )


def monomial_weight(ctx, key):
    a, b = key
    return tuple(
        x + y
        for x, y in zip(
            index_set_weight(ctx.space, a), index_set_weight(ctx.space, b)
        )
    )


def _weight_split_quadrics(ctx, quads, free_pos):
    """Split each quadric by monomial weight and re-echelonize per weight."""
    def key_order(key):
        return (free_pos[key[0]], free_pos[key[1]])

    by_weight = {}
    for q in quads:
        pieces = {}
        for key, c in q.terms.items():
            pieces.setdefault(monomial_weight(ctx, key), {})[key] = c
        for w, terms in pieces.items():
            by_weight.setdefault(w, []).append(terms)
    out = []
    for w in sorted(by_weight, reverse=True):
        ech = Echelon(key_order)
        for terms in by_weight[w]:
            ech.insert(terms)
        out.extend(Quadric(ctx, dict(v)) for v in ech.vectors())
    return out


class Echelon:
    """Sparse echelon structure over monomial keys for exact span tracking."""

    def __init__(self, key_order):
        self.key_order = key_order
        self.rows = {}  # leading key -> normalized sparse dict

    def _leading(self, vec):
        return min(vec, key=self.key_order)

    def reduce(self, vec):
        vec = dict(vec)
        while vec:
            lead = self._leading(vec)
            row = self.rows.get(lead)
            if row is None:
                return vec
            c = vec[lead]
            for k, v in row.items():
                s = vec.get(k, QZERO) - c * v
                if s:
                    vec[k] = s
                else:
                    vec.pop(k, None)
        return vec

    def insert(self, vec) -> bool:
        red = self.reduce(vec)
        if not red:
            return False
        lead = self._leading(red)
        inv = QONE / red[lead]
        normalized = {k: v * inv for k, v in red.items()}
        # back-substitute into existing rows to keep reduction canonical
        for lk, row in self.rows.items():
            c = row.get(lead)
            if c:
                for k, v in normalized.items():
                    s = row.get(k, QZERO) - c * v
                    if s:
                        row[k] = s
                    else:
                        row.pop(k, None)
        self.rows[lead] = normalized
        return True

    def contains(self, vec) -> bool:
        return not self.reduce(vec)

    def __len__(self):
        return len(self.rows)

    def vectors(self):
        return [
            dict(self.rows[lead])
            for lead in sorted(self.rows, key=self.key_order)
        ]


# ---------------------------------------------------------------------------
# torus weights and the so action on reduced quadrics


def root_operators(space: QuadraticSpace):
    """(positive_roots, raising, lowering) for the standard split form.

    Roots are returned as integer vectors; under the polynomial action
    convention the matrices raising the coordinate weight by alpha are the
    negative-root elements E_{-alpha}, so raising[i] realizes +roots[i].
    """
    p = space.p
    pos = space.positions
    n = space.dim

    def mat(entries):
        m = [[QZERO] * n for _ in range(n)]
        for lab_to, lab_from, c in entries:
            m[pos[lab_to]][pos[lab_from]] = rat(c)
        return tuple(tuple(r) for r in m)

    def e_plus(i, j):  # E_{eps_i - eps_j}
        return mat([(i, j, 1), (-j, -i, -1)])

    def e_sum(i, j):  # E_{eps_i + eps_j}, i < j
        return mat([(i, -j, 1), (j, -i, -1)])

    def e_negsum(i, j):  # E_{-eps_i - eps_j}, i < j
        return mat([(-j, i, 1), (-i, j, -1)])

    def e_short(i):  # E_{eps_i} (odd dimension)
        return mat([(i, 0, 2 * space.c0), (0, -i, -1)])

    def e_negshort(i):
        return mat([(-i, 0, 2 * space.c0), (0, i, -1)])

    roots = []
    pos_mats = []
    neg_mats = []
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            if i == j:
                continue
            root = [0] * p
            root[i - 1] = 1
            root[j - 1] = -1
            if i < j:
                roots.append(tuple(root))
                pos_mats.append(e_plus(i, j))
                neg_mats.append(e_plus(j, i))
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            root = [0] * p
            root[i - 1] = 1
            root[j - 1] = 1
            roots.append(tuple(root))
            pos_mats.append(e_sum(i, j))
            neg_mats.append(e_negsum(i, j))
    if space.dim % 2:
        for i in range(1, p + 1):
            root = [0] * p
            root[i - 1] = 1
            roots.append(tuple(root))
            pos_mats.append(e_short(i))
            neg_mats.append(e_negshort(i))
    order = sorted(range(len(roots)), key=lambda t: roots[t], reverse=True)
    roots = [roots[t] for t in order]
    pos_mats = [pos_mats[t] for t in order]
    neg_mats = [neg_mats[t] for t in order]
    # raising for the coordinate weight = negative-root matrices
    return roots, neg_mats, pos_mats


def coordinate_action_rows(ctx: VarietyContext, X, parts: DegreeParts):
    """Rows of the induced action on reduced coordinate functions.

    (X . x_A) = -sum_B M[A][B] x_B followed by the linear substitution;
    returns {A: {B: coeff}} over free index sets.
    """
    space = ctx.space
    # columns of the multivector action: lie_act(X, e_B)
    m_rows = {}  # A -> {B: M[A][B]}
    for b_key in ctx.coords:
        img = lie_act(space, X, MultiVector.basis(space.dim, b_key, space.kind))
        for a_key, c in img.terms.items():
            m_rows.setdefault(a_key, {})[b_key] = c
    subst = parts.substitution
    free = set(parts.free_coords)
    out = {}
    for a_key in parts.free_coords:
        row = {}
        for b_key, c in m_rows.get(a_key, {}).items():
            c = -c
            if b_key in free:
                row[b_key] = row.get(b_key, QZERO) + c
            else:
                for f_key, s in subst[b_key].items():
                    row[f_key] = row.get(f_key, QZERO) + c * s
        out[a_key] = {k: v for k, v in row.items() if v}
    return out


def apply_operator(ctx: VarietyContext, rows, terms):
    """Derivation action of one operator on a quadric's sparse terms."""
    pos = ctx.coord_pos
    acc = {}

    def add(a, b, c):
        key = (a, b) if pos[a] <= pos[b] else (b, a)
        s = acc.get(key, QZERO) + c
        if s:
            acc[key] = s
        else:
            acc.pop(key, None)

    for (a, b), c in terms.items():
        for a2, m in rows.get(a, {}).items():
            add(a2, b, c * m)
        for b2, m in rows.get(b, {}).items():
            add(a, b2, c * m)
    return acc


def torus_weight(q: Quadric):
    """Common torus weight of a quadric's monomials, or "mixed"."""
    return q.weight()


def highest_weight_vectors(ctx, parts, weight_basis, raising_rows):
    """Vectors in the span of weight_basis killed by every raising operator.

    weight_basis is a list of sparse term dicts of one fixed weight.
    """
    if not weight_basis:
        return []
    images = []
    for vec in weight_basis:
        per_vec = []
        for rows in raising_rows:
            per_vec.append(apply_operator(ctx, rows, vec))
        images.append(per_vec)
    keys = sorted(
        {
            (t, k)
            for per_vec in images
            for t, img in enumerate(per_vec)
            for k in img
        }
    )
    if not keys:
        return [dict(v) for v in weight_basis]
    key_idx = {k: i for i, k in enumerate(keys)}
    rows = []
    for i in range(len(keys)):
        rows.append([QZERO] * len(weight_basis))
    for j, per_vec in enumerate(images):
        for t, img in enumerate(per_vec):
            for k, c in img.items():
                rows[key_idx[(t, k)]][j] = c
    combos = linalg.nullspace(rows, len(weight_basis))
    out = []
    for combo in combos:
        vec = {}
        for c, basis_vec in zip(combo, weight_basis):
            if c:
                for k, v in basis_vec.items():
                    s = vec.get(k, QZERO) + c * v
                    if s:
                        vec[k] = s
                    else:
                        vec.pop(k, None)
        if vec:
            out.append(vec)
    return out


def lowering_closure(ctx, parts, seeds, lowering_rows, echelon=None):
    """Smallest lowering-stable subspace containing the seeds.

    Maintains an exact echelon; every vector that enlarges the span is
    queued and hit with each lowering operator until a fixed point.  The
    echelon may be passed in to accumulate across several seeds.
    """
    free_pos = {c: i for i, c in enumerate(parts.free_coords)}

    def key_order(key):
        return (free_pos[key[0]], free_pos[key[1]])

    if echelon is None:
        echelon = Echelon(key_order)
    queue = []
    for s in seeds:
        s = dict(s)
        if echelon.insert(s):
            queue.append(s)
    seen = 0
    while seen < len(queue):
        vec = queue[seen]
        seen += 1
        for rows in lowering_rows:
            img = apply_operator(ctx, rows, vec)
            if img and echelon.insert(img):
                queue.append(img)
    return echelon


def quadric_rank(q: Quadric) -> int:
    return q.rank()


def reduce_quadric(parts: DegreeParts, q: Quadric) -> dict:
    """Substitute the linear relations into a full-coordinate quadric."""
    ctx = parts.ctx
    free = set(parts.free_coords)
    subst = parts.substitution
    pos = ctx.coord_pos

    def expand(key):
        if key in free:
            return {key: QONE}
        return dict(subst[key])

    acc = {}
    for (a, b), c in q.terms.items():
        ea = expand(a)
        eb = expand(b)
        for ka, ca in ea.items():
            for kb, cb in eb.items():
                key = (ka, kb) if pos[ka] <= pos[kb] else (kb, ka)
                s = acc.get(key, QZERO) + c * ca * cb
                if s:
                    acc[key] = s
                else:
                    acc.pop(key, None)
    return acc


def run_rank4_pipeline(variety: str, seed: int = 0, max_iterations: int = 64):
    """Full pipeline: certified I2, torus decomposition, and a generating
    set of rank-<=4 highest weight vectors closed under lowering operators.
    """
    ctx = VarietyContext.make(variety)
    rng = random.Random(f"ideal:{ctx.name}:{seed}")
    n_monomials = comb(len(ctx.coords) + 1, 2)
    count = 4 * n_monomials + 100
    points = sample_variety_points(ctx.name, count, rng)
    try:
        parts = degree_parts(points, ctx=ctx)
    except InsufficientSamplesError:
        points = sample_variety_points(ctx.name, 2 * count, rng)
        parts = degree_parts(points, ctx=ctx)

    free_pos = {c: i for i, c in enumerate(parts.free_coords)}

    def key_order(key):
        return (free_pos[key[0]], free_pos[key[1]])

    roots, raising, lowering = root_operators(ctx.space)
    raising_rows = [coordinate_action_rows(ctx, X, parts) for X in raising]
    lowering_rows = [coordinate_action_rows(ctx, X, parts) for X in lowering]

    # weight decomposition of I2
    by_weight = {}
    for q in parts.quadrics:
        w = q.weight()
        if w == "mixed":
            raise PipelineError("I2 basis failed weight splitting")
        by_weight.setdefault(w, []).append(dict(q.terms))
    dim_i2 = len(parts.quadrics)
    if sum(len(v) for v in by_weight.values()) != dim_i2:
        raise PipelineError("weight decomposition is not a direct sum")

    i2_echelon = Echelon(key_order)
    for q in parts.quadrics:
        i2_echelon.insert(dict(q.terms))

    closure = Echelon(key_order)
    generators = []
    generator_weights = []
    iterations = 0
    while len(closure) < dim_i2:
        iterations += 1
        if iterations > max_iterations:
            missing = _uncovered_weights(ctx, by_weight, closure, key_order)
            raise PipelineError(
                f"closure stalled at dim {len(closure)}/{dim_i2}; "
                f"uncovered weights: {missing}"
            )
        # highest weight space not yet generated: every weight above it in
        # the descending scan is covered, so any fresh vector there is a
        # highest weight vector modulo the closure, and its lowering orbit
        # together with the closure spans a subrepresentation.
        target = None
        for w in sorted(by_weight, reverse=True):
            fresh = [
                v for v in by_weight[w] if not closure.contains(v)
            ]
            if fresh:
                target = (w, fresh)
                break
        if target is None:
            missing = _uncovered_weights(ctx, by_weight, closure, key_order)
            raise PipelineError(
                f"closure incomplete ({len(closure)}/{dim_i2}) with no fresh "
                f"weight vector; uncovered: {missing}"
            )
        w, fresh = target
        covered = [
            dict(row)
            for row in closure.vectors()
            if row and monomial_weight(ctx, next(iter(row))) == w
        ]
        best, best_rank = _minimal_rank_representative(
            ctx, fresh, covered, closure
        )
        generators.append(Quadric(ctx, dict(best)))
        generator_weights.append(list(w))
        lowering_closure(ctx, parts, [best], lowering_rows, echelon=closure)

    listed = reference_quadrics(ctx.name)
    listed_in_i2 = []
    for q in listed:
        reduced = reduce_quadric(parts, q)
        listed_in_i2.append(i2_echelon.contains(reduced))
    ranks = [g.rank() for g in generators]
    certified = all(r <= 4 for r in ranks) and all(listed_in_i2)
    return {
        "variety": ctx.name,
        "seed": seed,
        "n_points": parts.n_points,
        "n_holdout": parts.n_holdout,
        "dim_linear": parts.dim_linear,
        "dim_I2": dim_i2,
        "closure_dim": len(closure),
        "n_weights": len(by_weight),
        "generators": [g.to_json_dict() for g in generators],
        "generator_ranks": ranks,
        "generator_weights": generator_weights,
        "linear": [f.to_json_dict() for f in parts.linear],
        "listed_quadrics_in_I2": listed_in_i2,
        "certified": bool(certified),
    }


def _uncovered_weights(ctx, by_weight, closure, key_order):
    missing = []
    for w, vecs in sorted(by_weight.items(), reverse=True):
        if any(not closure.contains(v) for v in vecs):
            missing.append(list(w))
    return missing


def _combine(vecs_and_coeffs):
    out = {}
    for c, v in vecs_and_coeffs:
        if not c:
            continue
        for k, val in v.items():
            s = out.get(k, QZERO) + c * val
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


_GRID = tuple(
    rat(t)
    for t in (
        1, -1, 2, -2, "1/2", "-1/2", 3, -3, "1/3", "-1/3", "3/2", "-3/2",
        "2/3", "-2/3", 4, -4, "1/4", "-1/4", "5/2", "-5/2", 5, -5,
    )
)


def _sym_matrix(ctx, terms, support):
    idx = {k: i for i, k in enumerate(support)}
    n = len(support)
    sym = [[QZERO] * n for _ in range(n)]
    half = Q(1, 2)
    for (a, b), c in terms.items():
        if a == b:
            sym[idx[a]][idx[a]] = sym[idx[a]][idx[a]] + c
        else:
            sym[idx[a]][idx[b]] = sym[idx[a]][idx[b]] + c * half
            sym[idx[b]][idx[a]] = sym[idx[b]][idx[a]] + c * half
    return sym


def _poly_det(mat):
    """Determinant of a matrix of coefficient lists (polynomials in t)."""

    def pmul(a, b):
        out = [QZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        out[i + j] = out[i + j] + x * y
        return out

    def padd(a, b, sign=1):
        n = max(len(a), len(b))
        out = [QZERO] * n
        for i, x in enumerate(a):
            out[i] = out[i] + x
        for i, y in enumerate(b):
            out[i] = out[i] + (y if sign > 0 else -y)
        return out

    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = [QZERO]
    for j in range(n):
        entry = mat[0][j]
        if not any(entry):
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = pmul(entry, _poly_det(minor))
        total = padd(total, term, 1 if j % 2 == 0 else -1)
    return total


def _pencil_drop_candidates(ctx, base, direction):
    """Rational t candidates where rank(base + t*direction) can drop.

    Takes the nonsingular principal submatrix of the pencil at a generic t,
    expands its determinant as a polynomial in t, and rationalizes its
    numeric roots; every candidate is verified exactly by the caller.
    """
    support = sorted(
        {k for key in list(base) + list(direction) for k in key},
        key=lambda k: ctx.coord_pos[k],
    )
    s0 = _sym_matrix(ctx, base, support)
    s1 = _sym_matrix(ctx, direction, support)
    t_generic = Q(17, 13)
    generic = [
        [a + t_generic * b for a, b in zip(r0, r1)]
        for r0, r1 in zip(s0, s1)
    ]
    reduced, pivots = linalg.rref(generic)
    r = len(reduced)
    if r == 0 or r > 7:
        return []
    cols = pivots
    sub = [
        [[s0[i][j], s1[i][j]] for j in cols] for i in cols
    ]
    poly = _poly_det(sub)
    while poly and not poly[-1]:
        poly.pop()
    if len(poly) <= 1:
        return []
    coeffs = [float(c) for c in poly]
    try:
        roots = np.roots(list(reversed(coeffs)))
    except Exception:
        return []
    from fractions import Fraction as _F

    out = []
    for z in roots:
        if abs(z.imag) > 1e-9:
            continue
        for denom_cap in (12, 1000, 10**6):
            q = _F(float(z.real)).limit_denominator(denom_cap)
            t = Q(q.numerator, q.denominator)
            if t not in out:
                out.append(t)
    return out


def _class_restricted_subspaces(ctx, vectors):
    """Subspaces of span(vectors) supported on few monomial weight classes.

    Monomials are grouped by the unordered pair {wt(A), wt(B)}; low-rank
    quadrics in these ideals concentrate on one or two such classes, so
    restricting the span to class-pair supports exposes them.
    """
    support = sorted(
        {k for v in vectors for k in v},
        key=lambda k: (ctx.coord_pos[k[0]], ctx.coord_pos[k[1]]),
    )
    classes = {}
    for key in support:
        a, b = key
        wa = index_set_weight(ctx.space, a)
        wb = index_set_weight(ctx.space, b)
        cls = (min(wa, wb), max(wa, wb))
        classes.setdefault(cls, set()).add(key)
    class_list = sorted(classes)
    sup_idx = {k: i for i, k in enumerate(support)}
    mat = [[QZERO] * len(support) for _ in vectors]
    for r, v in enumerate(vectors):
        for k, c in v.items():
            mat[r][sup_idx[k]] = c
    out = []
    groups = [(c,) for c in class_list]
    groups += [
        (a, b)
        for i, a in enumerate(class_list)
        for b in class_list[i + 1:]
    ]
    for group in groups:
        sigma = set()
        for cls in group:
            sigma |= classes[cls]
        outside = [i for i, k in enumerate(support) if k not in sigma]
        if not outside:
            continue
        rows = [[mat[r][i] for r in range(len(vectors))] for i in outside]
        combos = linalg.nullspace(rows, len(vectors))
        sub = []
        for combo in combos:
            vec = _combine(list(zip(combo, vectors)))
            if vec:
                sub.append(vec)
        if sub:
            out.append(sub)
    return out


def _minimal_rank_representative(ctx, fresh, covered, closure):
    """Low-rank quadric congruent to a fresh vector modulo the closure.

    Adding covered directions does not change the coset, so the search runs
    over the whole weight space: first subspaces supported on one or two
    monomial weight classes (where the natural low-rank generators live),
    then basis vectors, residues, rational-grid pencils, and exact pencil
    rank drops (polynomial roots of a full-rank minor).  Bounded: the
    certification step downstream checks the achieved ranks.
    """

    def rank_of(vec):
        return Quadric(ctx, vec).rank()

    seen = []
    best, best_rank = None, None

    def consider(vec):
        nonlocal best, best_rank
        if not vec or closure.contains(vec):
            return False
        r = rank_of(vec)
        seen.append((r, vec))
        if best is None or r < best_rank:
            best, best_rank = vec, r
        return r <= 4

    whole = [dict(v) for v in fresh] + [dict(c) for c in covered]
    for sub in _class_restricted_subspaces(ctx, whole):
        for v in sub:
            if consider(v):
                return best, best_rank
        for i, a in enumerate(sub):
            for b in sub[i + 1:]:
                for t in _GRID:
                    if consider(_combine([(QONE, a), (t, b)])):
                        return best, best_rank
                for t in _pencil_drop_candidates(ctx, a, b):
                    if consider(_combine([(QONE, a), (t, b)])):
                        return best, best_rank
    for v in fresh:
        if consider(dict(v)):
            return best, best_rank
        red = closure.reduce(v)
        if red != v and consider(red):
            return best, best_rank
    seen.sort(key=lambda rv: rv[0])
    bases = [vec for _, vec in seen[:3]]
    directions = [dict(c) for c in covered]
    directions += [dict(v) for v in fresh[1:]]
    for base in bases:
        for d in directions:
            if d == base:
                continue
            for t in _GRID:
                if consider(_combine([(QONE, base), (t, d)])):
                    return best, best_rank
            for t in _pencil_drop_candidates(ctx, base, d):
                if consider(_combine([(QONE, base), (t, d)])):
                    return best, best_rank
    # two-direction refinement over the best candidates found so far
    seen.sort(key=lambda rv: rv[0])
    bases = [vec for _, vec in seen[:4]]
    for i, a in enumerate(bases):
        for b in bases[i + 1:]:
            for t in _GRID:
                if consider(_combine([(QONE, a), (t, b)])):
                    return best, best_rank
            for t in _pencil_drop_candidates(ctx, a, b):
                if consider(_combine([(QONE, a), (t, b)])):
                    return best, best_rank
    return best, best_rank
