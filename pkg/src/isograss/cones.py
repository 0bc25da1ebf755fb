"""Grassmann and isotropic Grassmann cone membership.

Membership in the Grassmann cone is decided by the classical shuffle
(straightening) relations: for every index set I of size k-1 and J of size
k+1, the quadric sum_{a in J} +- x_{I ∪ a} x_{J \\ a} vanishes exactly on
decomposable forms.  Relations are generated combinatorially, deduplicated,
and cached per (grade, dimension, label kind).

Evaluation clears denominators first and runs over plain integers, which
keeps the 500-sample property suites and the witness searches fast.
"""

import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import gcd

import numpy as np

from . import linalg
from .exterior import (
    HYPERBOLIC,
    MultiVector,
    canonical_labels,
    contract,
    dual_covector,
    wedge_all,
)
from .quadratic import QuadraticSpace, Subspace, is_isotropic_subspace
from .rationals import Q, QZERO


# pairwise products stay below 2^62 in int64 arithmetic
_BIG_PRIMES = (2147483647, 2147483629, 2147483587, 2147483563, 2147483549)


@dataclass(frozen=True)
class PluckerRelation:
    """Quadric sum of signed coordinate products vanishing on the cone."""

    k: int
    n: int
    kind: str
    terms: tuple  # ((index_set_a, index_set_b, int_coeff), ...)

    def evaluate(self, coeff_of):
        total = QZERO
        for a, b, c in self.terms:
            xa = coeff_of(a)
            if not xa:
                continue
            xb = coeff_of(b)
            if xb:
                total = total + c * xa * xb
        return total

    def evaluate_int(self, terms_dict):
        """Evaluation over a {index_set: int} dict; missing keys are 0."""
        total = 0
        get = terms_dict.get
        for a, b, c in self.terms:
            xa = get(a)
            if not xa:
                continue
            xb = get(b)
            if xb:
                total += c * xa * xb
        return total

    def to_json_dict(self):
        return {
            "k": self.k,
            "n": self.n,
            "labels": self.kind,
            "terms": [
                {"a": list(a), "b": list(b), "coeff": c}
                for a, b, c in self.terms
            ],
        }


def _insert_sorted(base_positions, extra):
    """Insert a position into an increasing tuple; (tuple, sign) or repeat."""
    out = []
    sign = 1
    placed = False
    for i, x in enumerate(base_positions):
        if x == extra:
            return None, 0
        if not placed and extra < x:
            out.append(extra)
            if (len(base_positions) - i) & 1:
                sign = -sign
            placed = True
        out.append(x)
    if not placed:
        out.append(extra)
    return tuple(out), sign


@lru_cache(maxsize=None)
def plucker_relations(k: int, n: int, kind: str = HYPERBOLIC):
    """Full deduplicated shuffle relation family for grade k in dimension n."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    labels = canonical_labels(n, kind)
    positions = list(range(n))
    seen = set()
    out = []
    for i_pos in combinations(positions, k - 1):
        for j_pos in combinations(positions, k + 1):
            acc = {}
            for l, a in enumerate(j_pos):
                first, sign = _insert_sorted(i_pos, a)
                if first is None:
                    continue
                second = j_pos[:l] + j_pos[l + 1:]
                coeff = sign if l % 2 == 0 else -sign
                key = (first, second) if first <= second else (second, first)
                acc[key] = acc.get(key, 0) + coeff
            terms = sorted(
                (a, b, c) for (a, b), c in acc.items() if c
            )
            if not terms:
                continue
            g = 0
            for _, _, c in terms:
                g = gcd(g, abs(c))
            lead = terms[0][2]
            norm = g if lead > 0 else -g
            terms = tuple((a, b, c // norm) for a, b, c in terms)
            if terms in seen:
                continue
            seen.add(terms)
            out.append(
                PluckerRelation(
                    k,
                    n,
                    kind,
                    tuple(
                        (
                            tuple(labels[x] for x in a),
                            tuple(labels[x] for x in b),
                            c,
                        )
                        for a, b, c in terms
                    ),
                )
            )
    return tuple(out)


def integer_terms(omega: MultiVector) -> dict:
    """Coefficients scaled to coprime integers (cone membership is
    invariant under scaling)."""
    if not omega.terms:
        return {}
    dens = [c.denominator for c in omega.terms.values()]
    lcm = 1
    for d in dens:
        lcm = lcm * d // gcd(lcm, d)
    ints = {k: int(c * lcm) for k, c in omega.terms.items()}
    g = 0
    for v in ints.values():
        g = gcd(g, abs(v))
    if g > 1:
        ints = {k: v // g for k, v in ints.items()}
    return ints


@lru_cache(maxsize=None)
def _relation_arrays(k, n, kind):
    """Flat index arrays for vectorized evaluation of the whole family."""
    rels = plucker_relations(k, n, kind)
    coord_index = {
        key: i for i, key in enumerate(combinations(canonical_labels(n, kind), k))
    }
    a_idx, b_idx, signs, rel_ids = [], [], [], []
    max_terms = 1
    for rid, rel in enumerate(rels):
        max_terms = max(max_terms, len(rel.terms))
        for a, b, c in rel.terms:
            a_idx.append(coord_index[a])
            b_idx.append(coord_index[b])
            signs.append(c)
            rel_ids.append(rid)
    return (
        coord_index,
        np.array(a_idx, dtype=np.int64),
        np.array(b_idx, dtype=np.int64),
        np.array(signs, dtype=np.int64),
        np.array(rel_ids, dtype=np.int64),
        len(rels),
        max_terms,
    )


def failing_relation(omega: MultiVector):
    """First shuffle relation not vanishing at omega, or None.

    Evaluation runs vectorized over the whole family in exact int64
    arithmetic when the coefficient bound allows, with a pure-Python exact
    fallback otherwise.
    """
    if not omega.terms:
        return None
    ints = integer_terms(omega)
    rels = plucker_relations(omega.grade, omega.dim, omega.kind)
    coord_index, a_idx, b_idx, signs, rel_ids, nrels, max_terms = (
        _relation_arrays(omega.grade, omega.dim, omega.kind)
    )
    if not nrels:
        return None
    bound = max(abs(v) for v in ints.values())
    sign_bound = int(max(signs.max(), -signs.min()))
    value_bound = max_terms * sign_bound * bound * bound
    if value_bound < 2**62:
        dense = np.zeros(len(coord_index), dtype=np.int64)
        for key, v in ints.items():
            dense[coord_index[key]] = v
        prods = dense[a_idx] * dense[b_idx] * signs
        values = np.zeros(nrels, dtype=np.int64)
        np.add.at(values, rel_ids, prods)
        bad = np.nonzero(values)[0]
        if bad.size == 0:
            return None
        return rels[int(bad[0])]
    # large coefficients: a relation vanishing modulo enough primes that
    # their product exceeds twice the value bound vanishes exactly
    candidates = set()
    modulus = 1
    for p in _BIG_PRIMES:
        dense = np.zeros(len(coord_index), dtype=np.int64)
        for key, v in ints.items():
            dense[coord_index[key]] = v % p
        prods = (dense[a_idx] * dense[b_idx]) % p
        prods = (prods * (signs % p)) % p
        values = np.zeros(nrels, dtype=np.int64)
        np.add.at(values, rel_ids, prods)
        values %= p
        candidates.update(int(i) for i in np.nonzero(values)[0])
        modulus *= p
        if modulus > 2 * value_bound:
            break
    for rid in sorted(candidates):
        if rels[rid].evaluate_int(ints):
            return rels[rid]
    return None


def in_grassmann_cone(omega: MultiVector) -> bool:
    """Set-theoretic membership in the cone of decomposable forms."""
    if not omega.terms:
        return True
    if omega.grade in (0, 1, omega.dim):
        return True
    return failing_relation(omega) is None


class NotDecomposableError(ValueError):
    pass


def extract_subspace(omega: MultiVector, space: QuadraticSpace) -> Subspace:
    """The subspace L_omega spanned by the factors of a decomposable form.

    Picks an index set I0 with nonzero coefficient and contracts omega by
    the dual covectors of each (k-1)-subset of I0; the resulting k vectors
    span L_omega.  The wedge of the result is checked to be proportional to
    omega, which certifies decomposability.
    """
    if not omega.terms:
        raise NotDecomposableError("zero multivector has no subspace")
    k = omega.grade
    i0 = max(omega.terms, key=lambda key: abs(omega.terms[key]))
    covs = {lab: dual_covector(omega.dim, lab, omega.kind) for lab in i0}
    vectors = []
    for drop in range(k):
        rest = i0[:drop] + i0[drop + 1:]
        cur = omega
        for lab in rest:
            cur = contract(covs[lab], cur)
        vectors.append(cur.to_vector())
    sub = Subspace(space, vectors)
    if sub.dim != k:
        raise NotDecomposableError("contracted factors are dependent")
    recomposed = wedge_all(
        [MultiVector.from_vector(r, omega.kind) for r in sub.rows]
    )
    key = next(iter(recomposed.terms))
    base = recomposed.terms[key]
    target = omega.terms.get(key)
    if not target:
        raise NotDecomposableError("input is not decomposable")
    factor = target / base
    if recomposed.scale(factor) != omega:
        raise NotDecomposableError("input is not decomposable")
    return sub


def in_isotropic_cone(space: QuadraticSpace, omega: MultiVector) -> bool:
    """omega is zero, or decomposable with isotropic span."""
    if not omega.terms:
        return True
    if not in_grassmann_cone(omega):
        return False
    sub = extract_subspace(omega, space)
    return is_isotropic_subspace(space, sub)


def isotropy_failure(space: QuadraticSpace, sub: Subspace):
    """A pair of basis rows with nonzero pairing, or None."""
    rows = sub.rows
    covs = [space.gram_times(r) for r in rows]
    for i, u in enumerate(rows):
        for j in range(i, len(rows)):
            val = linalg.dot(covs[j], u)
            if val:
                return rows[i], rows[j], val
    return None


def random_isotropic_rows(space: QuadraticSpace, k: int, rng: random.Random):
    """Rows of a random isotropic k-frame, built through quotient recursion."""
    from .igcp import quotient_space
    from .quadratic import random_isotropic_vector

    if k > space.p:
        raise ValueError(f"no isotropic subspace of dimension {k} (p={space.p})")
    if k == 0:
        return []
    v = random_isotropic_vector(space, rng)
    if k == 1:
        return [v]
    qs = quotient_space(space, v)
    inner = random_isotropic_rows(qs.space, k - 1, rng)
    # content-reduce the lifts: spans are scale invariant and small integer
    # coordinates keep the downstream exact arithmetic fast
    return [v] + [
        linalg.scale_to_integers(qs.lift_vector(r)) for r in inner
    ]


def random_isotropic_frame(space: QuadraticSpace, k: int, rng: random.Random):
    """v_1 ^ ... ^ v_k with isotropic span, deterministic given the rng."""
    rows = random_isotropic_rows(space, k, rng)
    return wedge_all([MultiVector.from_vector(r, space.kind) for r in rows])


def random_non_cone_form(
    space: QuadraticSpace, grade: int, rng: random.Random, terms=None
):
    """Random sparse form outside the isotropic Grassmann cone.

    Rejection-samples sparse coefficient patterns; for grade 2 starts from
    e_1^e_2 + e_3^e_4, which already has rank 4, to avoid rejection loops.
    """
    labels = canonical_labels(space.dim, space.kind)
    keysets = list(combinations(labels, grade))
    nterms = terms or grade + 2
    while True:
        mv = MultiVector.zero(space.dim, grade, space.kind)
        if grade == 2 and space.dim >= 4:
            a, b, c, d = labels[:4]
            mv = MultiVector.basis(space.dim, (a, b), space.kind) + (
                MultiVector.basis(space.dim, (c, d), space.kind)
            )
        for key in rng.sample(keysets, min(nterms, len(keysets))):
            c = rng.randint(-9, 9)
            if c:
                mv = mv + MultiVector(space.dim, grade, space.kind, {key: Q(c)})
        if mv.terms and not in_isotropic_cone(space, mv):
            return mv
