"""Quotient spaces, the Phi_v cone-preserving maps, and the witness search.

For a nonzero isotropic v, the quotient V_v = v-perp / <v> is realized
concretely: we pick a hyperbolic partner w of v and identify V_v with
T = {v, w}-perp.  The representative basis of T is itself a hyperbolic
basis, so quotients can be iterated.  Phi_v contracts by <v, .> and then
pushes every factor through the projection onto T along span{v, w}.

The witness search drives the empirical side of the universality statement:
for a p-form omega outside the isotropic cone (dim > 8), some isotropic v
has Phi_v(omega) outside the smaller cone.  The search tries the structured
vectors that appear in the constructive arguments (basis vectors, signed
pairs, the e_0 combinations, and the same family in a basis adapted to
omega) before falling back to seeded random isotropic vectors.
"""

import random
from dataclasses import dataclass
from itertools import combinations

from . import linalg
from .exterior import (
    HYPERBOLIC,
    MultiVector,
    contract,
    label_positions,
    push_through_map,
    wedge,
)
from .cones import (
    extract_subspace,
    failing_relation,
    in_grassmann_cone,
    in_isotropic_cone,
    integer_terms,
    isotropy_failure,
    random_isotropic_frame,
    random_non_cone_form,
)
from .quadratic import (
    QuadraticSpace,
    Subspace,
    bilinear,
    common_hyperbolic_basis,
    complete_hyperbolic,
    is_isotropic,
    random_isotropic_vector,
)
from .rationals import QZERO, rat_str


class QuotientSpaceError(ValueError):
    pass


class QuotientSpace:
    """V_v = v-perp / <v> realized as {v, w}-perp with hyperbolic coordinates.

    rep_rows holds representative vectors for the induced basis in canonical
    order (f_1, f_-1, ..., f_(p-1), f_-(p-1), (f_0)); the induced space is
    standard hyperbolic of dimension dim V - 2.
    """

    __slots__ = ("parent", "v", "w", "rep_rows", "space", "_basis", "_proj_cache")

    def __init__(self, parent, v, w, rep_rows, space):
        self.parent = parent
        self.v = v
        self.w = w
        self.rep_rows = rep_rows
        self.space = space
        self._basis = linalg.RowBasis(rep_rows)
        self._proj_cache = None

    def project_point(self, u):
        """P(u) = u - <w,u> v - <v,u> w, the projection onto T."""
        parent = self.parent
        a = bilinear(parent, self.w, u)
        b = bilinear(parent, self.v, u)
        return tuple(
            x - a * y - b * z for x, y, z in zip(u, self.v, self.w)
        )

    def project_vector(self, u):
        """Coordinates of the class of u in the induced space."""
        coords = self._basis.express(self.project_point(u))
        if coords is None:
            raise QuotientSpaceError("projection left the representative span")
        return coords

    def lift_vector(self, coords):
        """Representative in V of an induced-space coordinate vector."""
        out = [QZERO] * self.parent.dim
        for c, row in zip(coords, self.rep_rows):
            if c:
                for j, x in enumerate(row):
                    if x:
                        out[j] = out[j] + c * x
        return tuple(out)

    def projected_basis_images(self):
        """Sparse induced images of the parent basis vectors, by label:
        label -> tuple of (quotient position, coefficient)."""
        if self._proj_cache is None:
            images = {}
            for lab in self.parent.labels:
                coords = self.project_vector(self.parent.basis_vector(lab))
                images[lab] = tuple(
                    (i, c) for i, c in enumerate(coords) if c
                )
            self._proj_cache = images
        return self._proj_cache

    def project_subspace(self, sub) -> Subspace:
        rows = sub.rows if isinstance(sub, Subspace) else sub
        out = []
        for r in rows:
            if bilinear(self.parent, self.v, r):
                raise QuotientSpaceError("subspace is not contained in v-perp")
            out.append(self.project_vector(r))
        return Subspace(self.space, out)


def quotient_space(space: QuadraticSpace, v, w=None) -> QuotientSpace:
    """Build V_v with an explicit hyperbolic representative basis.

    The maximal isotropic W = span{e_1..e_p} is pushed through the
    projection to give a maximal isotropic of T, which is completed to a
    hyperbolic basis inside T; this keeps the induced Gram matrix standard
    and the construction recursion friendly.
    """
    if not any(v):
        raise QuotientSpaceError("v must be nonzero")
    if bilinear(space, v, v):
        raise QuotientSpaceError("v must be isotropic")
    if space.kind != HYPERBOLIC:
        raise QuotientSpaceError("quotients require a hyperbolic basis")
    if w is None:
        w = complete_hyperbolic(space, [v]).pairs[0][1]
    cov_v = space.gram_times(v)
    cov_w = space.gram_times(w)
    t_rows = linalg.nullspace([cov_v, cov_w], space.dim)

    def project(u):
        a = linalg.dot(cov_w, u)
        b = linalg.dot(cov_v, u)
        return tuple(x - a * y - b * z for x, y, z in zip(u, v, w))

    w_rows = [space.basis_vector(i) for i in range(1, space.p + 1)]
    inter = [r for r in w_rows if not linalg.dot(cov_v, r)]
    if len(inter) < space.p:
        # v pairs with exactly one positive basis direction; keep the rest
        # and add the isotropic combinations that restore dimension p-1
        kept = inter
        dropped = [r for r in w_rows if linalg.dot(cov_v, r)]
        base = dropped[0]
        base_val = linalg.dot(cov_v, base)
        for r in dropped[1:]:
            val = linalg.dot(cov_v, r)
            kept = kept + [
                tuple(x - (val / base_val) * y for x, y in zip(r, base))
            ]
        inter = kept
    m_rows, _ = linalg.rref([project(u) for u in inter])
    m_rows = [r for r in m_rows if any(r)]
    if len(m_rows) != space.p - 1:
        raise QuotientSpaceError("projected isotropic subspace has wrong rank")
    tup = complete_hyperbolic(space, m_rows, within=t_rows)
    rep = []
    for a, b in tup.pairs:
        rep.append(a)
        rep.append(b)
    if space.dim % 2:
        constraints = [space.gram_times(r) for r in rep]
        constraints.extend([cov_v, cov_w])
        rest = linalg.nullspace(constraints, space.dim)
        if len(rest) != 1:
            raise QuotientSpaceError("odd-dimensional quotient completion failed")
        f0 = rest[0]
        c0 = bilinear(space, f0, f0) / 2
        rep.append(f0)
        induced = QuadraticSpace.standard(space.dim - 2, c0=c0)
    else:
        induced = QuadraticSpace.standard(space.dim - 2)
    return QuotientSpace(space, tuple(v), tuple(w), tuple(rep), induced)


def phi_v(space: QuadraticSpace, v, omega: MultiVector, qs: QuotientSpace = None):
    """The cone-preserving map: contract by <v, .>, then project factors.

    Returns a multivector over the induced space of the quotient.  Pass a
    prebuilt QuotientSpace to amortize its construction across calls.
    """
    if omega.grade < 1:
        raise ValueError("phi_v needs grade >= 1")
    if qs is None:
        qs = quotient_space(space, v)
    contracted = contract(space.gram_times(v), omega)
    return push_through_map(
        contracted, qs.projected_basis_images(), qs.space.dim, qs.space.kind
    )


# ---------------------------------------------------------------------------
# decomposition relative to the last hyperbolic pair


@dataclass
class OmegaDecomposition:
    """omega = w1 ^ e_p ^ e_-p + w2 ^ e_p + w3 ^ e_-p + w4 with each part
    supported on the labels of V' (everything except the chosen pair)."""

    omega1: MultiVector
    omega2: MultiVector
    omega3: MultiVector
    omega4: MultiVector
    pair: tuple  # (positive label, negative label)

    def parts(self):
        return (self.omega1, self.omega2, self.omega3, self.omega4)

    def zero_pattern(self):
        return tuple(int(not part.terms) for part in self.parts())

    def reassemble(self) -> MultiVector:
        dim = self.omega4.dim
        kind = self.omega4.kind
        ep = MultiVector.basis(dim, (self.pair[0],), kind)
        em = MultiVector.basis(dim, (self.pair[1],), kind)
        return (
            wedge(wedge(self.omega1, ep), em)
            + wedge(self.omega2, ep)
            + wedge(self.omega3, em)
            + self.omega4
        )


def _strip_label(key, coeff, lab):
    """c e_key = c' e_(key minus lab) ^ e_lab; returns (key', c')."""
    j = key.index(lab)
    stripped = key[:j] + key[j + 1:]
    if (len(key) - 1 - j) & 1:
        coeff = -coeff
    return stripped, coeff


def decompose(space: QuadraticSpace, omega: MultiVector, pair=None):
    """Unique splitting of omega along V = V' + span{e_p, e_-p}."""
    if space.kind != HYPERBOLIC:
        raise ValueError("decomposition needs a hyperbolic basis")
    if pair is None:
        pair = (space.p, -space.p)
    pl, ml = pair
    dim, kind = omega.dim, omega.kind
    buckets = [{}, {}, {}, {}]
    for key, c in omega.terms.items():
        has_p = pl in key
        has_m = ml in key
        if has_p and has_m:
            k1, c1 = _strip_label(key, c, ml)
            k1, c1 = _strip_label(k1, c1, pl)
            buckets[0][k1] = c1
        elif has_p:
            k2, c2 = _strip_label(key, c, pl)
            buckets[1][k2] = c2
        elif has_m:
            k3, c3 = _strip_label(key, c, ml)
            buckets[2][k3] = c3
        else:
            buckets[3][key] = c
    g = omega.grade
    return OmegaDecomposition(
        MultiVector(dim, max(g - 2, 0), kind, buckets[0]),
        MultiVector(dim, max(g - 1, 0), kind, buckets[1]),
        MultiVector(dim, max(g - 1, 0), kind, buckets[2]),
        MultiVector(dim, g, kind, buckets[3]),
        pair,
    )


@dataclass
class CaseReport:
    case_id: object  # 1..4 or "none"
    zero_pattern: tuple  # one bit per part, 1 = the part vanishes
    checked_conditions: list

    @property
    def pattern_number(self) -> int:
        """Index of the nonzero pattern read as binary over (w1,w2,w3,w4)."""
        return int("".join(str(1 - z) for z in self.zero_pattern), 2)

    def to_json_dict(self):
        return {
            "case": self.case_id,
            "zero_pattern": list(self.zero_pattern),
            "pattern_number": self.pattern_number,
            "conditions": [
                {"condition": name, "holds": bool(ok)}
                for name, ok in self.checked_conditions
            ],
        }


def classify(space: QuadraticSpace, omega: MultiVector, pair=None) -> CaseReport:
    """Structure classifier for grade-p forms in the isotropic cone.

    Members of the cone land in exactly one of four cases distinguished by
    which decomposition parts vanish; every subcondition is verified and
    reported.  Non-members may classify as "none".
    """
    dec = decompose(space, omega, pair)
    w1, w2, w3, w4 = dec.parts()
    pattern = dec.zero_pattern()
    nz = tuple(1 - z for z in pattern)
    conds = []

    def check(name, ok):
        conds.append((name, bool(ok)))
        return ok

    case = "none"
    if nz == (0, 1, 0, 0):
        if check("omega2 in iso cone of V'", in_isotropic_cone(space, w2)):
            case = 1
    elif nz == (0, 0, 1, 0):
        if check("omega3 in iso cone of V'", in_isotropic_cone(space, w3)):
            case = 2
    elif nz == (0, 1, 1, 1):
        ok = check("dim V odd", space.dim % 2 == 1)
        ok &= check("omega2 in iso cone of V'", in_isotropic_cone(space, w2))
        ok &= check("omega3 in iso cone of V'", in_isotropic_cone(space, w3))
        ok &= check("omega4 in Grassmann cone of V'", in_grassmann_cone(w4))
        if ok:
            l2 = extract_subspace(w2, space)
            l3 = extract_subspace(w3, space)
            l4 = extract_subspace(w4, space)
            ok &= check("L2 == L3", l2 == l3)
            ok &= check("L2 contained in L4", l2.intersect(l4) == l2)
        if ok:
            case = 3
    elif nz == (1, 1, 1, 1):
        ok = check("omega1 in iso cone of V'", in_isotropic_cone(space, w1))
        ok &= check("omega2 in iso cone of V'", in_isotropic_cone(space, w2))
        ok &= check("omega3 in iso cone of V'", in_isotropic_cone(space, w3))
        ok &= check("omega4 in Grassmann cone of V'", in_grassmann_cone(w4))
        if ok:
            l1 = extract_subspace(w1, space)
            l2 = extract_subspace(w2, space)
            l3 = extract_subspace(w3, space)
            l4 = extract_subspace(w4, space)
            ok &= check("L2 cap L3 == L1", l2.intersect(l3) == l1)
            ok &= check("L2 + L3 == L4", l2.add(l3) == l4)
        if ok:
            case = 4
    return CaseReport(case, pattern, conds)


# ---------------------------------------------------------------------------
# witness search


def structured_isotropic_vectors(space: QuadraticSpace):
    """The isotropic vectors used in the constructive case analysis:
    all e_(+-i), the odd-dimension combinations e_0 + e_-i - c0 e_i, and all
    two-index combinations e_(+-i) +- e_(+-j) that are isotropic."""
    p = space.p
    out = []
    for i in range(1, p + 1):
        out.append(space.basis_vector(i))
        out.append(space.basis_vector(-i))
    if space.dim % 2:
        c0 = space.c0
        e0 = space.basis_vector(0)
        for i in range(1, p + 1):
            ei = space.basis_vector(i)
            emi = space.basis_vector(-i)
            out.append(
                tuple(a + b - c0 * c for a, b, c in zip(e0, emi, ei))
            )
            out.append(
                tuple(a + b - c0 * c for a, b, c in zip(e0, ei, emi))
            )
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            for si in (i, -i):
                for sj in (j, -j):
                    a = space.basis_vector(si)
                    b = space.basis_vector(sj)
                    out.append(tuple(x + y for x, y in zip(a, b)))
                    out.append(tuple(x - y for x, y in zip(a, b)))
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            if i != j:
                a = space.basis_vector(i)
                b = space.basis_vector(-j)
                out.append(tuple(x + y for x, y in zip(a, b)))
                out.append(tuple(x - y for x, y in zip(a, b)))
    seen = set()
    unique = []
    for v in out:
        if v not in seen and is_isotropic(space, v):
            seen.add(v)
            unique.append(v)
    return unique


def _embed_from_subcoords(space, sub_labels, coords):
    """Vector of `space` from coordinates over a subset of its labels."""
    pos = space.positions
    out = [QZERO] * space.dim
    for lab, c in zip(sub_labels, coords):
        out[pos[lab]] = c
    return tuple(out)


def _adapted_candidates(space: QuadraticSpace, omega: MultiVector):
    """Structured family rebuilt in a hyperbolic basis of V' adapted to the
    spans of the omega2/omega3 parts, when those parts are decomposable."""
    try:
        dec = decompose(space, omega)
    except ValueError:
        return []
    w2, w3 = dec.omega2, dec.omega3
    if not w2.terms or not w3.terms:
        return []
    if not (in_isotropic_cone(space, w2) and in_isotropic_cone(space, w3)):
        return []
    sub_labels = [l for l in space.labels if l not in dec.pair]
    vprime = QuadraticSpace.standard(space.dim - 2, c0=space.c0)
    pos = space.positions
    keep = [pos[l] for l in sub_labels]

    def restrict(row):
        return tuple(row[i] for i in keep)

    l2 = extract_subspace(w2, space)
    l3 = extract_subspace(w3, space)
    if l2.dim != vprime.p or l3.dim != vprime.p:
        return []
    try:
        tup, _q = common_hyperbolic_basis(
            vprime,
            Subspace(vprime, [restrict(r) for r in l2.rows]),
            Subspace(vprime, [restrict(r) for r in l3.rows]),
        )
    except ValueError:
        return []
    rows = tup.rows()
    if tup.e0 is not None:
        adapted_c0 = bilinear(vprime, tup.e0, tup.e0) / 2
    else:
        adapted_c0 = None
    adapted = QuadraticSpace.standard(space.dim - 2, c0=adapted_c0)
    out = []
    for cand in structured_isotropic_vectors(adapted):
        # cand is in adapted coordinates: map through the tuple rows
        vec = [QZERO] * (space.dim - 2)
        for c, row in zip(cand, rows):
            if c:
                for j, x in enumerate(row):
                    if x:
                        vec[j] = vec[j] + c * x
        out.append(_embed_from_subcoords(space, sub_labels, vec))
    return out


def membership_certificate(space: QuadraticSpace, omega: MultiVector):
    """None if omega is in the isotropic cone, else a refuting certificate."""
    if not omega.terms:
        return None
    rel = failing_relation(omega)
    if rel is not None:
        ints = integer_terms(omega)
        return {
            "type": "plucker_relation",
            "relation": rel.to_json_dict(),
            "value": str(rel.evaluate_int(ints)),
        }
    sub = extract_subspace(omega, space)
    bad = isotropy_failure(space, sub)
    if bad is not None:
        u, w, val = bad
        return {
            "type": "isotropy_pair",
            "u": [rat_str(x) for x in u],
            "w": [rat_str(x) for x in w],
            "pairing": rat_str(val),
        }
    return None


@dataclass
class WitnessResult:
    v: tuple
    certificate: dict
    source: str  # "structured" | "adapted" | "random"
    candidate_index: int
    candidates_checked: int

    def to_json_dict(self):
        return {
            "found": True,
            "v": [rat_str(x) for x in self.v],
            "certificate": self.certificate,
            "source": self.source,
            "candidate_index": self.candidate_index,
            "candidates_checked": self.candidates_checked,
        }


def find_witness(
    space: QuadraticSpace,
    omega: MultiVector,
    budget: int = 200,
    rng: random.Random = None,
    quotient_cache: dict = None,
):
    """Search for isotropic v with Phi_v(omega) outside the smaller cone.

    Structured candidates (standard and omega-adapted) are tried before
    `budget` random isotropic vectors.  Returns a WitnessResult or None; a
    None is not a proof of membership, only the failure of a finite search.
    """
    if space.dim < 5:
        raise ValueError("witness search needs dim >= 5")
    if rng is None:
        rng = random.Random(0)
    candidates = [
        ("structured", v) for v in structured_isotropic_vectors(space)
    ]
    candidates += [("adapted", v) for v in _adapted_candidates(space, omega)]
    checked = 0
    seen = set()

    def try_candidate(tag, v, index):
        nonlocal checked
        if v in seen:
            return None
        seen.add(v)
        checked += 1
        if quotient_cache is not None and v in quotient_cache:
            qs = quotient_cache[v]
        else:
            qs = quotient_space(space, v)
            if quotient_cache is not None and tag == "structured":
                quotient_cache[v] = qs
        image = phi_v(space, v, omega, qs=qs)
        cert = membership_certificate(qs.space, image)
        if cert is None:
            return None
        return WitnessResult(v, cert, tag, index, checked)

    for index, (tag, v) in enumerate(candidates):
        hit = try_candidate(tag, v, index)
        if hit is not None:
            return hit
    for t in range(budget):
        v = random_isotropic_vector(space, rng)
        hit = try_candidate("random", v, len(candidates) + t)
        if hit is not None:
            return hit
    return None


def verify_main_theorem(dim: int, trials: int = 100, budget: int = 200, seed: int = 0):
    """Empirical two-sided check of the universality statement at one dim.

    For `trials` random non-cone grade-p forms a witness must be found; for
    `trials` random isotropic frames the full candidate family must pass.
    Misses are reported, never retried.
    """
    if dim < 9:
        raise ValueError(
            "verify_main_theorem requires dim >= 9; dimensions 7 and 8 are "
            "covered by the explicit counterexamples"
        )
    space = QuadraticSpace.standard(dim)
    p = space.p
    cache = {}
    noncone_trials = []
    for t in range(trials):
        rng = random.Random(f"{seed}:noncone:{t}")
        omega = random_non_cone_form(space, p, rng)
        res = find_witness(space, omega, budget=budget, rng=rng, quotient_cache=cache)
        noncone_trials.append(
            {
                "trial": t,
                "witness_found": res is not None,
                "source": res.source if res else None,
                "candidates_checked": res.candidates_checked if res else None,
            }
        )
    frame_trials = []
    for t in range(trials):
        rng = random.Random(f"{seed}:frame:{t}")
        omega = random_isotropic_frame(space, p, rng)
        res = find_witness(space, omega, budget=budget, rng=rng, quotient_cache=cache)
        frame_trials.append(
            {
                "trial": t,
                "witness_found": res is not None,
                "source": res.source if res else None,
            }
        )
    found = sum(1 for t in noncone_trials if t["witness_found"])
    spurious = sum(1 for t in frame_trials if t["witness_found"])
    by_source = {}
    for t in noncone_trials:
        if t["source"]:
            by_source[t["source"]] = by_source.get(t["source"], 0) + 1
    return {
        "dim": dim,
        "trials": trials,
        "budget": budget,
        "seed": seed,
        "noncone": {
            "witnesses_found": found,
            "by_source": by_source,
            "trials": noncone_trials,
        },
        "frames": {
            "spurious_witnesses": spurious,
            "trials": frame_trials,
        },
        "all_noncone_refuted": found == trials,
        "all_frames_preserved": spurious == 0,
    }


class SamplingExhausted(RuntimeError):
    pass


def reduce_to_base(space: QuadraticSpace, omega: MultiVector, budget=200, rng=None):
    """Iterate Phi_v with nonzero image until reaching dimension 7 or 8.

    Returns (final_space, final_omega, chain) where chain records each
    chosen v in the coordinates of its step.  Raises SamplingExhausted if a
    nonzero omega has no nonzero image in the candidate family plus budget,
    which would contradict nonvanishing of the quotient-map family
    on nonzero forms.
    """
    if rng is None:
        rng = random.Random(0)
    target = 7 if space.dim % 2 else 8
    if space.dim <= 8:
        raise ValueError("reduce_to_base needs dim > 8")
    chain = []
    cur_space, cur = space, omega
    while cur_space.dim > target:
        if not cur.terms:
            return cur_space, cur, chain
        chosen = None
        for v in structured_isotropic_vectors(cur_space):
            qs = quotient_space(cur_space, v)
            img = phi_v(cur_space, v, cur, qs=qs)
            if img.terms:
                chosen = (v, qs, img)
                break
        if chosen is None:
            for _ in range(budget):
                v = random_isotropic_vector(cur_space, rng)
                qs = quotient_space(cur_space, v)
                img = phi_v(cur_space, v, cur, qs=qs)
                if img.terms:
                    chosen = (v, qs, img)
                    break
        if chosen is None:
            raise SamplingExhausted(
                f"no nonzero image found at dim {cur_space.dim}; this "
                "contradicts nonvanishing for nonzero forms"
            )
        v, qs, img = chosen
        chain.append({"dim": cur_space.dim, "v": [rat_str(x) for x in v]})
        cur_space, cur = qs.space, img
    return cur_space, cur, chain


def pad_with_hyperbolic_pair(space: QuadraticSpace, omega: MultiVector):
    """Embed into two more dimensions via omega -> omega ^ e_(p+1).

    Membership in the isotropic cone is preserved in both directions.
    """
    if space.kind != HYPERBOLIC:
        raise ValueError("padding requires a hyperbolic basis")
    big = QuadraticSpace.standard(space.dim + 2, c0=space.c0)
    lifted = MultiVector(
        big.dim, omega.grade, omega.kind, dict(omega.terms)
    )
    ep = MultiVector.basis(big.dim, (space.p + 1,), omega.kind)
    return big, wedge(lifted, ep)


# ---------------------------------------------------------------------------
# constructive spanning family


def spanning_family(space: QuadraticSpace, k: int):
    """Explicit spanning set of the k-th exterior power by forms
    v ^ v_2 ^ ... ^ v_k with isotropic v and all v_i in v-perp.

    Mirrors the constructive argument: pure wedges with a mixed index are
    in the family directly; fully paired wedges are reached through the
    (e_j0 + e_j1) ^ (e_-j0 - e_-j1) expansions, and the last fully paired
    even wedge in odd dimension through the 2*c0 combination.  Each element
    is returned with its distinguished isotropic vector v for validation.
    """
    if not 0 < k < space.dim:
        raise ValueError("need 0 < k < dim")
    if space.kind != HYPERBOLIC:
        raise ValueError("spanning family needs a hyperbolic basis")
    dim, kind, p = space.dim, space.kind, space.p
    out = []
    for key in combinations(space.labels, k):
        mixed = None
        for lab in key:
            if lab != 0 and -lab not in key:
                mixed = lab
                break
        if mixed is not None:
            out.append(
                (MultiVector.basis(dim, key, kind), space.basis_vector(mixed))
            )
            continue
        # fully paired: positive indices present with their partners
        js = sorted(lab for lab in key if lab > 0)
        free = [j for j in range(1, p + 1) if j not in js]
        eta_labels = []
        for j in js[1:]:
            eta_labels += [j, -j]
        if 0 in key:
            eta_labels.append(0)
        eta = MultiVector.basis(dim, tuple(eta_labels), kind)
        j1 = js[0]
        if free:
            j0 = free[0]
            for signs in ((j0, j1, -j0, -j1), (j0, -j1, -j0, j1)):
                a1, a2, b1, b2 = signs
                u = MultiVector.from_vector(
                    tuple(
                        x + y
                        for x, y in zip(
                            space.basis_vector(a1), space.basis_vector(a2)
                        )
                    ),
                    kind,
                )
                vvec = tuple(
                    x - y
                    for x, y in zip(
                        space.basis_vector(b1), space.basis_vector(b2)
                    )
                )
                mv = wedge(wedge(u, MultiVector.from_vector(vvec, kind)), eta)
                out.append((mv, u.to_vector()))
        else:
            # all pairs used: only possible with k = 2p in odd dimension
            c0 = space.c0
            e0 = space.basis_vector(0)
            e1 = space.basis_vector(1)
            em1 = space.basis_vector(-1)
            v_iso = tuple(a + b - c0 * c for a, b, c in zip(e0, e1, em1))
            u = tuple(a + c0 * b for a, b in zip(e1, em1))
            first = wedge(
                wedge(
                    MultiVector.from_vector(v_iso, kind),
                    MultiVector.from_vector(u, kind),
                ),
                eta,
            )
            out.append((first, v_iso))
            out.append(
                (
                    wedge(MultiVector.basis(dim, (0, 1), kind), eta),
                    space.basis_vector(1),
                )
            )
            out.append(
                (
                    wedge(MultiVector.basis(dim, (0, -1), kind), eta),
                    space.basis_vector(-1),
                )
            )
    return out


def spanning_rank(space: QuadraticSpace, k: int) -> int:
    """Rank of the constructive spanning family inside the k-th power."""
    family = spanning_family(space, k)
    keys = sorted(
        {key for mv, _ in family for key in mv.terms},
        key=lambda key: tuple(label_positions(space.dim, space.kind)[l] for l in key),
    )
    index = {key: i for i, key in enumerate(keys)}
    rows = []
    for mv, _v in family:
        row = [QZERO] * len(keys)
        for key, c in mv.terms.items():
            row[index[key]] = c
        rows.append(row)
    return linalg.rank(rows)
