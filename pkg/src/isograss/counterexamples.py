"""The small-dimension counterexample forms and their symmetry algebras.

omega7 (dimension 7, grade 3) and omega8 (dimension 8, grade 4) lie outside
the Grassmann cone, yet every quotient map Phi_v sends them into the
isotropic cone one dimension down.  Their symmetry is quantified exactly:
the annihilator of omega7 inside so(7) has dimension 14 (it is a form of
g2), the omega8 annihilator inside so(8) has dimension 21, and the vector
stabilizers have dimensions 8 and 14, so both orbit dimensions match the
isotropic quadric dimension and the containment transfers to every
isotropic direction.

Also here: the 7-term triple-product form whose terms are the lines of the
Fano plane, the integral change of basis linking it to omega7, and the
skew-form example where every quotient map vanishes on a non-decomposable
power of a symplectic 2-form.
"""

import random
from dataclasses import dataclass

from . import linalg
from .cones import in_grassmann_cone, in_isotropic_cone
from .exterior import (
    HYPERBOLIC,
    PLAIN,
    MultiVector,
    canonical_labels,
    contract,
    label_positions,
    wedge,
    wedge_all,
)
from .igcp import phi_v, quotient_space, structured_isotropic_vectors
from .quadratic import QuadraticSpace, random_isotropic_vector, space_from_name
from .rationals import Q, QONE, QZERO


def omega7() -> MultiVector:
    """e1^e2^e3 + e-1^e-2^e-3 + e0^(e1^e-1 + e2^e-2 + e3^e-3)."""
    b = lambda *labs: MultiVector.basis(7, labs)
    return b(1, 2, 3) + b(-1, -2, -3) + b(0, 1, -1) + b(0, 2, -2) + b(0, 3, -3)


def omega8() -> MultiVector:
    """2e1^e2^e3^e4 + 2e-1^e-2^e-3^e-4 + sum_(i<j) ei^ej^e-i^e-j."""
    b = lambda *labs: MultiVector.basis(8, labs)
    out = 2 * b(1, 2, 3, 4) + 2 * b(-1, -2, -3, -4)
    for i in range(1, 5):
        for j in range(i + 1, 5):
            out = out + b(i, j, -i, -j)
    return out


# (dim of the omega stabilizer, dim of the v0 stabilizer, orbit dimension)
EXPECTED_DIMS = {7: (14, 8, 6), 8: (21, 14, 7)}


def counterexample_space(which: int) -> QuadraticSpace:
    if which == 7:
        return space_from_name("j7")
    if which == 8:
        return space_from_name("j8")
    raise ValueError("which must be 7 or 8")


# ---------------------------------------------------------------------------
# the orthogonal Lie algebra and its action on multivectors


def so_basis(space: QuadraticSpace):
    """Basis of {X : X^T J + J X = 0} as n x n matrices; n(n-1)/2 elements."""
    n = space.dim
    g = space.gram
    rows = []
    for a in range(n):
        for b in range(a, n):
            # (X^T J + J X)[a][b] = sum_c X[c][a] J[c][b] + J[a][c] X[c][b]
            row = [QZERO] * (n * n)
            for c in range(n):
                if g[c][b]:
                    row[c * n + a] = row[c * n + a] + g[c][b]
                if g[a][c]:
                    row[c * n + b] = row[c * n + b] + g[a][c]
            rows.append(row)
    basis = linalg.nullspace(rows, n * n)
    return [
        tuple(tuple(vec[i * n + j] for j in range(n)) for i in range(n))
        for vec in basis
    ]


def matrix_columns_by_label(space: QuadraticSpace, X):
    """Sparse columns of X: label -> [(row_label, coeff)]."""
    labels = space.labels
    cols = {}
    for j, lab in enumerate(labels):
        col = [
            (labels[i], X[i][j]) for i in range(space.dim) if X[i][j]
        ]
        cols[lab] = col
    return cols


def lie_act(space: QuadraticSpace, X, omega: MultiVector) -> MultiVector:
    """Derivation action: X.(v1^...^vk) = sum_i v1^...^(X vi)^...^vk."""
    cols = matrix_columns_by_label(space, X)
    pos = space.positions
    acc = {}
    labels = space.labels
    for key, c in omega.terms.items():
        key_positions = [pos[l] for l in key]
        for slot, lab in enumerate(key):
            for new_lab, coeff in cols[lab]:
                if new_lab != lab and new_lab in key:
                    continue
                arr = list(key_positions)
                arr[slot] = pos[new_lab]
                # bubble the replaced slot back into sorted order
                sign = 1
                i = slot
                while i > 0 and arr[i - 1] > arr[i]:
                    arr[i - 1], arr[i] = arr[i], arr[i - 1]
                    sign = -sign
                    i -= 1
                while i < len(arr) - 1 and arr[i] > arr[i + 1]:
                    arr[i], arr[i + 1] = arr[i + 1], arr[i]
                    sign = -sign
                    i += 1
                new_key = tuple(labels[t] for t in arr)
                v = sign * coeff * c
                s = acc.get(new_key)
                if s is None:
                    acc[new_key] = v
                else:
                    s = s + v
                    if s:
                        acc[new_key] = s
                    else:
                        del acc[new_key]
    return MultiVector(omega.dim, omega.grade, omega.kind, acc)


def matvec_rows(X, v):
    return tuple(
        sum((a * b for a, b in zip(row, v)), QZERO) for row in X
    )


def _action_matrix(space, basis_elements, omega):
    """Rows (one per so-basis element) of X |-> X . omega, flattened."""
    images = [lie_act(space, X, omega) for X in basis_elements]
    keys = sorted(
        {k for img in images for k in img.terms},
        key=lambda key: tuple(space.positions[l] for l in key),
    )
    index = {k: i for i, k in enumerate(keys)}
    rows = []
    for img in images:
        row = [QZERO] * len(keys)
        for k, c in img.terms.items():
            row[index[k]] = c
        rows.append(row)
    return rows


def stabilizer_basis(space: QuadraticSpace, omega: MultiVector):
    """Basis of {X in so(V) : X . omega = 0} as matrices."""
    basis = so_basis(space)
    rows = _action_matrix(space, basis, omega)
    # kernel of alpha -> sum_m alpha_m (X_m . omega): transpose the rows
    mat = list(zip(*rows)) if rows and rows[0] else []
    if not mat:
        kernel = [
            tuple(QONE if j == i else QZERO for j in range(len(basis)))
            for i in range(len(basis))
        ]
    else:
        kernel = linalg.nullspace([list(r) for r in mat], len(basis))
    n = space.dim
    out = []
    for combo in kernel:
        m = [[QZERO] * n for _ in range(n)]
        for c, X in zip(combo, basis):
            if c:
                for i in range(n):
                    for j in range(n):
                        if X[i][j]:
                            m[i][j] = m[i][j] + c * X[i][j]
        out.append(tuple(tuple(r) for r in m))
    return out


def stabilizer_dimension(space: QuadraticSpace, omega: MultiVector) -> int:
    return len(stabilizer_basis(space, omega))


def gl_stabilizer_dimension(space: QuadraticSpace, omega: MultiVector) -> int:
    """dim {X in gl(V) : X . omega = 0}.

    For a generic 3-form in dimension 7 this is 14 (the open-orbit count
    49 - 35); for the dimension-7 counterexample the full gl stabilizer
    already lies inside so(V).
    """
    n = space.dim
    basis = []
    for i in range(n):
        for j in range(n):
            m = [[QZERO] * n for _ in range(n)]
            m[i][j] = QONE
            basis.append(tuple(tuple(r) for r in m))
    rows = _action_matrix(space, basis, omega)
    mat = list(zip(*rows)) if rows and rows[0] else []
    if not mat:
        return len(basis)
    return len(linalg.nullspace([list(r) for r in mat], len(basis)))


def vector_stabilizer_dimension(space: QuadraticSpace, omega, v0) -> int:
    """dim {X in stab(omega) : X v0 = 0}."""
    stab = stabilizer_basis(space, omega)
    if not stab:
        return 0
    cols = [matvec_rows(X, v0) for X in stab]
    rows = [
        [cols[m][i] for m in range(len(stab))] for i in range(space.dim)
    ]
    return len(linalg.nullspace(rows, len(stab)))


@dataclass
class CounterexampleReport:
    which: int
    in_grassmann: bool
    igcp_images_checked: int
    all_images_isotropic: bool
    dim_g: int
    dim_stab_v0: int
    orbit_dim: int
    structured_checked: int
    random_checked: int
    seed: int

    def to_json_dict(self):
        return {
            "which": self.which,
            "in_grassmann": self.in_grassmann,
            "igcp_images_checked": self.igcp_images_checked,
            "all_images_isotropic": self.all_images_isotropic,
            "dim_g": self.dim_g,
            "dim_stab_v0": self.dim_stab_v0,
            "orbit_dim": self.orbit_dim,
            "structured_checked": self.structured_checked,
            "random_checked": self.random_checked,
            "seed": self.seed,
        }


def check_counterexample(which: int, samples: int = 1000, seed: int = 0):
    """Full verification run for one of the two counterexample forms.

    Confirms non-membership in the Grassmann cone, checks Phi_v membership
    one dimension down for all structured plus `samples` random isotropic
    v, and recomputes the three symmetry dimensions.
    """
    space = counterexample_space(which)
    omega = omega7() if which == 7 else omega8()
    v0 = space.basis_vector(-space.p)
    in_gr = in_grassmann_cone(omega)
    rng = random.Random(f"counterexample:{which}:{seed}")
    structured = structured_isotropic_vectors(space)
    all_good = True
    checked = 0
    for v in structured:
        qs = quotient_space(space, v)
        if not in_isotropic_cone(qs.space, phi_v(space, v, omega, qs=qs)):
            all_good = False
        checked += 1
    for _ in range(samples):
        v = random_isotropic_vector(space, rng)
        qs = quotient_space(space, v)
        if not in_isotropic_cone(qs.space, phi_v(space, v, omega, qs=qs)):
            all_good = False
        checked += 1
    dim_g = stabilizer_dimension(space, omega)
    dim_stab = vector_stabilizer_dimension(space, omega, v0)
    return CounterexampleReport(
        which=which,
        in_grassmann=in_gr,
        igcp_images_checked=checked,
        all_images_isotropic=all_good,
        dim_g=dim_g,
        dim_stab_v0=dim_stab,
        orbit_dim=dim_g - dim_stab,
        structured_checked=len(structured),
        random_checked=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# the triple-product form and the change of basis


def fano_form() -> MultiVector:
    """Seven-term alternating form whose index triples are the Fano lines."""
    b = lambda *labs: MultiVector.basis(7, labs, PLAIN)
    return (
        b(1, 2, 3)
        + b(1, 4, 5)
        + b(1, 6, 7)
        + b(2, 4, 6)
        - b(2, 5, 7)
        + b(3, 4, 7)
        + b(3, 5, 6)
    )


FANO_SUBSTITUTION = {
    0: ((4, 1),),
    1: ((1, 1), (5, 1)),
    2: ((2, 1), (6, 1)),
    3: ((3, 1), (7, 1)),
    -1: ((1, 1), (5, -1)),
    -2: ((2, 1), (6, -1)),
    -3: ((3, 1), (7, -1)),
}


def fano_substituted_omega7() -> MultiVector:
    """omega7 with the integral (sqrt-2-free) substitution applied."""
    images = {
        lab: MultiVector(
            7, 1, PLAIN, {(t,): Q(c) for t, c in entries}
        )
        for lab, entries in FANO_SUBSTITUTION.items()
    }
    out = MultiVector.zero(7, 3, PLAIN)
    for key, c in omega7().terms.items():
        out = out + wedge_all([images[l] for l in key]).scale(c)
    return out


def fano_change_of_basis_check() -> bool:
    """The substituted omega7 equals exactly twice the Fano form."""
    return fano_substituted_omega7() == fano_form().scale(2)


# ---------------------------------------------------------------------------
# the skew-form remark: every quotient map kills a non-decomposable form


def _skew_gram(two_p: int):
    """<e_i, e_-i> = 1 and <e_-i, e_i> = -1 in canonical label order."""
    dim = 2 * two_p
    pos = label_positions(dim, HYPERBOLIC)
    g = [[QZERO] * dim for _ in range(dim)]
    for i in range(1, two_p + 1):
        g[pos[i]][pos[-i]] = QONE
        g[pos[-i]][pos[i]] = -QONE
    return g


def lagrangian_counterexample(m: int, samples: int = 1000, seed: int = 0):
    """alpha^m on a 4m-dimensional symplectic space kills every Phi_v.

    Returns (omega, report).  omega = alpha^m with
    alpha = sum_i e_i ^ e_-i is not in the Grassmann cone (its square is a
    nonzero multiple of the top form), yet the skew analogue of Phi_v maps
    it to zero for every nonzero v: here every vector is isotropic, and we
    check all basis vectors plus `samples` random ones.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    dim = 4 * m
    gram = _skew_gram(2 * m)
    alpha = MultiVector.zero(dim, 2, HYPERBOLIC)
    for i in range(1, 2 * m + 1):
        alpha = alpha + MultiVector.basis(dim, (i, -i))
    omega = alpha
    for _ in range(m - 1):
        omega = wedge(omega, alpha)

    def skew_cov(v):
        return linalg.vecmat(v, gram)

    def skew_phi_is_zero(v):
        cov = skew_cov(v)
        contracted = contract(cov, omega)
        if not contracted.terms:
            return True
        # project factors onto {v,w}-perp along span{v,w}, <v,w> = 1
        w = linalg.solve([cov], [QONE])
        cov_w = skew_cov(w)
        labels = canonical_labels(dim, HYPERBOLIC)
        proj = {}
        for j, lab in enumerate(labels):
            u = tuple(QONE if t == j else QZERO for t in range(dim))
            a = linalg.dot(cov_w, u)
            b = linalg.dot(cov, u)
            proj[lab] = MultiVector.from_vector(
                tuple(
                    x + a * y - b * z for x, y, z in zip(u, v, w)
                ),
                HYPERBOLIC,
            )
        out = MultiVector.zero(dim, contracted.grade, HYPERBOLIC)
        for key, c in contracted.terms.items():
            term = proj[key[0]]
            for lab in key[1:]:
                term = wedge(term, proj[lab])
                if not term.terms:
                    break
            if term.terms:
                out = out + term.scale(c)
        return not out.terms

    square = wedge(omega, omega)
    rng = random.Random(f"lagrangian:{m}:{seed}")
    checked = 0
    all_zero = True
    for lab in canonical_labels(dim, HYPERBOLIC):
        base = [QZERO] * dim
        base[label_positions(dim, HYPERBOLIC)[lab]] = QONE
        if not skew_phi_is_zero(tuple(base)):
            all_zero = False
        checked += 1
    for _ in range(samples):
        v = tuple(Q(rng.randint(-9, 9)) for _ in range(dim))
        if not any(v):
            continue
        if not skew_phi_is_zero(v):
            all_zero = False
        checked += 1
    report = {
        "m": m,
        "dim": dim,
        "omega_wedge_omega_nonzero": bool(square.terms),
        "phi_images_checked": checked,
        "all_phi_images_zero": all_zero,
        "seed": seed,
    }
    return omega, report
