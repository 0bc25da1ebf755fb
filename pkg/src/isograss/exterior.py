"""Sparse exterior algebra over the rationals.

Multivectors are finite maps from index sets to rational coefficients.  An
index set is a tuple of basis labels sorted in the canonical order, which is
the single source of truth for every sign in the package:

* "hyperbolic" label systems on an n-dimensional space use the signed labels
  1, -1, 2, -2, ..., p, -p (and 0 last when n is odd), ordered exactly like
  that;
* "plain" label systems use 1..n in natural order.

Vectors and covectors are dense tuples of rationals indexed by the canonical
basis order.
"""

from functools import lru_cache
from itertools import combinations

from .rationals import Q, QZERO, rat, rat_str

HYPERBOLIC = "hyperbolic"
PLAIN = "plain"


@lru_cache(maxsize=None)
def canonical_labels(dim: int, kind: str) -> tuple:
    """Basis labels of the given space in canonical order."""
    if dim <= 0:
        raise ValueError(f"dimension must be positive, got {dim}")
    if kind == PLAIN:
        return tuple(range(1, dim + 1))
    if kind != HYPERBOLIC:
        raise ValueError(f"unknown label kind {kind!r}")
    p = dim // 2
    labels = []
    for i in range(1, p + 1):
        labels.append(i)
        labels.append(-i)
    if dim % 2:
        labels.append(0)
    return tuple(labels)


@lru_cache(maxsize=None)
def label_positions(dim: int, kind: str) -> dict:
    """Map label -> 0-based position in the canonical order."""
    return {lab: i for i, lab in enumerate(canonical_labels(dim, kind))}


def sort_labels(labels, pos):
    """Sort labels canonically; return (tuple, sign) or (None, 0) on repeats.

    The sign is the parity of the sorting permutation, so
    e_{l1} ^ ... ^ e_{lk} = sign * e_{sorted}.
    """
    keyed = []
    for lab in labels:
        k = pos.get(lab)
        if k is None:
            raise ValueError(f"label {lab} not valid for this space")
        keyed.append(k)
    sign = 1
    n = len(keyed)
    order = list(range(n))
    # insertion sort; index sets are tiny
    for i in range(1, n):
        j = i
        while j > 0 and keyed[order[j - 1]] > keyed[order[j]]:
            order[j - 1], order[j] = order[j], order[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(order, order[1:]):
        if keyed[a] == keyed[b]:
            return None, 0
    return tuple(labels[i] for i in order), sign


def _merge_positions(pa, pb):
    """Merge two increasing position tuples; (merged, sign) or (None, 0)."""
    sign = 1
    out = []
    i, j = 0, 0
    la, lb = len(pa), len(pb)
    while i < la and j < lb:
        a, b = pa[i], pb[j]
        if a == b:
            return None, 0
        if a < b:
            out.append(a)
            i += 1
        else:
            out.append(b)
            j += 1
            if (la - i) & 1:
                sign = -sign
    out.extend(pa[i:])
    out.extend(pb[j:])
    return tuple(out), sign


class MultiVector:
    """Grade-k element of the exterior algebra with exact coefficients.

    Immutable by convention: no method mutates self, all operations return
    fresh objects, so values can be shared freely between threads.
    """

    __slots__ = ("dim", "grade", "kind", "terms")

    def __init__(self, dim, grade, kind, terms=None):
        self.dim = dim
        self.grade = grade
        self.kind = kind
        self.terms = dict(terms) if terms else {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim, grade, kind=HYPERBOLIC):
        return cls(dim, grade, kind)

    @classmethod
    def basis(cls, dim, labels, kind=HYPERBOLIC, coeff=1):
        """e_{l1} ^ ... ^ e_{lk} for the given (possibly unsorted) labels."""
        labels = tuple(labels)
        pos = label_positions(dim, kind)
        key, sign = sort_labels(labels, pos)
        c = rat(coeff)
        if key is None or not c:
            return cls(dim, len(labels), kind)
        return cls(dim, len(key), kind, {key: sign * c})

    @classmethod
    def from_vector(cls, coords, kind=HYPERBOLIC):
        """Grade-1 multivector from dense coordinates in canonical order."""
        coords = tuple(coords)
        dim = len(coords)
        labels = canonical_labels(dim, kind)
        terms = {(labels[i],): rat(c) for i, c in enumerate(coords) if c}
        return cls(dim, 1, kind, terms)

    def to_vector(self):
        """Dense coordinates of a grade-1 multivector."""
        if self.grade != 1:
            raise ValueError("to_vector requires grade 1")
        pos = label_positions(self.dim, self.kind)
        out = [QZERO] * self.dim
        for (lab,), c in self.terms.items():
            out[pos[lab]] = c
        return tuple(out)

    # -- ring structure ----------------------------------------------------

    def _check_compatible(self, other):
        if self.dim != other.dim or self.kind != other.kind:
            raise ValueError(
                f"dimension/label mismatch: ({self.dim},{self.kind}) vs "
                f"({other.dim},{other.kind})"
            )

    def __add__(self, other):
        self._check_compatible(other)
        if self.grade != other.grade:
            if not self.terms:
                return other
            if not other.terms:
                return self
            raise ValueError("grade mismatch in addition")
        terms = dict(self.terms)
        for key, c in other.terms.items():
            s = terms.get(key)
            if s is None:
                terms[key] = c
            else:
                s = s + c
                if s:
                    terms[key] = s
                else:
                    del terms[key]
        return MultiVector(self.dim, self.grade, self.kind, terms)

    def __neg__(self):
        return MultiVector(
            self.dim, self.grade, self.kind,
            {k: -c for k, c in self.terms.items()},
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        f = rat(factor)
        if not f:
            return MultiVector(self.dim, self.grade, self.kind)
        return MultiVector(
            self.dim, self.grade, self.kind,
            {k: f * c for k, c in self.terms.items()},
        )

    __mul__ = scale
    __rmul__ = scale

    def wedge(self, other):
        return wedge(self, other)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        if self.dim != other.dim or self.kind != other.kind:
            return False
        if not self.terms and not other.terms:
            return True
        return self.grade == other.grade and self.terms == other.terms

    def __hash__(self):
        return hash(
            (self.dim, self.grade, self.kind, frozenset(self.terms.items()))
        )

    def sorted_terms(self):
        """Terms sorted by index set in canonical order."""
        pos = label_positions(self.dim, self.kind)
        return sorted(
            self.terms.items(), key=lambda kv: tuple(pos[l] for l in kv[0])
        )

    def support_labels(self):
        """Set of labels appearing in any term."""
        out = set()
        for key in self.terms:
            out.update(key)
        return out

    def __repr__(self):
        if not self.terms:
            return f"MultiVector(0; dim={self.dim}, grade={self.grade})"
        parts = [
            f"{rat_str(c)}*e{list(k)}" for k, c in self.sorted_terms()
        ]
        return " + ".join(parts)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "grade": self.grade,
            "labels": self.kind,
            "terms": [
                {"indices": list(k), "coeff": rat_str(c)}
                for k, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json_dict(cls, data) -> "MultiVector":
        try:
            dim = int(data["dim"])
            grade = int(data["grade"])
            kind = data["labels"]
            raw_terms = data["terms"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed multivector object: {exc}") from exc
        if kind not in (HYPERBOLIC, PLAIN):
            raise ValueError(f"unknown label kind {kind!r}")
        pos = label_positions(dim, kind)
        terms = {}
        for idx, item in enumerate(raw_terms):
            try:
                labels = tuple(int(x) for x in item["indices"])
                coeff = rat(item["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"malformed term {idx}: {exc}") from exc
            if len(labels) != grade:
                raise ValueError(
                    f"malformed term {idx}: {len(labels)} indices, grade {grade}"
                )
            try:
                key, sign = sort_labels(labels, pos)
            except ValueError as exc:
                raise ValueError(f"malformed term {idx}: {exc}") from exc
            if key is None:
                raise ValueError(f"malformed term {idx}: repeated index")
            if key in terms:
                raise ValueError(f"malformed term {idx}: duplicate index set")
            if coeff:
                terms[key] = sign * coeff
        return cls(dim, grade, kind, terms)


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Exterior product.  Grades add; the zero multivector results when the
    combined grade exceeds the dimension."""
    a._check_compatible(b)
    grade = a.grade + b.grade
    if grade > a.dim or not a.terms or not b.terms:
        return MultiVector(a.dim, grade, a.kind)
    pos = label_positions(a.dim, a.kind)
    labels = canonical_labels(a.dim, a.kind)
    a_items = [
        (tuple(pos[l] for l in key), c) for key, c in a.terms.items()
    ]
    b_items = [
        (tuple(pos[l] for l in key), c) for key, c in b.terms.items()
    ]
    acc = {}
    for pa, ca in a_items:
        for pb, cb in b_items:
            merged, sign = _merge_positions(pa, pb)
            if merged is None:
                continue
            c = ca * cb if sign > 0 else -(ca * cb)
            s = acc.get(merged)
            if s is None:
                acc[merged] = c
            else:
                s = s + c
                if s:
                    acc[merged] = s
                else:
                    del acc[merged]
    terms = {tuple(labels[i] for i in key): c for key, c in acc.items()}
    return MultiVector(a.dim, grade, a.kind, terms)


def _insert_position(ptuple, pos):
    """Insert pos into an increasing tuple; (tuple, sign) or (None, 0).

    The sign accounts for moving the new factor from the right end past the
    entries greater than pos.
    """
    n = len(ptuple)
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if ptuple[mid] < pos:
            lo = mid + 1
        else:
            hi = mid
    if lo < n and ptuple[lo] == pos:
        return None, 0
    sign = -1 if (n - lo) & 1 else 1
    return ptuple[:lo] + (pos,) + ptuple[lo:], sign


def push_through_map(omega: MultiVector, images, out_dim, out_kind=HYPERBOLIC):
    """Apply a linear map factor-wise to a multivector.

    images maps each source label to a sparse target vector given as a
    tuple of (target_position, coeff); the result is the image of omega
    under the induced map on exterior powers.  This is the workhorse behind
    the quotient push-forwards, fused to avoid per-term temporaries.
    """
    out_labels = canonical_labels(out_dim, out_kind)
    acc = {}
    for key, c in omega.terms.items():
        partial = {(): c}
        for lab in key:
            img = images[lab]
            if not img:
                partial = None
                break
            nxt = {}
            for ptuple, pc in partial.items():
                for pos, ic in img:
                    merged, sign = _insert_position(ptuple, pos)
                    if merged is None:
                        continue
                    v = pc * ic if sign > 0 else -(pc * ic)
                    s = nxt.get(merged)
                    if s is None:
                        nxt[merged] = v
                    else:
                        s = s + v
                        if s:
                            nxt[merged] = s
                        else:
                            del nxt[merged]
            partial = nxt
            if not partial:
                break
        if partial:
            for ptuple, pc in partial.items():
                s = acc.get(ptuple)
                if s is None:
                    acc[ptuple] = pc
                else:
                    s = s + pc
                    if s:
                        acc[ptuple] = s
                    else:
                        del acc[ptuple]
    terms = {
        tuple(out_labels[p] for p in key): c for key, c in acc.items()
    }
    return MultiVector(out_dim, omega.grade, out_kind, terms)


def wedge_all(factors, dim=None, kind=HYPERBOLIC):
    """Wedge of a sequence of multivectors (or dense vectors)."""
    mvs = [
        f if isinstance(f, MultiVector) else MultiVector.from_vector(f, kind)
        for f in factors
    ]
    if not mvs:
        raise ValueError("empty wedge")
    out = mvs[0]
    for f in mvs[1:]:
        out = wedge(out, f)
    return out


def contract(beta, omega: MultiVector) -> MultiVector:
    """Contraction of omega by the covector beta.

    beta is given by dense coordinates against the canonical basis, i.e.
    beta(e_l) = beta[position(l)].  On a decomposable v_1 ^ ... ^ v_k this is
    sum_i (-1)^(i-1) beta(v_i) v_1 ^ ... ^ v_i-hat ^ ... ^ v_k.
    """
    beta = tuple(beta)
    if len(beta) != omega.dim:
        raise ValueError("covector length does not match dimension")
    if omega.grade < 1:
        raise ValueError("cannot contract a grade-0 multivector")
    pos = label_positions(omega.dim, omega.kind)
    acc = {}
    for key, c in omega.terms.items():
        sign = 1
        for j, lab in enumerate(key):
            b = beta[pos[lab]]
            if b:
                sub = key[:j] + key[j + 1:]
                v = sign * b * c
                s = acc.get(sub)
                if s is None:
                    acc[sub] = v
                else:
                    s = s + v
                    if s:
                        acc[sub] = s
                    else:
                        del acc[sub]
            sign = -sign
    return MultiVector(omega.dim, omega.grade - 1, omega.kind, acc)


def dual_covector(dim, label, kind=HYPERBOLIC):
    """Coordinate covector: picks out the coefficient of e_label."""
    pos = label_positions(dim, kind)
    out = [QZERO] * dim
    out[pos[label]] = Q(1)
    return tuple(out)


def coefficient(omega: MultiVector, indices):
    """Coefficient of e_{i1} ^ ... ^ e_{ik} taken in the written order.

    The index tuple need not be canonically sorted; the sorting sign is
    applied, so coefficient(w, (2, 1)) == -coefficient(w, (1, 2)).
    """
    indices = tuple(indices)
    if len(indices) != omega.grade:
        raise ValueError(
            f"index set size {len(indices)} does not match grade {omega.grade}"
        )
    pos = label_positions(omega.dim, omega.kind)
    key, sign = sort_labels(indices, pos)
    if key is None:
        return QZERO
    c = omega.terms.get(key)
    if c is None:
        return QZERO
    return sign * c


def all_index_sets(dim, grade, kind=HYPERBOLIC):
    """All canonical index sets of the given grade, in canonical order."""
    return list(combinations(canonical_labels(dim, kind), grade))
