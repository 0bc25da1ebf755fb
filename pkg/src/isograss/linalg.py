"""Exact linear algebra over the rationals.

Matrices are lists (or tuples) of rows of rationals.  Everything here is
deterministic: pivots are always the first nonzero entry in column order, so
reduced row echelon forms are canonical and usable as subspace identifiers.
"""

from .rationals import Q, QZERO, QONE


def rref(rows):
    """Reduced row echelon form.

    Returns (reduced_rows, pivot_columns); zero rows are dropped.
    """
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, nrows):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        f = m[r][c]
        if f != QONE:
            inv = QONE / f
            m[r] = [x * inv for x in m[r]]
        row_r = m[r]
        for i in range(nrows):
            if i != r and m[i][c]:
                g = m[i][c]
                m[i] = [a - g * b for a, b in zip(m[i], row_r)]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return [tuple(row) for row in m[:r]], pivots


def rank(rows) -> int:
    if not rows:
        return 0
    return len(rref(rows)[0])


def nullspace(rows, ncols=None):
    """Canonical basis of {x : rows @ x = 0}, one vector per free column."""
    if not rows:
        if ncols is None:
            raise ValueError("nullspace of empty system needs ncols")
        return [
            tuple(QONE if j == i else QZERO for j in range(ncols))
            for i in range(ncols)
        ]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [QZERO] * ncols
        vec[fc] = QONE
        for r, pc in enumerate(pivots):
            v = red[r][fc]
            if v:
                vec[pc] = -v
        basis.append(tuple(vec))
    return basis


def solve(rows, rhs):
    """One solution x of rows @ x = rhs, or None if inconsistent.

    The solution is the canonical particular solution with all free
    variables set to zero.
    """
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    n = len(rows[0]) if rows else 0
    x = [QZERO] * n
    for r, pc in enumerate(pivots):
        if pc == n:
            return None
        x[pc] = red[r][n]
    return tuple(x)


def matvec(rows, x):
    return tuple(
        sum((a * b for a, b in zip(row, x)), QZERO) for row in rows
    )


def vecmat(x, rows):
    n = len(rows[0]) if rows else 0
    out = [QZERO] * n
    for xi, row in zip(x, rows):
        if xi:
            for j, a in enumerate(row):
                if a:
                    out[j] = out[j] + xi * a
    return tuple(out)


def matmul(a, b):
    bt = list(zip(*b))
    return [
        tuple(sum((x * y for x, y in zip(row, col)), QZERO) for col in bt)
        for row in a
    ]


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), QZERO)


def scale_to_integers(vec):
    """Scale a rational vector to coprime integers (content 1).

    Returns a tuple of Q integers; the zero vector is returned unchanged.
    """
    from math import gcd

    dens = [x.denominator for x in vec if x]
    if not dens:
        return tuple(vec)
    lcm = 1
    for d in dens:
        lcm = lcm * d // gcd(lcm, d)
    ints = [int(x * lcm) for x in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(Q(v) for v in ints)


class RowBasis:
    """A fixed independent row set with fast exact coordinate solving.

    Precomputes the rref of the rows together with the transform that maps
    reduced rows back to combinations of the originals, so express() costs a
    single back-substitution per call.
    """

    def __init__(self, rows):
        rows = [tuple(r) for r in rows]
        if not rows:
            raise ValueError("empty row basis")
        ncols = len(rows[0])
        # carry an identity block to record the row transform
        aug = [
            list(r) + [QONE if j == i else QZERO for j in range(len(rows))]
            for i, r in enumerate(rows)
        ]
        red, pivots = rref(aug)
        if len(red) < len(rows) or any(p >= ncols for p in pivots):
            raise ValueError("rows are not linearly independent")
        self.rows = rows
        self.ncols = ncols
        self.pivots = pivots
        self._reduced = [r[:ncols] for r in red]
        self._transform = [r[ncols:] for r in red]

    def express(self, target):
        """Coordinates c with sum(c_i * rows_i) == target, else None."""
        target = list(target)
        coeffs = [QZERO] * len(self.rows)
        for r, pc in enumerate(self.pivots):
            v = target[pc]
            if v:
                for j, t in enumerate(self._transform[r]):
                    if t:
                        coeffs[j] = coeffs[j] + v * t
                red = self._reduced[r]
                target = [a - v * b for a, b in zip(target, red)]
        if any(target):
            return None
        return tuple(coeffs)

    def contains(self, target) -> bool:
        return self.express(target) is not None
