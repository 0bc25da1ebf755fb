"""Exact rational scalars.

All coefficients in this package are exact rationals.  We use gmpy2's mpq
when available (it is several times faster than fractions.Fraction on the
elimination-heavy code paths) and fall back to the stdlib otherwise.  Both
types print as "p" or "p/q" and parse the same strings, so serialized data
is identical either way.
"""

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

QZERO = Q(0)
QONE = Q(1)


def rat(x):
    """Coerce ints, "p/q" strings, Fractions, or Q values to Q."""
    if type(x) is type(QONE):
        return x
    return Q(x)


def rat_str(x) -> str:
    """Canonical string form: "p" for integers, "p/q" otherwise."""
    return str(x)
