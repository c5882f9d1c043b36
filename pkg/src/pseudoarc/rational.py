"""Exact rational scalars.

Every exact quantity in the package is a ``gmpy2.mpq``. It is always kept in
lowest terms with a positive denominator, which is all we need from a
rational type, and it is roughly ten times faster than ``fractions.Fraction``.
"""

import re
from fractions import Fraction

from gmpy2 import mpq

Rational = mpq

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)


_PLAIN = re.compile(r"-?\d+(/\d+)?")


def as_rational(value):
    """Convert ints, Fractions, mpq, floats or strings to an exact mpq.

    Strings may be ``p/q``, an integer, or a finite decimal such as
    ``0.125``; decimals are converted exactly.  Floats are converted by
    their exact binary value.
    """
    if isinstance(value, type(ONE)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return mpq(value)
    if isinstance(value, float):
        return mpq(Fraction(value))
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            if _PLAIN.fullmatch(text):
                return mpq(text)
            return mpq(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    # mpz and anything exposing numerator/denominator
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return mpq(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def fmt(q):
    """Format as ``p/q`` in lowest terms (integers as ``p/1``)."""
    q = as_rational(q)
    return f"{q.numerator}/{q.denominator}"


def parse(text):
    """Inverse of :func:`fmt`; also accepts decimals."""
    return as_rational(text)
