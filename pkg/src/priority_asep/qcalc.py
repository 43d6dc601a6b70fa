"""Scalar arithmetic for q-deformed quantities.

Two modes are supported. In exact mode every scalar is a
:class:`fractions.Fraction` and identities can be checked for exact
equality. In float mode scalars are Python floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Scalar = Union[Fraction, float]

EXACT = "exact"
FLOAT = "float"


def parse_scalar(text: str) -> Scalar:
    """Parse ``p/q`` or an integer as an exact rational, a decimal as a float.

    >>> parse_scalar("3/2")
    Fraction(3, 2)
    >>> parse_scalar("2")
    Fraction(2, 1)
    >>> parse_scalar("2.0")
    2.0
    """
    text = text.strip()
    if not text:
        raise ValueError("empty scalar literal")
    if any(ch in text for ch in ".eE") and "/" not in text:
        return float(text)
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


@dataclass(frozen=True)
class QContext:
    """Deformation parameter plus arithmetic mode.

    Parameters
    ----------
    q : Fraction or float
        Asymmetry parameter, ``q >= 1`` by convention (``q < 1`` is accepted
        by the arithmetic but not by the models).
    sqrt_q : Fraction or float, optional
        Declared square root of ``q``. Needed only for half-integer powers.
    mode : {"exact", "float"}, optional
        Inferred from the type of ``q`` when omitted.
    """

    q: Scalar
    sqrt_q: Optional[Scalar] = None
    mode: str = ""

    def __post_init__(self):
        mode = self.mode or (FLOAT if isinstance(self.q, float) else EXACT)
        if mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown mode {mode!r}")
        q = self.q
        if mode == EXACT:
            if isinstance(q, float):
                raise TypeError("exact mode needs a rational q")
            q = Fraction(q)
        else:
            q = float(q)
        if q <= 0:
            raise ValueError("q must be positive")
        s = self.sqrt_q
        if s is not None:
            s = Fraction(s) if mode == EXACT else float(s)
            if s <= 0:
                raise ValueError("sqrt_q must be positive")
            if mode == EXACT and s * s != q:
                raise ValueError(f"sqrt_q**2 = {s * s} differs from q = {q}")
            if mode == FLOAT and abs(s * s - q) > 1e-12 * q:
                raise ValueError("sqrt_q**2 differs from q")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "sqrt_q", s)
        object.__setattr__(self, "mode", mode)

    @classmethod
    def exact(cls, q, sqrt_q=None) -> "QContext":
        return cls(Fraction(q), sqrt_q, EXACT)

    @classmethod
    def floating(cls, q) -> "QContext":
        return cls(float(q), None, FLOAT)

    @classmethod
    def from_square_root(cls, s) -> "QContext":
        """Context with ``q = s**2`` so that half-integer powers are available."""
        s = Fraction(s) if not isinstance(s, float) else s
        return cls(s * s, s)

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT

    @property
    def has_sqrt(self) -> bool:
        return self.sqrt_q is not None

    def scalar(self, x) -> Scalar:
        """Coerce ``x`` into this context's scalar type."""
        return Fraction(x) if self.mode == EXACT else float(x)

    @property
    def zero(self) -> Scalar:
        return self.scalar(0)

    @property
    def one(self) -> Scalar:
        return self.scalar(1)

    def to_float(self) -> "QContext":
        return QContext(float(self.q), None if self.sqrt_q is None else float(self.sqrt_q), FLOAT)


def qpow(exponent, ctx: QContext) -> Scalar:
    """``q**exponent`` for an integer or half-integer exponent.

    Half-integer exponents need ``ctx.sqrt_q``; a :class:`ValueError` is
    raised otherwise.
    """
    e = Fraction(exponent)
    if e.denominator == 1:
        return ctx.q ** int(e)
    if e.denominator == 2:
        if ctx.sqrt_q is None:
            raise ValueError("half-integer power of q requested but sqrt_q is not declared")
        return ctx.sqrt_q ** int(2 * e)
    if ctx.is_exact:
        raise ValueError(f"exponent {e} leaves the rationals")
    return ctx.q ** float(e)


def qnum(c: int, ctx: QContext) -> Scalar:
    """Symmetric q-number ``(q**c - q**-c) / (q - 1/q)``; equals ``c`` at ``q = 1``."""
    c = int(c)
    q = ctx.q
    if q == 1:
        return ctx.scalar(c)
    return (q ** c - q ** (-c)) / (q - 1 / q)


def qfactorial(n: int, ctx: QContext) -> Scalar:
    """Product of ``qnum(k)`` for ``k = 1..n``."""
    if n < 0:
        raise ValueError("q-factorial of a negative integer")
    out = ctx.one
    for k in range(2, n + 1):
        out *= qnum(k, ctx)
    return out


def qbinom(n: int, k: int, ctx: QContext) -> Scalar:
    """Symmetric q-binomial coefficient."""
    if n < 0 or k < 0:
        raise ValueError("q-binomial needs nonnegative arguments")
    if k > n:
        raise ValueError(f"q-binomial with k={k} > n={n}")
    return qfactorial(n, ctx) / (qfactorial(k, ctx) * qfactorial(n - k, ctx))


def qmultinom(counts, ctx: QContext) -> Scalar:
    """``[sum(counts)]_q! / prod([c]_q!)``."""
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("negative count")
    out = qfactorial(sum(counts), ctx)
    for c in counts:
        out /= qfactorial(c, ctx)
    return out
