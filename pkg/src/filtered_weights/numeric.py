"""Arithmetic backends.

Two backends share one code path: float64 numpy arrays, and object arrays
holding :class:`fractions.Fraction` values ("rational mode").  Ring
operations stay exact in rational mode; anything transcendental (non-integer
powers, ``exp``, ``log``) drops to double precision.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, Fraction]

DEFAULT_RTOL = 1e-9


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(float(x))


def to_float(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


def is_exact(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def as_array(values: Iterable, exact: bool) -> np.ndarray:
    vals = list(np.asarray(values, dtype=object).ravel())
    if exact:
        out = np.empty(len(vals), dtype=object)
        out[:] = [to_fraction(v) for v in vals]
        return out
    return np.array([to_float(v) for v in vals], dtype=float)


def floatify(a) -> np.ndarray:
    return np.asarray(a, dtype=float) if is_exact(a) else np.asarray(a)


def zeros(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(n, dtype=object)
        out[:] = [Fraction(0)] * n
        return out
    return np.zeros(n)


def ones(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(n, dtype=object)
        out[:] = [Fraction(1)] * n
        return out
    return np.ones(n)


def _integral_exponent(e) -> int | None:
    fe = to_fraction(e)
    return int(fe) if fe.denominator == 1 else None


def power(a, exponent) -> np.ndarray:
    """Elementwise ``a**exponent``; exact for rational input and integer exponent."""
    if is_exact(a):
        k = _integral_exponent(exponent)
        if k is not None:
            out = np.empty(len(a), dtype=object)
            out[:] = [x**k for x in a]
            return out
        return np.asarray(a, dtype=float) ** float(exponent)
    return np.asarray(a, dtype=float) ** float(exponent)


def scalar_power(x, exponent):
    if isinstance(x, Fraction):
        k = _integral_exponent(exponent)
        if k is not None:
            return x**k
    return float(x) ** float(exponent)


def log(a) -> np.ndarray:
    return np.log(floatify(a))


def exp(a) -> np.ndarray:
    return np.exp(floatify(a))


def conjugate(p) -> Number:
    """Hölder conjugate p' with 1/p + 1/p' = 1 (exact for rational p)."""
    if isinstance(p, Fraction):
        return p / (p - 1)
    p = float(p)
    return p / (p - 1.0)


def exponent_value(p, exact: bool):
    return to_fraction(p) if exact else to_float(p)


def leq(a, b, rtol: float = DEFAULT_RTOL, atol: float = 0.0) -> bool:
    """``a <= b`` exactly for Fractions, with relative slack for floats."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    a, b = float(a), float(b)
    return a <= b + rtol * max(abs(a), abs(b)) + atol


def close(a, b, rtol: float = DEFAULT_RTOL, atol: float = 0.0) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    a, b = float(a), float(b)
    return abs(a - b) <= rtol * max(abs(a), abs(b)) + atol


def all_leq(a, b, rtol: float = DEFAULT_RTOL) -> bool:
    if is_exact(a) and is_exact(b):
        return bool(all(x <= y for x, y in zip(a, b)))
    a, b = floatify(a), floatify(b)
    return bool(np.all(a <= b + rtol * np.maximum(np.abs(a), np.abs(b))))


def all_close(a, b, rtol: float = DEFAULT_RTOL) -> bool:
    if is_exact(a) and is_exact(b):
        return bool(all(x == y for x, y in zip(a, b)))
    a, b = floatify(a), floatify(b)
    return bool(np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))))


def dyadic_exponent(v) -> int:
    """The integer ``l`` with ``2**(l-1) < v <= 2**l``; ``v`` must be positive."""
    if isinstance(v, Fraction):
        if v <= 0:
            raise ValueError("dyadic exponent of a nonpositive number")
        l = v.numerator.bit_length() - v.denominator.bit_length()
        two = Fraction(2)
        while two**l < v:
            l += 1
        while two ** (l - 1) >= v:
            l -= 1
        return l
    v = float(v)
    if not v > 0 or math.isinf(v):
        raise ValueError(f"dyadic exponent undefined for {v!r}")
    m, e = math.frexp(v)
    return e - 1 if m == 0.5 else e


def two_pow(k: int, exact: bool):
    return Fraction(2) ** k if exact else 2.0**k
