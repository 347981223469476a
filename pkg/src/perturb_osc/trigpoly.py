"""Finite trigonometric polynomials in a phase variable.

A :class:`TrigPoly` stores ``sum_k c_k cos(k theta) + s_k sin(k theta)`` as two
sparse maps from harmonic index to coefficient. Coefficients are either
``fractions.Fraction``/``int`` (exact mode) or ``float`` (floating mode); the
mode is carried by the coefficient types themselves.

Floating-mode polynomials are pruned after every operation: coefficients
below ``PRUNE_RTOL`` times the largest magnitude are dropped.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

import numpy as np

Number = Union[int, float, Fraction]

PRUNE_RTOL = 1e-15

_HALF = Fraction(1, 2)


class ResonanceError(ValueError):
    """Forcing still contains a fundamental (cos/sin of theta) component."""


_EXACT_TYPES = (int, Fraction, bool)


def _is_exact(value) -> bool:
    return type(value) in _EXACT_TYPES or isinstance(value, Rational)


def _from_arrays(cos_arr: np.ndarray, sin_arr: np.ndarray | None) -> "TrigPoly":
    """Float polynomial from dense coefficient arrays indexed by harmonic."""
    mags = np.abs(cos_arr)
    peak = mags.max() if mags.size else 0.0
    if sin_arr is not None and sin_arr.size:
        peak = max(peak, np.abs(sin_arr).max())
    cut = PRUNE_RTOL * peak
    keep = np.nonzero((mags >= cut) & (cos_arr != 0))[0]
    c = dict(zip(keep.tolist(), cos_arr[keep].tolist()))
    s = {}
    if sin_arr is not None:
        keep = np.nonzero((np.abs(sin_arr) >= cut) & (sin_arr != 0))[0]
        s = dict(zip(keep.tolist(), sin_arr[keep].tolist()))
        s.pop(0, None)
    return TrigPoly._raw(c, s, False)


class TrigPoly:
    """Immutable sparse trigonometric polynomial.

    Parameters
    ----------
    cos : mapping, optional
        Harmonic index ``k >= 0`` to cosine coefficient.
    sin : mapping, optional
        Harmonic index ``k >= 1`` to sine coefficient. A ``k = 0`` sine term
        is identically zero and is discarded.
    """

    __slots__ = ("_cos", "_sin", "_hash", "_exact")

    def __init__(self, cos: Mapping[int, Number] | None = None,
                 sin: Mapping[int, Number] | None = None):
        c = {}
        for k, v in (cos or {}).items():
            if k < 0:
                raise ValueError(f"negative harmonic index {k}")
            c[int(k)] = v
        s = {}
        for k, v in (sin or {}).items():
            if k < 0:
                raise ValueError(f"negative harmonic index {k}")
            if k == 0:
                continue
            s[int(k)] = v
        # one threshold for both maps: relative to the whole polynomial
        exact = all(_is_exact(v) for v in c.values()) and \
            all(_is_exact(v) for v in s.values())
        if exact:
            cut = 0
        else:
            mags = [abs(v) for v in c.values()] + [abs(v) for v in s.values()]
            cut = PRUNE_RTOL * max(mags)
        self._cos = {k: v for k, v in c.items() if v != 0 and abs(v) >= cut}
        self._sin = {k: v for k, v in s.items() if v != 0 and abs(v) >= cut}
        self._hash = None
        self._exact = exact

    @classmethod
    def _raw(cls, c: dict, s: dict, exact: bool) -> "TrigPoly":
        obj = cls.__new__(cls)
        obj._cos, obj._sin, obj._hash, obj._exact = c, s, None, exact
        return obj

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls()

    @classmethod
    def const(cls, value: Number) -> "TrigPoly":
        return cls({0: value})

    @classmethod
    def cosine(cls, k: int, coeff: Number = 1) -> "TrigPoly":
        return cls({k: coeff})

    @classmethod
    def sine(cls, k: int, coeff: Number = 1) -> "TrigPoly":
        return cls(sin={k: coeff})

    # accessors ------------------------------------------------------------

    @property
    def cos_terms(self) -> dict:
        return dict(self._cos)

    @property
    def sin_terms(self) -> dict:
        return dict(self._sin)

    def cos_coeff(self, k: int) -> Number:
        return self._cos.get(k, 0)

    def sin_coeff(self, k: int) -> Number:
        return self._sin.get(k, 0)

    @property
    def harmonics(self) -> set:
        return set(self._cos) | set(self._sin)

    @property
    def max_harmonic(self) -> int:
        """Largest harmonic index present, ``-1`` for the zero polynomial."""
        return max(max(self._cos, default=-1), max(self._sin, default=-1))

    @property
    def is_exact(self) -> bool:
        return self._exact

    def is_zero(self) -> bool:
        return not self._cos and not self._sin

    def max_abs(self) -> float:
        vals = [abs(v) for v in self._cos.values()]
        vals += [abs(v) for v in self._sin.values()]
        return float(max(vals)) if vals else 0.0

    # algebra --------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.const(other)
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({k: -v for k, v in self._cos.items()},
                        {k: -v for k, v in self._sin.items()})

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.const(other)
        return add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TrigPoly):
            return NotImplemented
        if _is_exact(other) and self.is_exact:
            return self.scale(Fraction(1) / Fraction(other))
        return self.scale(1.0 / other)

    def scale(self, factor: Number) -> "TrigPoly":
        if factor == 0:
            return TrigPoly()
        return TrigPoly({k: v * factor for k, v in self._cos.items()},
                        {k: v * factor for k, v in self._sin.items()})

    def derivative(self, times: int = 1) -> "TrigPoly":
        return derivative(self, times)

    def without_fundamental(self) -> "TrigPoly":
        """Copy with the ``k = 1`` cosine and sine terms removed."""
        c = dict(self._cos)
        s = dict(self._sin)
        c.pop(1, None)
        s.pop(1, None)
        return TrigPoly(c, s)

    def __call__(self, theta):
        return evaluate(self, theta)

    def to_float(self) -> "TrigPoly":
        return TrigPoly({k: float(v) for k, v in self._cos.items()},
                        {k: float(v) for k, v in self._sin.items()})

    # comparison -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self._cos == other._cos and self._sin == other._sin

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self._cos.items()),
                               frozenset(self._sin.items())))
        return self._hash

    def allclose(self, other: "TrigPoly", rtol: float = 1e-12,
                 atol: float = 0.0) -> bool:
        scale = max(self.max_abs(), other.max_abs())
        diff = add(self, -other)
        return diff.max_abs() <= atol + rtol * scale

    def __repr__(self):
        parts = [f"{v!r}*cos({k}t)" for k, v in sorted(self._cos.items())]
        parts += [f"{v!r}*sin({k}t)" for k, v in sorted(self._sin.items())]
        return "TrigPoly(" + " + ".join(parts) + ")" if parts else "TrigPoly(0)"


def add(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    c = dict(a._cos)
    for k, v in b._cos.items():
        c[k] = c.get(k, 0) + v
    s = dict(a._sin)
    for k, v in b._sin.items():
        s[k] = s.get(k, 0) + v
    return TrigPoly(c, s)


def total(polys: Iterable[TrigPoly]) -> TrigPoly:
    """Sum of many polynomials with a single prune at the end."""
    c: dict = {}
    s: dict = {}
    for p in polys:
        for k, v in p._cos.items():
            c[k] = c.get(k, 0) + v
        for k, v in p._sin.items():
            s[k] = s.get(k, 0) + v
    return TrigPoly(c, s)


def _mul_exact(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    c: dict = {}
    s: dict = {}

    def put(d, k, v):
        d[k] = d.get(k, 0) + v

    for ka, va in a._cos.items():
        for kb, vb in b._cos.items():
            w = va * vb * _HALF
            put(c, abs(ka - kb), w)
            put(c, ka + kb, w)
        for kb, vb in b._sin.items():
            # cos(ka) sin(kb) = 1/2 [sin(kb+ka) + sin(kb-ka)]
            w = va * vb * _HALF
            put(s, ka + kb, w)
            d = kb - ka
            if d > 0:
                put(s, d, w)
            elif d < 0:
                put(s, -d, -w)
    for ka, va in a._sin.items():
        for kb, vb in b._cos.items():
            w = va * vb * _HALF
            put(s, ka + kb, w)
            d = ka - kb
            if d > 0:
                put(s, d, w)
            elif d < 0:
                put(s, -d, -w)
        for kb, vb in b._sin.items():
            # sin(ka) sin(kb) = 1/2 [cos(ka-kb) - cos(ka+kb)]
            w = va * vb * _HALF
            put(c, abs(ka - kb), w)
            put(c, ka + kb, -w)
    return TrigPoly(c, s)


def _two_sided(p: TrigPoly, size: int, complex_: bool) -> np.ndarray:
    """Exponential-basis coefficients ``e_k`` for ``k = -size..size``."""
    out = np.zeros(2 * size + 1, dtype=complex if complex_ else float)
    for k, v in p._cos.items():
        if k == 0:
            out[size] += v
        else:
            out[size + k] += 0.5 * v
            out[size - k] += 0.5 * v
    if complex_:
        for k, v in p._sin.items():
            out[size + k] += -0.5j * v
            out[size - k] += 0.5j * v
    return out


def _mul_float(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    ka, kb = a.max_harmonic, b.max_harmonic
    if ka < 0 or kb < 0:
        return TrigPoly()
    cplx = bool(a._sin or b._sin)
    prod = np.convolve(_two_sided(a, ka, cplx), _two_sided(b, kb, cplx))
    return _from_two_sided(prod, ka + kb, cplx)


def _from_two_sided(prod: np.ndarray, top: int, cplx: bool) -> TrigPoly:
    upper = prod[top:]
    c = 2.0 * np.real(upper)
    c[0] *= 0.5
    s = -2.0 * np.imag(upper) if cplx else None
    return _from_arrays(c, s)


def dot(left, right) -> TrigPoly:
    """``sum_j left[j] * right[j]`` with one accumulation pass."""
    left, right = list(left), list(right)
    if not left:
        return TrigPoly()
    if all(p.is_exact for p in left) and all(p.is_exact for p in right):
        return total(_mul_exact(a, b) for a, b in zip(left, right))
    pairs = [(a, b) for a, b in zip(left, right)
             if a.max_harmonic >= 0 and b.max_harmonic >= 0]
    if not pairs:
        return TrigPoly()
    top = max(a.max_harmonic + b.max_harmonic for a, b in pairs)
    cplx = any(a._sin or b._sin for a, b in pairs)
    acc = np.zeros(2 * top + 1, dtype=complex if cplx else float)
    for a, b in pairs:
        ka, kb = a.max_harmonic, b.max_harmonic
        prod = np.convolve(_two_sided(a, ka, cplx), _two_sided(b, kb, cplx))
        off = top - (ka + kb)
        acc[off:off + prod.size] += prod
    return _from_two_sided(acc, top, cplx)


def mul(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    """Exact product through the product-to-sum identities."""
    if a.is_exact and b.is_exact:
        return _mul_exact(a, b)
    return _mul_float(a, b)


def derivative(a: TrigPoly, times: int = 1) -> TrigPoly:
    if times < 1:
        raise ValueError("times must be >= 1")
    c, s = dict(a._cos), dict(a._sin)
    for _ in range(times):
        c, s = ({k: k * v for k, v in s.items()},
                {k: -k * v for k, v in c.items() if k != 0})
    return TrigPoly(c, s)


def resonant_part(a: TrigPoly) -> tuple:
    """Coefficients of ``cos(theta)`` and ``sin(theta)``."""
    return a.cos_coeff(1), a.sin_coeff(1)


def invert_unit_oscillator(forcing: TrigPoly) -> TrigPoly:
    """Particular periodic solution ``P`` of ``P'' + P = forcing``.

    Harmonic ``k`` maps to ``1 / (1 - k**2)`` times its coefficient. No
    homogeneous part is added.

    Raises
    ------
    ResonanceError
        If the forcing has a nonzero ``k = 1`` component.
    """
    c1, s1 = resonant_part(forcing)
    if c1 != 0 or s1 != 0:
        raise ResonanceError(
            f"unremoved secular forcing: cos={c1!r}, sin={s1!r}")
    exact = forcing.is_exact

    def gain(k):
        return Fraction(1, 1 - k * k) if exact else 1.0 / (1 - k * k)

    return TrigPoly({k: v * gain(k) for k, v in forcing._cos.items()},
                    {k: v * gain(k) for k, v in forcing._sin.items()})


def evaluate(a: TrigPoly, theta):
    """Value of the sum at ``theta`` (scalar or array)."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for k, v in a._cos.items():
        out = out + float(v) * np.cos(k * theta)
    for k, v in a._sin.items():
        out = out + float(v) * np.sin(k * theta)
    return out if out.ndim else float(out)


def at_zero(a: TrigPoly) -> Number:
    """Exact value at ``theta = 0`` (sum of the cosine coefficients)."""
    return sum(a._cos.values(), 0)


def slope_at_zero(a: TrigPoly) -> Number:
    """Exact phase derivative at ``theta = 0``."""
    return sum((k * v for k, v in a._sin.items()), 0)


def as_exact(value) -> Fraction:
    """Convert ints, Fractions, and decimal strings/floats to ``Fraction``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite value has no exact form")
        return Fraction(repr(value))
    return Fraction(value)
