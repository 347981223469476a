"""Lindstedt-Poincare type recursions for x'' + x = -mu x**(2N-1).

Three methods share one order-by-order machinery:

* ``lpt``   -- classic Lindstedt-Poincare: Omega**2 = sum alpha_n mu**n.
* ``lplde`` -- Lindstedt-Poincare with the linear delta expansion; the
  coupling stays inside the coefficients and Omega**2 = sum alpha_n.
* ``alpt``  -- the alternative scheme where the unexpanded Omega sits in the
  linear operator and the truncated frequency series is solved
  self-consistently.

Initial conditions are x(0) = 1, x'(0) = 0 throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .trigpoly import (TrigPoly, as_exact, at_zero, dot,
                       invert_unit_oscillator, resonant_part, total)

log = logging.getLogger(__name__)

ORDER_CAP = 24

METHODS = ("lpt", "lplde", "alpt")


class AlgebraError(RuntimeError):
    """A resonance the recursion cannot remove (signals a logic bug)."""


class NoStationaryPoint(ArithmeticError):
    pass


class NoRealSolution(ArithmeticError):
    pass


@dataclass(frozen=True)
class OscillatorSpec:
    """``x'' + x = -mu x**(2N-1)`` with x(0) = 1, x'(0) = 0."""

    N: int = 2
    mu: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"power index N must be an integer >= 2, got {self.N}")
        if not self.mu > -1:
            raise ValueError(f"mu must exceed -1 for periodic motion, got {self.mu}")

    @property
    def power(self) -> int:
        return 2 * self.N - 1

    def potential(self, x):
        return 0.5 * x ** 2 + float(self.mu) / (2 * self.N) * x ** (2 * self.N)

    def force(self, x):
        return -x - float(self.mu) * x ** self.power


@dataclass
class MethodOrderState:
    """Per-order solution terms and frequency coefficients.

    ``solutions[n]`` is the order-n trajectory term as a polynomial in the
    phase. ``weight`` is what multiplies order n when the series is summed:
    ``mu`` for ``lpt``/``alpt`` and ``1`` for ``lplde``.
    """

    method: str
    spec: OscillatorSpec
    solutions: List[TrigPoly] = field(default_factory=list)
    alphas: list = field(default_factory=list)
    weight: float = 1.0

    @property
    def order(self) -> int:
        return len(self.solutions) - 1

    def trajectory(self) -> TrigPoly:
        w = self.weight
        return total(x * (w ** n) for n, x in enumerate(self.solutions))


@dataclass
class FrequencyResult:
    omega: float
    omega_sq_partials: list
    method: str
    converged: bool = True
    lambda_used: Optional[float] = None
    lambda_sq: Optional[float] = None
    iterations: int = 0
    note: str = ""

    @property
    def omega_sq(self):
        return self.omega_sq_partials[-1]

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


@dataclass(frozen=True)
class SelfConsistentConfig:
    """Settings for the self-consistent frequency solve.

    ``bracket`` of ``None`` means ``[min(0.5, omega_start / 2), 2 * omega_start]``
    where ``omega_start`` is the third-order LPT frequency.
    """

    tol: float = 1e-13
    max_iter: int = 200
    damping: float = 0.5
    bracket: Optional[tuple] = None
    accelerate: bool = True


def _check_order(order: int, low: int = 0):
    if int(order) != order or order < low:
        raise ValueError(f"order must be an integer >= {low}, got {order}")
    if order > ORDER_CAP:
        raise ValueError(f"order {order} exceeds the cap of {ORDER_CAP}")


def _coerce(value, exact: bool):
    return as_exact(value) if exact else float(value)


class PowerLedger:
    """Order-by-order coefficients of ``X**m`` for a growing series ``X``.

    After ``push(X_k)``, ``term(m, k)`` is the coefficient of ``delta**k`` in
    ``(X_0 + delta X_1 + ...)**m``, built by repeated multiplication.
    """

    def __init__(self, power: int):
        self.power = power
        self._terms: List[List[TrigPoly]] = [[] for _ in range(power + 1)]

    def push(self, x_k: TrigPoly):
        k = len(self._terms[1])
        self._terms[1].append(x_k)
        first = self._terms[1]
        for m in range(2, self.power + 1):
            prev = self._terms[m - 1]
            self._terms[m].append(dot(first[:k + 1], prev[k::-1]))

    def term(self, m: int, k: int) -> TrigPoly:
        return self._terms[m][k]


def _sine_guard(forcing: TrigPoly, n: int):
    s1 = resonant_part(forcing)[1]
    scale = max(forcing.max_abs(), 1.0)
    if s1 != 0 and abs(s1) > 1e-12 * scale:
        raise AlgebraError(f"sine resonance {s1!r} at order {n}")


def _dilated_recursion(power: int, order: int, coupling, shift, exact: bool):
    """Shared LPT / LPLDE recursion in the dilated time ``tau = Omega t``.

    Solves, for n >= 1,
        X_n'' + X_n = -(1/a0) [coupling [X**power]_{n-1}
                               + sum_{j=1..n} a_j X_{n-j}'' - shift X_{n-1}]
    with ``a0 = 1 + shift`` and ``a_n`` chosen to kill the cos(tau) term.
    """
    one = Fraction(1) if exact else 1.0
    a0 = one + shift
    x0 = TrigPoly.cosine(1, one)
    xs = [x0]
    accs = [-x0]  # second derivatives
    alphas = [a0]
    ledger = PowerLedger(power)
    ledger.push(x0)
    for n in range(1, order + 1):
        parts = [ledger.term(power, n - 1) * coupling]
        parts += [accs[n - j] * alphas[j] for j in range(1, n)]
        if shift != 0:
            parts.append(xs[n - 1] * (-shift))
        forcing = -total(parts) / a0
        # the alpha_n term contributes -(alpha_n / a0) X_0'' = (alpha_n / a0) cos
        c1 = resonant_part(forcing)[0]
        alpha_n = -a0 * c1
        _sine_guard(forcing, n)
        forcing = forcing.without_fundamental()
        p = invert_unit_oscillator(forcing)
        if p.sin_terms:
            raise AlgebraError(f"sine terms in conservative solution at order {n}")
        x_n = p + TrigPoly.cosine(1, -at_zero(p))
        xs.append(x_n)
        accs.append(x_n.derivative(2))
        alphas.append(alpha_n)
        ledger.push(x_n)
    return xs, alphas


def _omega_from_sq(omega_sq) -> float:
    v = float(omega_sq)
    return math.sqrt(v) if v > 0 else math.nan


def _partials(alphas, weight):
    out, acc, w = [], 0, 1
    for a in alphas:
        acc = acc + a * w
        out.append(acc)
        w = w * weight
    return out


def lpt_run(spec: OscillatorSpec, order: int, mode: str = "float"):
    """Classic Lindstedt-Poincare expansion through ``order``.

    The frequency coefficients do not depend on ``mu``; the returned partial
    sums are ``sum_{k<=n} alpha_k mu**k``.
    """
    _check_order(order)
    exact = _mode_exact(mode)
    xs, alphas = _dilated_recursion(spec.power, order, _coerce(1, exact),
                                    _coerce(0, exact), exact)
    mu = _coerce(spec.mu, exact)
    partials = _partials(alphas, mu)
    omega = _omega_from_sq(partials[-1])
    state = MethodOrderState("lpt", spec, xs, alphas, weight=mu)
    return state, FrequencyResult(omega, partials, "lpt",
                                  converged=not math.isnan(omega))


def _mode_exact(mode: str) -> bool:
    if mode not in ("float", "rational"):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    return mode == "rational"


def _signed_lambda(lam_sq) -> float:
    v = float(lam_sq)
    return math.copysign(math.sqrt(abs(v)), v)


def lplde_run(spec: OscillatorSpec, order: int, lam: Optional[float] = None,
              *, lam_sq=None, mode: str = "float"):
    """Lindstedt-Poincare with the linear delta expansion.

    Supply either ``lam`` or ``lam_sq`` (the recursion depends only on
    ``lam**2``; ``lam_sq`` may be negative, which is how the mu < 0 regime
    is handled). With neither, the third-order PMS value is used.
    """
    _check_order(order)
    exact = _mode_exact(mode)
    if lam is not None and lam_sq is not None:
        raise ValueError("pass lam or lam_sq, not both")
    if lam is not None:
        if not math.isfinite(float(lam)):
            raise ValueError("lambda must be finite")
        lam_sq = _coerce(lam, exact) ** 2
    elif lam_sq is None:
        lam_sq = pms_lambda_sq(spec, 3) if order >= 1 else 0.0
    lam_sq = _coerce(lam_sq, exact)
    if not lam_sq > -1:
        raise ValueError(f"lambda**2 must exceed -1, got {lam_sq}")
    mu = _coerce(spec.mu, exact)
    xs, alphas = _dilated_recursion(spec.power, order, mu, lam_sq, exact)
    partials = _partials(alphas, 1)
    # alpha_0 = 1 + lam**2 and alpha_1 carries -lam**2
    omega = _omega_from_sq(partials[-1])
    state = MethodOrderState("lplde", spec, xs, alphas, weight=1)
    res = FrequencyResult(omega, partials, "lplde",
                          converged=not math.isnan(omega),
                          lambda_used=_signed_lambda(lam_sq),
                          lambda_sq=float(lam_sq))
    return state, res


def _lplde_omega(spec, order, lam_sq):
    _, res = lplde_run(spec, order, lam_sq=lam_sq)
    return res.omega


def _stationary_points(fun, grid):
    """Roots of a centred-difference derivative of ``fun`` along ``grid``."""

    def deriv(x):
        h = 1e-5 * (1.0 + abs(x))
        return (fun(x + h) - fun(x - h)) / (2 * h)

    vals = [deriv(x) for x in grid]
    roots = []
    for (x0, d0), (x1, d1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if not (math.isfinite(d0) and math.isfinite(d1)):
            continue
        if d0 == 0:
            roots.append(x0)
        elif d0 * d1 < 0:
            roots.append(brentq(deriv, x0, x1, xtol=1e-13, rtol=1e-14))
    return roots


def pms_lambda_sq(spec: OscillatorSpec, order: int, *, lam_sq_max=None,
                  reference=None) -> float:
    """Stationary value of ``lambda**2`` for the LPLDE frequency at ``order``.

    For the Duffing case at third order the stationary point is ``3 mu / 4``
    in closed form. Otherwise the derivative of Omega with respect to
    ``lambda**2`` is scanned over ``(-1, lam_sq_max]``; when several
    stationary points exist the one closest to ``reference`` (default: the
    third-order value) is returned.
    """
    _check_order(order, 1)
    mu = float(spec.mu)
    if mu == 0:
        return 0.0
    if spec.N == 2 and order == 3:
        return 0.75 * mu
    if lam_sq_max is None:
        lam_sq_max = 20.0 * spec.N * max(1.0, abs(mu))
    neg = -1 + np.geomspace(1e-3, 1.0, 60)[:-1]
    pos = np.geomspace(1e-4, lam_sq_max, 240)
    grid = list(neg) + [0.0] + list(pos)

    def fun(L):
        return _lplde_omega(spec, order, L)

    roots = _stationary_points(fun, grid)
    if not roots:
        raise NoStationaryPoint(
            f"no stationary point of Omega(lambda) at order {order} "
            f"(N={spec.N}, mu={mu})")
    if reference is None:
        reference = (pms_lambda_sq(spec, 3, lam_sq_max=lam_sq_max)
                     if order != 3 else math.copysign(1.0, mu) * 0.75 * abs(mu))
    return min(roots, key=lambda r: abs(r - reference))


def pms_lambda(spec: OscillatorSpec, order: int, **kwargs) -> float:
    """PMS value of lambda; negative results encode imaginary lambda.

    Returns ``sqrt(L)`` for a stationary ``L = lambda**2 >= 0`` and
    ``-sqrt(-L)`` when ``L < 0``.
    """
    return _signed_lambda(pms_lambda_sq(spec, order, **kwargs))


# ALPT ---------------------------------------------------------------------


def alpt_recursion(spec: OscillatorSpec, order: int, omega_sq,
                   exact: bool = False) -> MethodOrderState:
    """Order-by-order ALPT terms at a fixed trial ``Omega**2``.

    Works in the phase ``theta = Omega t``: each order solves
    ``Omega**2 (x_n'' + x_n) = sum_{j=1..n} alpha_j x_{n-j} - [x**(2N-1)]_{n-1}``.
    ``alphas[0]`` is 1 so that ``Omega**2 = sum alpha_n mu**n``.
    """
    one = Fraction(1) if exact else 1.0
    omega_sq = _coerce(omega_sq, exact)
    x0 = TrigPoly.cosine(1, one)
    xs = [x0]
    alphas = [one]
    power = spec.power
    ledger = PowerLedger(power)
    ledger.push(x0)
    for n in range(1, order + 1):
        parts = [xs[n - j] * alphas[j] for j in range(1, n)]
        parts.append(-ledger.term(power, n - 1))
        rhs = total(parts)
        # alpha_n multiplies x_0 = cos(theta)
        alpha_n = -resonant_part(rhs)[0]
        _sine_guard(rhs, n)
        forcing = rhs.without_fundamental() / omega_sq
        p = invert_unit_oscillator(forcing)
        x_n = p + TrigPoly.cosine(1, -at_zero(p))
        xs.append(x_n)
        alphas.append(alpha_n)
        ledger.push(x_n)
    mu = _coerce(spec.mu, exact)
    return MethodOrderState("alpt", spec, xs, alphas, weight=mu)


def _alpt_rhs(spec, order, omega):
    state = alpt_recursion(spec, order, omega * omega)
    return _partials(state.alphas, float(spec.mu))[-1], state


def solve_self_consistent(rhs, omega_start: float, config: SelfConsistentConfig,
                          bracket: tuple):
    """Solve ``Omega**2 = rhs(Omega)`` for ``Omega > 0``.

    Damped fixed-point iteration on ``Omega <- sqrt(rhs(Omega))`` first; if
    that does not settle, bisection on ``g = Omega**2 - rhs(Omega)`` inside
    ``bracket``. Returns ``(omega, converged, iterations, note)``.
    """
    omega = omega_start
    it = 0
    history = []
    while it < config.max_iter:
        it += 1
        val = rhs(omega)
        if not (math.isfinite(val) and val > 0):
            break
        new = math.sqrt(val)
        if abs(new - omega) < config.tol:
            return new, True, it, "fixed-point"
        omega = omega + config.damping * (new - omega)
        history.append(omega)
        if config.accelerate and len(history) == 3:
            # Aitken extrapolation of three damped iterates
            w0, w1, w2 = history
            denom = w2 - 2 * w1 + w0
            history = []
            if denom != 0:
                cand = w2 - (w2 - w1) ** 2 / denom
                if math.isfinite(cand) and cand > 0:
                    omega = cand
                    history = [cand]

    def g(w):
        return w * w - rhs(w)

    lo, hi = bracket
    glo, ghi = g(lo), g(hi)
    if not (math.isfinite(glo) and math.isfinite(ghi)) or glo * ghi > 0:
        raise NoRealSolution(
            f"no sign change of Omega^2 - rhs(Omega) on [{lo}, {hi}]")
    nbis = 0
    while hi - lo > config.tol and nbis < 200:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        nbis += 1
        if gm == 0:
            lo = hi = mid
            break
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi), True, it + nbis, "bisection"


def alpt_run(spec: OscillatorSpec, order: int,
             solver: SelfConsistentConfig = SelfConsistentConfig()):
    """Alternative Lindstedt-Poincare frequency through ``order``.

    Raises
    ------
    NoRealSolution
        If neither the fixed-point iteration nor a bracketed bisection finds
        a positive root of the truncated frequency equation.
    """
    _check_order(order)
    mu = float(spec.mu)
    if order == 0 or mu == 0:
        state = alpt_recursion(spec, order, 1.0)
        partials = _partials(state.alphas, mu)
        return state, FrequencyResult(1.0 if mu == 0 else _omega_from_sq(partials[-1]),
                                      partials, "alpt")
    _, lpt3 = lpt_run(spec, 3)
    start = lpt3.omega if math.isfinite(lpt3.omega) else 1.0
    bracket = solver.bracket or (min(0.5, 0.5 * start), 2.0 * start)

    def rhs(w):
        return _alpt_rhs(spec, order, w)[0]

    try:
        omega, ok, iters, note = solve_self_consistent(rhs, start, solver, bracket)
    except NoRealSolution:
        state = alpt_recursion(spec, order, start * start)
        return state, FrequencyResult(math.nan, [math.nan], "alpt",
                                      converged=False,
                                      note="no real solution")
    total_sq, state = _alpt_rhs(spec, order, omega)
    partials = _partials(state.alphas, mu)
    # the returned Omega**2 is the self-consistent value itself
    partials[-1] = omega * omega
    if omega <= 0:
        ok = False
    return state, FrequencyResult(omega, partials, "alpt", converged=ok,
                                  iterations=iters, note=note)


def run_method(method: str, spec: OscillatorSpec, order: int, *, lam=None,
               lam_sq=None, mode="float", solver=None):
    if method == "lpt":
        return lpt_run(spec, order, mode=mode)
    if method == "lplde":
        return lplde_run(spec, order, lam, lam_sq=lam_sq, mode=mode)
    if method == "alpt":
        if mode != "float":
            raise ValueError("alpt solves a transcendental equation; use float mode")
        return alpt_run(spec, order, solver or SelfConsistentConfig())
    raise ValueError(f"unknown method {method!r}")


def residual_norm(spec: OscillatorSpec, state: MethodOrderState, omega: float,
                  points: int = 512) -> float:
    """Max of ``|x'' + x + mu x**(2N-1)|`` over one period of the summed series."""
    points = max(int(points), 256)
    theta = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    traj = state.trajectory()
    x = traj(theta)
    acc = float(omega) ** 2 * traj.derivative(2)(theta)
    res = acc + x + float(spec.mu) * x ** spec.power
    return float(np.max(np.abs(res)))
