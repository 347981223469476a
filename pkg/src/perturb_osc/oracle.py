"""Reference frequencies and periods computed without perturbation theory."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853

from .conservative import OscillatorSpec

log = logging.getLogger(__name__)


class OracleError(ArithmeticError):
    pass


class StepSizeUnderflow(OracleError):
    pass


class StiffnessWarning(UserWarning):
    pass


@dataclass
class OracleResult:
    value: float
    est_error: float
    evaluations: int

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.est_error >= 0):
            raise OracleError(f"invalid oracle output {self.value!r} +/- {self.est_error!r}")


# conservative oscillators ------------------------------------------------


def _period_integrand(N: int, mu: float):
    # 2 (V(1) - V(sin phi)) = cos(phi)**2 * (1 + (mu/N) sum_k sin(phi)**(2k))
    def f(phi):
        s2 = np.sin(phi) ** 2
        acc = np.ones_like(s2)
        term = np.ones_like(s2)
        for _ in range(1, N):
            term = term * s2
            acc = acc + term
        return 1.0 / np.sqrt(1.0 + (mu / N) * acc)
    return f


def exact_frequency_quadrature(spec: OscillatorSpec, rtol: float = 1e-12,
                               max_nodes: int = 1 << 16) -> OracleResult:
    """Frequency from the turning-point integral for x(0) = 1, x'(0) = 0.

    ``T = 4 int_0^1 dx / sqrt(2 (V(1) - V(x)))`` with ``x = sin(phi)``, which
    removes the inverse square-root singularity at the turning point. The
    smooth integrand is handled by Gauss-Legendre with node doubling.
    """
    mu = float(spec.mu)
    if not mu > -1:
        raise OracleError("no periodic motion for mu <= -1")
    f = _period_integrand(spec.N, mu)
    half = 0.25 * math.pi
    n, prev, evals = 8, None, 0
    while n <= max_nodes:
        x, w = np.polynomial.legendre.leggauss(n)
        est = 4.0 * half * float(np.dot(w, f(half * (x + 1.0))))
        evals += n
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            T = est
            return OracleResult(2 * math.pi / T, 2 * math.pi / T * abs(est - prev) / T + 0.0,
                                evals)
        prev = est
        n *= 2
    raise OracleError(f"quadrature did not converge with {max_nodes} nodes")


def agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 1e-16 * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter ``m < 1``."""
    if not m < 1:
        raise ValueError("K(m) diverges for m >= 1")
    return 0.5 * math.pi / agm(1.0, math.sqrt(1.0 - m))


def duffing_exact_elliptic(mu: float) -> OracleResult:
    """Duffing frequency ``pi sqrt(1+mu) / (2 K(m))``, ``m = mu / (2 (1+mu))``."""
    mu = float(mu)
    if not mu > -1:
        raise OracleError("no periodic motion for mu <= -1")
    m = mu / (2.0 * (1.0 + mu))
    omega = math.pi * math.sqrt(1.0 + mu) / (2.0 * elliptic_k(m))
    return OracleResult(omega, 4 * np.finfo(float).eps * omega, 1)


# adaptive integration ------------------------------------------------------


@dataclass
class Step:
    """One accepted step with its dense-output interpolant."""

    t0: float
    h: float
    interp: Callable

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.interp(t))


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    steps: list
    evaluations: int

    def sol(self, t: float) -> np.ndarray:
        idx = np.searchsorted(self.t, t, side="right") - 1
        idx = min(max(idx, 0), len(self.steps) - 1)
        return self.steps[idx](t)


class Stepper:
    """Step-by-step driver around scipy's DOP853 embedded pair.

    ``tol`` is used as both the relative and the absolute local tolerance.
    """

    def __init__(self, fun: Callable, t0: float, y0, tol: float,
                 t_bound: float = np.inf, max_step: float = np.inf):
        if not tol > 0:
            raise ValueError("tol must be positive")
        self._solver = DOP853(fun, float(t0), np.asarray(y0, dtype=float),
                              t_bound, rtol=tol, atol=tol, max_step=max_step)

    @property
    def t(self) -> float:
        return self._solver.t

    @property
    def y(self) -> np.ndarray:
        return self._solver.y

    @property
    def nfev(self) -> int:
        return self._solver.nfev

    def step(self) -> Step:
        solver = self._solver
        if solver.status != "running":
            raise OracleError(f"integration already finished at t={solver.t}")
        msg = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"{msg} (t={solver.t})")
        return Step(solver.t_old, solver.t - solver.t_old, solver.dense_output())


def integrate_ivp(fun: Callable, y0, t_end: float, tol: float,
                  t0: float = 0.0, max_step: float = np.inf) -> Trajectory:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` adaptively.

    ``tol`` is the relative and absolute local error target per step.

    Raises
    ------
    StepSizeUnderflow
        If the controller is forced below roundoff level.
    """
    stepper = Stepper(fun, t0, y0, tol, t_bound=t_end, max_step=max_step)
    ts, ys, steps = [stepper.t], [stepper.y.copy()], []
    while stepper.t < t_end:
        steps.append(stepper.step())
        ts.append(stepper.t)
        ys.append(stepper.y.copy())
    return Trajectory(np.array(ts), np.array(ys), steps, stepper.nfev)


def conservative_rhs(spec: OscillatorSpec):
    p, mu = spec.power, float(spec.mu)

    def f(t, y):
        x, v = y
        return (v, -x - mu * x ** p)
    return f


def frequency_by_integration(spec: OscillatorSpec, tol: float = 1e-12) -> OracleResult:
    """Frequency from direct integration of ``x(0) = 1, x'(0) = 0``.

    The velocity changes sign at ``T/2`` (x = -1) and again at ``T``; the
    error estimate compares the full period with twice the half period.
    """
    if not float(spec.mu) > -1:
        raise OracleError("no periodic motion for mu <= -1")
    stepper = Stepper(conservative_rhs(spec), 0.0, (1.0, 0.0), tol,
                      t_bound=1e4, max_step=0.05 * 2 * math.pi)
    # the first step may leave v at -0.0; skip crossings before any motion
    found = []
    while len(found) < 2:
        v_prev = stepper.y[1]
        st = stepper.step()
        v_new = stepper.y[1]
        if len(found) == 0 and v_prev < 0 <= v_new:
            found.append(_refine_crossing(st))
        elif len(found) == 1 and v_prev > 0 >= v_new:
            found.append(_refine_crossing(st))
        if stepper.t >= 1e4:
            raise OracleError("no period found")
    T = found[1]
    omega = 2 * math.pi / T
    return OracleResult(omega, omega * (abs(T - 2 * found[0]) + tol) / T, stepper.nfev)


# Van der Pol ----------------------------------------------------------------


def vdp_rhs(mu: float):
    def f(t, y):
        x, v = y
        return (v, mu * (1.0 - x * x) * v - x)
    return f


def _refine_crossing(st: Step, tol_t: float = 1e-13) -> float:
    """Bisection on the interpolated velocity sign within one step."""
    a, b = st.t0, st.t0 + st.h
    va = st(a)[1]
    while b - a > tol_t:
        m = 0.5 * (a + b)
        vm = st(m)[1]
        if (vm > 0) == (va > 0):
            a, va = m, vm
        else:
            b = m
    return 0.5 * (a + b)


def default_vdp_tol(mu: float) -> float:
    return 1e-9 if mu <= 10 else 1e-7


def vdp_limit_cycle_period(mu: float, tol: Optional[float] = None,
                           y0=(2.0, 0.0), max_cycles: int = 200) -> OracleResult:
    """Van der Pol limit-cycle period from successive Poincare crossings.

    The section is ``x' = 0`` with ``x > 0`` (velocity turning from positive
    to negative). Integration uses a local tolerance of ``tol / 100``.
    """
    mu = float(mu)
    if not mu > 0:
        raise OracleError("the Van der Pol oracle needs mu > 0")
    if tol is None:
        tol = default_vdp_tol(mu)
    if mu >= 20:
        warnings.warn(f"mu={mu}: stiff regime, explicit integration is slow "
                      "and tolerances may need tightening", StiffnessWarning)
    # one period is at least ~2 pi; guard against runaway integration
    t_guard = (max_cycles + 2) * max(2 * math.pi, 2.0 * mu) * 2
    stepper = Stepper(vdp_rhs(mu), 0.0, y0, tol / 100.0, t_bound=t_guard,
                      max_step=0.05 * 2 * math.pi)
    crossings = []
    periods = []
    while stepper.t < t_guard:
        y_prev = stepper.y
        st = stepper.step()
        if y_prev[1] > 0 and stepper.y[1] <= 0 and st(st.t0 + st.h)[0] > 0:
            tc = _refine_crossing(st)
            crossings.append(tc)
            if len(crossings) >= 2:
                periods.append(crossings[-1] - crossings[-2])
            if len(periods) >= 2:
                diff = abs(periods[-1] - periods[-2])
                if diff < tol * periods[-1]:
                    return OracleResult(periods[-1], diff, stepper.nfev)
            if len(periods) >= max_cycles:
                break
    raise OracleError(f"VdP period did not settle within {max_cycles} cycles "
                      f"(mu={mu}); tighten tol")
