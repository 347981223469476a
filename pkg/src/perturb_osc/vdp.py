"""Van der Pol limit cycle by LPLDE and ALPT.

Both methods fix, at every order n >= 1, the frequency coefficient alpha_n
and the amplitude correction A_{n-1} by demanding that the cos and sin
fundamentals of the order-n forcing vanish. A_{n-1} is the free cos amplitude
of x_{n-1}, whose initial conditions are x_{n-1}(0) = A_{n-1} and
x'_{n-1}(0) = 0. The last amplitude A_order is left at zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .conservative import (ORDER_CAP, NoRealSolution, NoStationaryPoint,
                           SelfConsistentConfig, _stationary_points,
                           solve_self_consistent)
from .trigpoly import (TrigPoly, at_zero, dot, invert_unit_oscillator,
                       resonant_part, slope_at_zero, total)

log = logging.getLogger(__name__)

ALPT_TRUST_LIMIT = 2.0


class SingularResonance(ArithmeticError):
    """The 2x2 resonance system for (alpha_n, A_{n-1}) is degenerate."""


@dataclass
class VdpOrderState:
    method: str
    mu: float
    solutions: List[TrigPoly] = field(default_factory=list)
    alphas: list = field(default_factory=list)
    amplitudes: list = field(default_factory=list)
    weight: float = 1.0
    omega: float = 1.0
    leftover: list = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.solutions) - 1

    def trajectory(self) -> TrigPoly:
        w = self.weight
        return total(x * (w ** n) for n, x in enumerate(self.solutions))


@dataclass
class VdpResult:
    omega: float
    method: str
    amplitude: float
    converged: bool = True
    lambda_used: Optional[float] = None
    lambda_sq: Optional[float] = None
    warning: str = ""
    iterations: int = 0

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega if self.omega else math.nan


def _cos1():
    return TrigPoly.cosine(1, 1.0)


def _homogeneous_fix(p: TrigPoly) -> TrigPoly:
    """Add the fundamental that gives value 0 and slope 0 at phase 0."""
    return p + TrigPoly({1: -at_zero(p)}, {1: -slope_at_zero(p)})


class _Recursion:
    """Double resonance elimination shared by both methods.

    Subclasses supply ``forcing(n, xs, vels, alpha_n)`` (the order-n
    right-hand side of ``x_n'' + x_n = ...`` in the phase variable) and
    ``alpha_gain`` is irrelevant: alpha_n and A_{n-1} enter affinely and the
    affine maps are recovered by evaluation.
    """

    def __init__(self, mu: float):
        self.mu = float(mu)
        # without damping in the per-order forcing the sin row vanishes
        self.degenerate = self.mu == 0
        self.xs: List[TrigPoly] = []
        self.alphas: list = []
        self.amps: list = []
        self._sq: List[TrigPoly] = []  # [x**2]_k for finalised k
        self.leftover: list = []  # (cos, sin) resonance after elimination

    def _x_sq(self, k, xs):
        if k < len(self._sq):
            return self._sq[k]
        return dot(xs[:k + 1], xs[k::-1])

    def cubic_term(self, k, xs, vels):
        """[x**2 x']_k for the current candidate series."""
        sq = [self._x_sq(j, xs) for j in range(k + 1)]
        return dot(sq, vels[k::-1])

    def forcing(self, n, xs, vels, alpha_n):
        raise NotImplementedError

    def solve_forcing(self, forcing: TrigPoly) -> TrigPoly:
        return invert_unit_oscillator(forcing)

    def _eval(self, n, base, alpha, amp):
        xs = self.xs[:n - 1] + [base + _cos1() * amp]
        vels = [x.derivative() for x in xs]
        return self.forcing(n, xs, vels, alpha)

    def run(self, order: int):
        # order 1: A_0 from the sin condition (odd cubic in A_0), then alpha_1
        base = TrigPoly()
        s = [resonant_part(self._eval(1, base, 0.0, a))[1] for a in (1.0, 2.0)]
        c3 = (s[1] - 2 * s[0]) / 6.0
        c1 = s[0] - c3
        if self.degenerate or c3 == 0:
            amp0 = 2.0  # mu -> 0+ limit; the amplitude is otherwise free
        elif -c1 / c3 <= 0:
            raise SingularResonance("no positive limit-cycle amplitude at first order")
        else:
            amp0 = math.sqrt(-c1 / c3)
        pending = base  # x_{n-1} without its free amplitude
        for n in range(1, order + 1):
            if n == 1:
                f0 = self._eval(1, pending, 0.0, amp0)
                fa = self._eval(1, pending, 1.0, amp0) - f0
                ca = resonant_part(fa)[0]
                if ca == 0:
                    raise SingularResonance("alpha_1 does not enter the cos resonance")
                alpha = -resonant_part(f0)[0] / ca
                amp = amp0
                forcing = f0 + fa * alpha
            else:
                f0 = self._eval(n, pending, 0.0, 0.0)
                fa = self._eval(n, pending, 1.0, 0.0) - f0
                fA = self._eval(n, pending, 0.0, 1.0) - f0
                (c0, s0), (ca, sa), (cA, sA) = (resonant_part(f) for f in (f0, fa, fA))
                if self.degenerate:
                    if ca == 0:
                        raise SingularResonance(f"degenerate cos resonance at order {n}")
                    alpha, amp = -c0 / ca, 0.0
                else:
                    m = np.array([[ca, cA], [sa, sA]], dtype=float)
                    scale = max(np.abs(m).max(), 1e-300)
                    det = np.linalg.det(m)
                    if abs(det) <= 1e-13 * scale * scale:
                        raise SingularResonance(
                            f"singular (alpha_{n}, A_{n - 1}) system, det={det:.3e}")
                    alpha, amp = np.linalg.solve(m, -np.array([c0, s0], dtype=float))
                    alpha, amp = float(alpha), float(amp)
                forcing = f0 + fa * alpha + fA * amp
            x_prev = pending + _cos1() * amp
            if n - 1 < len(self.xs):
                self.xs[n - 1] = x_prev
            else:
                self.xs.append(x_prev)
            self.amps.append(amp)
            self.alphas.append(alpha)
            self._sq.append(self._x_sq(n - 1, self.xs))
            c1r, s1r = resonant_part(forcing)
            self.leftover.append((float(c1r), float(s1r)))
            scale = max(forcing.max_abs(), 1.0)
            if max(abs(c1r), abs(s1r)) > 1e-9 * scale:
                raise SingularResonance(f"resonance survived elimination at order {n}")
            pending = _homogeneous_fix(self.solve_forcing(forcing.without_fundamental()))
        # truncation: the last amplitude correction stays zero
        self.xs.append(pending)
        self.amps.append(0.0)
        return self


class _LpldeRecursion(_Recursion):
    def __init__(self, mu, lam_sq):
        super().__init__(mu)
        self.lam_sq = float(lam_sq)
        self.a0 = math.sqrt(1.0 + self.lam_sq)

    def run(self, order):
        self.alphas = []
        self._omega = [self.a0]
        return super().run(order)

    def forcing(self, n, xs, vels, alpha_n):
        mu, L = self.mu, self.lam_sq
        a = [self.a0] + self.alphas[:n - 1] + [alpha_n]
        a = a[:n + 1]
        # coefficients of Omega**2 in delta
        beta = [sum(a[i] * a[m - i] for i in range(m + 1)) for m in range(n + 1)]
        accs = [v.derivative() for v in vels]
        parts = []
        if mu != 0:
            drive = [vels[n - 1 - i] - self.cubic_term(n - 1 - i, xs, vels)
                     for i in range(n)]
            parts.append(dot([TrigPoly.const(a[i]) for i in range(n)], drive) * mu)
        if L != 0:
            parts.append(xs[n - 1] * L)
        parts += [accs[n - m] * (-beta[m]) for m in range(1, n + 1)]
        return total(parts) / (1.0 + L)


class _AlptRecursion(_Recursion):
    def __init__(self, mu, omega):
        super().__init__(mu)
        self.omega = float(omega)
        # mu is the series weight here, not a factor of the forcing
        self.degenerate = False

    def forcing(self, n, xs, vels, alpha_n):
        w = self.omega
        al = [1.0] + self.alphas[:n - 1] + [alpha_n]
        parts = [xs[n - j] * al[j] for j in range(1, n + 1)]
        # d/dt = Omega d/dtheta
        parts.append(vels[n - 1] * w)
        parts.append(self.cubic_term(n - 1, xs, vels) * (-w))
        return total(parts)

    def solve_forcing(self, forcing):
        return invert_unit_oscillator(forcing / (self.omega ** 2))


def _check(mu, order):
    if not mu >= 0:
        raise ValueError(f"Van der Pol engines need mu >= 0, got {mu}")
    if int(order) != order or order < 1 or order > ORDER_CAP:
        raise ValueError(f"order must be in 1..{ORDER_CAP}, got {order}")


def vdp_lplde_run(mu: float, order: int, lam: Optional[float] = None, *,
                  lam_sq: Optional[float] = None):
    """LPLDE for ``x'' + x = mu (1 - x**2) x'``.

    The delta series is taken for Omega itself, Omega = sum alpha_n, with
    ``alpha_0 = sqrt(1 + lam**2)`` so that ``alpha_0**2 = 1 + lam**2``
    balances the shifted linear term.
    """
    mu = float(mu)
    _check(mu, order)
    if lam is not None and lam_sq is not None:
        raise ValueError("pass lam or lam_sq, not both")
    L = float(lam) ** 2 if lam is not None else float(lam_sq or 0.0)
    if not L > -1:
        raise ValueError("lambda**2 must exceed -1")
    rec = _LpldeRecursion(mu, L).run(order)
    alphas = [rec.a0] + list(rec.alphas)
    omega = float(sum(alphas))
    state = VdpOrderState("lplde", mu, rec.xs, alphas, rec.amps, weight=1.0,
                          omega=omega, leftover=rec.leftover)
    ok = omega > 0
    res = VdpResult(omega, "lplde", float(sum(rec.amps)), converged=ok,
                    lambda_used=math.copysign(math.sqrt(abs(L)), L), lambda_sq=L,
                    warning="" if ok else "non-positive frequency")
    return state, res


def vdp_pms_lambda_sq(mu: float, order: int = 3, lam_sq_max: float = 50.0) -> float:
    """Stationary ``lambda**2`` of the LPLDE frequency, closest to zero."""
    grid = list(-1 + np.geomspace(1e-3, 1.0, 40)[:-1]) + [0.0] + \
        list(np.geomspace(1e-4, lam_sq_max, 160))

    def fun(L):
        return vdp_lplde_run(mu, order, lam_sq=L)[1].omega

    roots = _stationary_points(fun, grid)
    if not roots:
        raise NoStationaryPoint(f"no stationary point for VdP at mu={mu}, order={order}")
    return min(roots, key=abs)


def alpt_vdp_recursion(mu: float, order: int, omega: float) -> VdpOrderState:
    rec = _AlptRecursion(mu, omega).run(order)
    alphas = [1.0] + list(rec.alphas)
    return VdpOrderState("alpt", float(mu), rec.xs, alphas, rec.amps,
                         weight=float(mu), omega=float(omega), leftover=rec.leftover)


def _alpt_amplitude(state: VdpOrderState) -> float:
    mu = state.mu
    return float(sum(a * mu ** n for n, a in enumerate(state.amplitudes)))


def _alpt_sq(state: VdpOrderState) -> float:
    mu = state.mu
    return float(sum(a * mu ** n for n, a in enumerate(state.alphas)))


def vdp_alpt_run(mu: float, order: int,
                 solver: SelfConsistentConfig = SelfConsistentConfig()):
    """ALPT for the Van der Pol limit cycle with a self-consistent Omega.

    Results for ``mu > 2`` carry a warning: the method is known to give a
    wrong frequency there, and the output is reported, not corrected.
    """
    mu = float(mu)
    _check(mu, order)
    warn = f"mu > {ALPT_TRUST_LIMIT}: ALPT frequency unreliable" \
        if mu > ALPT_TRUST_LIMIT else ""
    if mu == 0:
        state = alpt_vdp_recursion(0.0, order, 1.0)
        return state, VdpResult(1.0, "alpt", _alpt_amplitude(state))

    def rhs(w):
        try:
            return _alpt_sq(alpt_vdp_recursion(mu, order, w))
        except SingularResonance:
            return math.nan

    start = 1.0
    bracket = solver.bracket or (0.05, 4.0)
    try:
        omega, ok, iters, note = solve_self_consistent(rhs, start, solver, bracket)
    except NoRealSolution as exc:
        state = alpt_vdp_recursion(mu, order, start)
        return state, VdpResult(math.nan, "alpt", math.nan, converged=False,
                                warning=("; ".join(filter(None, [warn, str(exc)]))))
    state = alpt_vdp_recursion(mu, order, omega)
    if not omega > 0:
        ok = False
        warn = "; ".join(filter(None, [warn, "non-positive frequency"]))
    return state, VdpResult(omega, "alpt", _alpt_amplitude(state),
                            converged=ok, warning=warn, iterations=iters)


def vdp_residual_norm(state: VdpOrderState, points: int = 512) -> float:
    """Max of ``|x'' + x - mu (1 - x**2) x'|`` for the summed series."""
    theta = np.linspace(0.0, 2 * np.pi, max(points, 256), endpoint=False)
    traj = state.trajectory()
    w = state.omega
    x = traj(theta)
    v = w * traj.derivative()(theta)
    acc = w * w * traj.derivative(2)(theta)
    return float(np.max(np.abs(acc + x - state.mu * (1 - x * x) * v)))
