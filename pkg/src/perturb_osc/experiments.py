"""Error sweeps over the coupling and over the order, written as CSV."""

from __future__ import annotations

import csv
import io
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .conservative import (NoRealSolution, NoStationaryPoint, OscillatorSpec,
                           pms_lambda_sq, run_method)
from .oracle import (StiffnessWarning, default_vdp_tol,
                     exact_frequency_quadrature, vdp_limit_cycle_period)
from .vdp import (SingularResonance, vdp_alpt_run, vdp_lplde_run,
                  vdp_pms_lambda_sq)

SYSTEMS: Dict[str, Optional[int]] = {"duffing": 2, "sextic": 3, "octic": 4, "vdp": None}
CONSERVATIVE_METHODS = ("lpt", "lplde", "alpt")
VDP_METHODS = ("lplde", "alpt")

SWEEP_COLUMNS = ("mu", "method", "order", "omega", "omega_oracle", "delta",
                 "converged", "lambda_used")
SCAN_COLUMNS = ("order", "method", "mu", "omega", "omega_oracle", "delta",
                "converged", "lambda_used")

# (start, stop, count, scale)
DEFAULT_GRIDS = {
    "positive": (1e-2, 1e2, 200, "log"),
    "negative": (-0.99, 0.0, 100, "linear"),
    "vdp": (0.1, 5.0, 50, "linear"),
}


class UsageError(ValueError):
    pass


def methods_for(system: str) -> tuple:
    return VDP_METHODS if system == "vdp" else CONSERVATIVE_METHODS


@dataclass
class SweepConfig:
    system: str = "duffing"
    methods: Sequence[str] = ()
    mu_min: float = 1e-2
    mu_max: float = 1e2
    mu_count: int = 200
    mu_scale: str = "log"
    order: int = 20
    arith: str = "float"
    out: Optional[str] = None
    lam: Optional[object] = None
    tol: Optional[float] = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise UsageError(f"unknown system {self.system!r}")
        self.methods = tuple(self.methods) or methods_for(self.system)
        bad = [m for m in self.methods if m not in methods_for(self.system)]
        if bad:
            raise UsageError(f"method(s) {bad} not available for {self.system}")
        if self.mu_scale not in ("linear", "log"):
            raise UsageError("mu scale must be 'linear' or 'log'")
        if self.mu_count < 1:
            raise UsageError("mu count must be >= 1")
        if self.arith not in ("float", "rational"):
            raise UsageError("arith must be 'float' or 'rational'")
        if self.arith == "rational" and (self.system == "vdp" or "alpt" in self.methods):
            raise UsageError("rational arithmetic only applies to lpt/lplde "
                             "on conservative systems")
        floor = 0.0 if self.system == "vdp" else -1.0
        lo = min(self.mu_min, self.mu_max)
        if not lo > floor:
            raise UsageError(f"mu grid must satisfy mu > {floor:g} for {self.system}")
        if self.mu_scale == "log" and lo <= 0:
            raise UsageError("log-spaced grids need positive mu bounds")

    def grid(self) -> List[float]:
        if self.mu_count == 1:
            return [float(self.mu_min)]
        if self.mu_scale == "log":
            g = np.geomspace(self.mu_min, self.mu_max, self.mu_count)
        else:
            g = np.linspace(self.mu_min, self.mu_max, self.mu_count)
        return sorted(float(x) for x in g)


@dataclass
class Record:
    system: str
    mu: float
    method: str
    order: int
    omega: float
    omega_oracle: float
    converged: bool
    lambda_used: Optional[float] = None
    partials: list = field(default_factory=list)
    note: str = ""
    oracle_error: float = 0.0
    amplitude: Optional[float] = None

    @property
    def delta(self) -> float:
        """``|Omega_exact - Omega_approx|``; failed runs count as infinite."""
        if not self.converged or not math.isfinite(self.omega):
            return math.inf
        return abs(self.omega_oracle - self.omega)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega if self.omega else math.nan

    @property
    def period_oracle(self) -> float:
        return 2 * math.pi / self.omega_oracle


def oracle_omega(system: str, mu: float, tol: Optional[float] = None):
    """Reference frequency and its error estimate."""
    if system == "vdp":
        if mu == 0:
            return 1.0, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StiffnessWarning)
            res = vdp_limit_cycle_period(mu, tol or default_vdp_tol(mu))
        omega = 2 * math.pi / res.value
        return omega, omega * res.est_error / res.value
    res = exact_frequency_quadrature(OscillatorSpec(SYSTEMS[system], mu),
                                     rtol=tol or 1e-12)
    return res.value, res.est_error


def resolve_lambda(system: str, mu: float, lam):
    """Map a user lambda setting to ``lambda**2`` (``None`` = method default)."""
    if lam is None:
        return None
    if isinstance(lam, str):
        if lam != "pms":
            raise UsageError(f"lambda must be a number or 'pms', got {lam!r}")
        if system == "vdp":
            return vdp_pms_lambda_sq(mu, 3)
        if mu == 0:
            return 0.0
        return pms_lambda_sq(OscillatorSpec(SYSTEMS[system], mu), 3)
    return float(lam) ** 2


def compute(system: str, mu: float, method: str, order: int, *, lam_sq=None,
            arith: str = "float", oracle=None, tol=None) -> Record:
    """One method at one coupling, with its oracle comparison.

    ``lam_sq`` of ``None`` selects the method default: third-order PMS for
    conservative LPLDE and zero for Van der Pol. Numerical failures of the
    method become ``converged=False`` records.
    """
    if oracle is None:
        oracle = oracle_omega(system, mu, tol)
    omega_ref, oracle_err = oracle
    try:
        if system == "vdp":
            if method == "lplde":
                state, res = vdp_lplde_run(mu, order, lam_sq=lam_sq or 0.0)
                partials = [float(x) for x in np.cumsum(state.alphas)]
            else:
                state, res = vdp_alpt_run(mu, order)
                partials = [float(sum(a * mu ** k for k, a in enumerate(state.alphas[:n + 1])))
                            for n in range(len(state.alphas))]
            return Record(system, mu, method, order, res.omega, omega_ref,
                          res.converged, res.lambda_used, partials,
                          res.warning, oracle_err, res.amplitude)
        spec = OscillatorSpec(SYSTEMS[system], mu)
        state, res = run_method(method, spec, order, lam_sq=lam_sq, mode=arith)
        return Record(system, mu, method, order, res.omega, omega_ref,
                      res.converged, res.lambda_used, list(res.omega_sq_partials),
                      res.note, oracle_err)
    except (NoRealSolution, NoStationaryPoint, SingularResonance) as exc:
        return Record(system, mu, method, order, math.nan, omega_ref, False,
                      note=str(exc), oracle_error=oracle_err)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PERTURB_OSC_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items):
    n = _threads()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _default_lam_sq(system, mu, lam):
    """``lambda**2`` shared by all orders at one coupling."""
    if lam is None and system != "vdp":
        lam = "pms"
    try:
        return resolve_lambda(system, mu, lam), ""
    except NoStationaryPoint as exc:
        return None, str(exc)


def _point(system, mu, method, order, lam_info, arith, oracle, tol):
    lam_sq, err = lam_info
    if err and method == "lplde":
        return Record(system, mu, method, order, math.nan, oracle[0], False,
                      note=err, oracle_error=oracle[1])
    return compute(system, mu, method, order, lam_sq=lam_sq, arith=arith,
                   oracle=oracle, tol=tol)


def sweep(config: SweepConfig) -> List[Record]:
    """Every method at every grid point, sorted by (mu, method)."""
    grid = config.grid()

    def prepare(mu):
        needs_lam = "lplde" in config.methods
        lam = _default_lam_sq(config.system, mu, config.lam) if needs_lam else (None, "")
        return oracle_omega(config.system, mu, config.tol), lam

    prep = dict(zip(grid, _parallel_map(prepare, grid)))
    jobs = [(mu, m) for mu in grid for m in config.methods]
    records = _parallel_map(
        lambda job: _point(config.system, job[0], job[1], config.order,
                           prep[job[0]][1], config.arith, prep[job[0]][0],
                           config.tol), jobs)
    return sorted(records, key=lambda r: (r.mu, r.method))


def order_scan(system: str, mu: float, methods: Sequence[str], max_order: int,
               lam=None, tol=None, arith: str = "float") -> List[Record]:
    """Error against the oracle for orders ``1..max_order``.

    LPLDE keeps one lambda (the third-order PMS value by default) at all
    orders.
    """
    methods = tuple(methods) or methods_for(system)
    oracle = oracle_omega(system, mu, tol)
    lam_info = _default_lam_sq(system, mu, lam) if "lplde" in methods else (None, "")
    items = [(o, m) for o in range(1, max_order + 1) for m in sorted(methods)]
    records = _parallel_map(
        lambda it: _point(system, mu, it[1], it[0], lam_info, arith, oracle, tol),
        items)
    return sorted(records, key=lambda r: (r.order, r.method))


# CSV ---------------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def _row(rec: Record, columns) -> list:
    return [fmt(getattr(rec, c)) for c in columns]


def to_csv(records: Sequence[Record], columns, invocation: str) -> str:
    buf = io.StringIO()
    buf.write(f"# perturb_osc {__version__}: {invocation}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        w.writerow(_row(rec, columns))
    return buf.getvalue()


def write_text(path: Optional[str], text: str, stream=None):
    if path is None or path == "-":
        (stream or sys.stdout).write(text)
        return
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
