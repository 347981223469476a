"""Numbered acceptance criteria, one PASS/FAIL line each.

Tolerances and runtime limits are pinned in the constants below. Run with
``pytest -v tests/test_acceptance.py`` (lines appear in the terminal summary)
or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import os
import subprocess
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

from perturb_osc.conservative import (OscillatorSpec, alpt_run, lpt_run,
                                      lplde_run, pms_lambda, run_method)
from perturb_osc.oracle import (conservative_rhs, duffing_exact_elliptic,
                                exact_frequency_quadrature, integrate_ivp,
                                vdp_limit_cycle_period)
from perturb_osc.vdp import vdp_alpt_run, vdp_lplde_run

pytestmark = pytest.mark.acceptance

MUS_CLOSED_FORM = (0.5, 1.0, 10.0, 100.0)
TOL_LPLDE_CLOSED = 1e-12      # relative
TOL_ALPT_CLOSED = 1e-10       # relative
TOL_PMS = 1e-10               # absolute
ORDER_HIGH = 20
FLOOR = 1e-13                 # absolute error floor for ordinal comparisons
NEG_MU_GRID = np.linspace(-0.99, -0.80, 20)
TOL_ORACLE_XVAL = 1e-10       # relative
ORACLE_SEED = 12345
ENERGY_TOL = 1e-10
ENERGY_DRIFT_MAX = 1e-8
VDP_SMALL_MU = 0.1
VDP_REL_TOL = 1e-3
AMP_TOL = 1e-10
PROPERTY_SUITE_LIMIT = 300.0


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def lplde_closed(mu):
    return (69 * mu ** 2 + 192 * mu + 128) / (32 * (3 * mu + 4))


def alpt_closed(mu):
    return (math.sqrt(30 * mu ** 2 + 96 * mu + 64) + 2 * (3 * mu + 4)) / 16


def _delta(method, spec, order, omega_exact):
    _, res = run_method(method, spec, order)
    return abs(omega_exact - res.omega) if res.converged else math.inf


def test_criterion_01_exact_lpt_coefficients(report):
    with Timer() as t:
        state, _ = lpt_run(OscillatorSpec(2, 1), 3, mode="rational")
    expected = [F(1), F(3, 4), F(-3, 128), F(9, 512)]
    ok = state.alphas == expected and t.elapsed < 1.0
    detail = f"alphas={[str(a) for a in state.alphas]} t={t.elapsed:.3f}s<1s"
    assert report(1, "LPT N=2 rational coefficients (1, 3/4, -3/128, 9/512)", ok, detail)


def test_criterion_02_lplde_closed_form(report):
    errs = []
    with Timer() as t:
        for mu in MUS_CLOSED_FORM:
            _, res = lplde_run(OscillatorSpec(2, mu), 3, math.sqrt(3 * mu) / 2)
            ref = lplde_closed(mu)
            errs.append(abs(res.omega_sq - ref) / ref)
    ok = max(errs) <= TOL_LPLDE_CLOSED and t.elapsed < 1.0
    detail = f"max rel err={max(errs):.2e}<={TOL_LPLDE_CLOSED:g} t={t.elapsed:.3f}s<1s"
    assert report(2, "LPLDE order-3 closed form at lambda=sqrt(3mu)/2", ok, detail)


def test_criterion_03_alpt_closed_form(report):
    errs = []
    with Timer() as t:
        for mu in MUS_CLOSED_FORM:
            _, res = alpt_run(OscillatorSpec(2, mu), 3)
            ref = alpt_closed(mu)
            errs.append(abs(res.omega_sq - ref) / ref if res.converged else math.inf)
    ok = max(errs) <= TOL_ALPT_CLOSED and t.elapsed < 1.0
    detail = f"max rel err={max(errs):.2e}<={TOL_ALPT_CLOSED:g} t={t.elapsed:.3f}s<1s"
    assert report(3, "ALPT order-3 closed form", ok, detail)


def test_criterion_04_pms_value(report):
    spec = OscillatorSpec(2, 1.0)
    with Timer() as t:
        lam = pms_lambda(spec, 3)
        # independent check that the value is stationary: centred difference
        h = 1e-5
        w = [lplde_run(spec, 3, lam + d)[1].omega for d in (-h, h)]
        slope = (w[1] - w[0]) / (2 * h)
    err = abs(lam - math.sqrt(3) / 2)
    ok = err <= TOL_PMS and abs(slope) < 1e-8 and t.elapsed < 1.0
    detail = f"|lambda-sqrt(3)/2|={err:.1e} dOmega/dlambda={slope:.1e} t={t.elapsed:.3f}s<1s"
    assert report(4, "PMS lambda = sqrt(3)/2 at N=2, order 3, mu=1", ok, detail)


def test_criterion_05_ordering_and_monotonicity(report):
    ordering_bad, mono_bad = [], []
    with Timer() as t:
        for N in (2, 3, 4):
            for mu in (1.0, 100.0):
                spec = OscillatorSpec(N, mu)
                exact = exact_frequency_quadrature(spec).value
                da, dl, dp = (_delta(m, spec, ORDER_HIGH, exact)
                              for m in ("alpt", "lplde", "lpt"))
                if not (da <= max(dl, FLOOR) and dl <= max(dp, FLOOR)):
                    ordering_bad.append(f"N={N} mu={mu:g}: {da:.1e},{dl:.1e},{dp:.1e}")
                prev = math.inf
                for order in range(1, ORDER_HIGH + 1):
                    d = _delta("alpt", spec, order, exact)
                    if d > prev and d > FLOOR:
                        mono_bad.append(f"N={N} mu={mu:g} order {order - 1}->{order}: "
                                        f"{prev:.2e}->{d:.2e}")
                    prev = d
    ok = not ordering_bad and not mono_bad and t.elapsed < 60
    detail = (f"ordering violations={ordering_bad or 'none'}; "
              f"ALPT monotonicity violations={len(mono_bad)}"
              + (f" e.g. {mono_bad[:3]}" if mono_bad else "") + f"; t={t.elapsed:.1f}s<60s")
    assert report(5, "order-20 ordering ALPT<=LPLDE<=LPT and ALPT error non-increasing",
                  ok, detail)


def test_criterion_06_negative_mu_crossover(report):
    wins = []
    with Timer() as t:
        for mu in NEG_MU_GRID:
            spec = OscillatorSpec(2, float(mu))
            exact = exact_frequency_quadrature(spec).value
            wins.append(_delta("lplde", spec, ORDER_HIGH, exact)
                        < _delta("alpt", spec, ORDER_HIGH, exact))
    # mu* = first grid point where LPLDE stops winning; all points below must win
    first_loss = wins.index(False) if False in wins else len(wins)
    mu_star = NEG_MU_GRID[first_loss] if first_loss < len(wins) else -0.8
    ok = first_loss >= 1 and -1 < mu_star < -0.8 and t.elapsed < 30
    detail = (f"LPLDE wins for mu<{mu_star:.3f} ({first_loss} grid points), "
              f"later wins={sum(wins[first_loss:])}; t={t.elapsed:.1f}s<30s")
    assert report(6, "crossover mu* in (-1,-0.8): LPLDE beats ALPT below it", ok, detail)


def test_criterion_07_oracle_consistency(report):
    rng = np.random.default_rng(ORACLE_SEED)
    with Timer() as t:
        worst = 0.0
        for mu in rng.uniform(-0.9, 100, 20):
            q = exact_frequency_quadrature(OscillatorSpec(2, float(mu))).value
            e = duffing_exact_elliptic(float(mu)).value
            worst = max(worst, abs(q - e) / e)
        spec = OscillatorSpec(2, 1.0)
        T = 2 * math.pi / duffing_exact_elliptic(1.0).value
        tr = integrate_ivp(conservative_rhs(spec), (1.0, 0.0), 100 * T, ENERGY_TOL)
        E = 0.5 * tr.y[:, 1] ** 2 + spec.potential(tr.y[:, 0])
        drift = float(np.max(np.abs(E - E[0])))
    ok = worst < TOL_ORACLE_XVAL and drift < ENERGY_DRIFT_MAX and t.elapsed < 30
    detail = (f"quad vs elliptic max rel={worst:.1e}<{TOL_ORACLE_XVAL:g}; "
              f"energy drift={drift:.1e}<{ENERGY_DRIFT_MAX:g}; t={t.elapsed:.1f}s<30s")
    assert report(7, "oracle cross-validation and integrator energy drift", ok, detail)


def test_criterion_08_vdp_small_coupling(report):
    with Timer() as t:
        T = vdp_limit_cycle_period(VDP_SMALL_MU).value
        _, lde = vdp_lplde_run(VDP_SMALL_MU, 4)
        _, alpt = vdp_alpt_run(VDP_SMALL_MU, 4)
        state, _ = vdp_lplde_run(VDP_SMALL_MU, 1)
        amp0 = state.amplitudes[0]
    e1, e2 = abs(lde.period - T) / T, abs(alpt.period - T) / T
    ok = (e1 < VDP_REL_TOL and e2 < VDP_REL_TOL and abs(amp0 - 2) <= AMP_TOL
          and t.elapsed < 30)
    detail = (f"rel period err lplde={e1:.1e} alpt={e2:.1e} (<{VDP_REL_TOL:g}); "
              f"A0={amp0!r}; t={t.elapsed:.1f}s<30s")
    assert report(8, "VdP mu=0.1 order 4 periods and A0=2", ok, detail)


def test_criterion_09_vdp_alpt_pathology(report):
    parts, ok = [], True
    with Timer() as t:
        for mu in (3.0, 4.0):
            T = vdp_limit_cycle_period(mu).value
            _, lde = vdp_lplde_run(mu, 6)
            _, alpt = vdp_alpt_run(mu, 6)
            # no real self-consistent root means no period at all
            e_alpt = abs(alpt.period - T) if alpt.converged else math.inf
            e_lde = abs(lde.period - T)
            ok = ok and e_alpt > e_lde
            parts.append(f"mu={mu:g}: |dT| alpt={e_alpt:.3g} lplde={e_lde:.3g}")
    ok = ok and t.elapsed < 60
    assert report(9, "VdP order 6: ALPT period error exceeds LPLDE at mu=3,4", ok,
                  "; ".join(parts) + f"; t={t.elapsed:.1f}s<60s")


def test_criterion_10_property_suite(report):
    here = os.path.dirname(os.path.abspath(__file__))
    with Timer() as t:
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-m", "property", "-p",
             "no:cacheprovider", here],
            capture_output=True, text=True, check=False)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and t.elapsed < PROPERTY_SUITE_LIMIT
    assert report(10, "property suite (all invariant tests)", ok,
                  f"{tail}; t={t.elapsed:.1f}s<{PROPERTY_SUITE_LIMIT:g}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rN"]))
