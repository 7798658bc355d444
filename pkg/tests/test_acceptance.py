"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""
import math
import sys
from fractions import Fraction

import numpy as np
import pytest

from revflow.analysis import displacements, return_time, sample_liouville
from revflow.carleman import (NOT_QUASIANALYTIC, QUASIANALYTIC, CarlemanSequence,
                              classify, doubling_increments, quasianalyticity_partial_sums)
from revflow.experiments import Thm47Config, Thm48Config, thm47, thm48
from revflow.geodesic import (EquatorData, empirical_period, empirical_rotation,
                              equator_angle, equator_to_phase, flow)
from revflow.period import NON_RESONANT, PERIODIC, best_rational, classify_resonance, period_T, rotation_R
from revflow.surface import ProfileFunction, build_surface

TWO_PI = 2.0 * math.pi
# Liouville fraction of {alpha < 0.5} on Bump(0.5, 1, 0.1), computed before the
# build by 2-D quadrature of (1 + f) cos(theta) over the band region
BAND_FRACTION = 0.121944471019719

SPHERE = build_surface(ProfileFunction.zero())
BUMP = build_surface(ProfileFunction.bump(0.5, 1.0, 0.1))
ODD = build_surface(ProfileFunction.odd_bump(0.25, 0.45, 0.1))
FAMILIES = {"zero": SPHERE, "bump": BUMP, "odd_bump": ODD}


def _domain_starts(surface, n, seed):
    """``n`` Liouville samples whose geodesics stay inside the dynamical domain."""
    out, k = [], 0
    while len(out) < n:
        for p in sample_liouville(surface, 2 * n, seed + 1000 * k):
            if equator_angle(surface, p) < surface.theta_max and len(out) < n:
                out.append(p)
        k += 1
    return out


def criterion_1():
    rng = np.random.default_rng(101)
    ts = np.linspace(0.0, TWO_PI, 501)
    worst = 0.0
    for alpha in rng.uniform(0.0, 1.45, 20):
        tr = flow(SPHERE, equator_to_phase(SPHERE, EquatorData(alpha)), TWO_PI, 1e-10, t_eval=ts)
        th, ph = tr.theta, tr.phi
        q = np.c_[np.cos(th) * np.sin(ph), np.cos(th) * np.cos(ph), np.sin(th)]
        # equator (sin t, cos t, 0) rotated by alpha about the q2 axis
        ref = np.c_[np.sin(ts) * np.cos(alpha), np.cos(ts), np.sin(ts) * np.sin(alpha)]
        worst = max(worst, float(np.max(np.abs(q - ref))))
    return worst <= 1e-8, f"sup error {worst:.3g} <= 1e-08 over 20 alphas"


def criterion_2():
    worst_h = worst_p = 0.0
    for i, s in enumerate(FAMILIES.values()):
        for p in _domain_starts(s, 30, 200 + i):
            tr = flow(s, p, 100.0, 1e-10)
            worst_h = max(worst_h, tr.energy_drift)
            worst_p = max(worst_p, tr.clairaut_drift)
    ok = worst_h <= 1e-8 and worst_p <= 1e-8
    return ok, f"max |h - 1| {worst_h:.3g}, max p_phi drift {worst_p:.3g} (limit 1e-08)"


def criterion_3():
    worst_T = worst_R = 0.0
    for s in (BUMP, ODD):
        for alpha in np.linspace(0.02, 1.45, 50):
            tr = flow(s, equator_to_phase(s, EquatorData(alpha)), 14.0, 1e-10)
            worst_T = max(worst_T, abs(period_T(s, alpha) - empirical_period(tr)))
            worst_R = max(worst_R, abs(rotation_R(s, alpha) - empirical_rotation(tr)))
    ok = worst_T <= 1e-6 and worst_R <= 1e-6
    return ok, f"max |dT| {worst_T:.3g}, max |dR| {worst_R:.3g} (limit 1e-06)"


def criterion_4():
    ys = np.array([p.as_array() for p in _domain_starts(ODD, 100, 404)])
    worst = float(np.max(displacements(ODD, ys, TWO_PI, 1e-10)))
    return worst <= 1e-6, f"max D(2pi) {worst:.3g} <= 1e-06 over 100 starts"


def criterion_5():
    summary = thm47(Thm47Config(seed=47))
    rep = summary.extras["measure"]
    sigma = math.sqrt(BAND_FRACTION * (1 - BAND_FRACTION) / rep["n"])
    oracle_ok = rep["periodic_fraction"] >= BAND_FRACTION - 3 * sigma
    ok = summary.passed and oracle_ok
    detail = "; ".join(c.line() for c in summary.checks)
    detail += (f"; periodic {rep['periodic_fraction']:.4f} vs band oracle "
               f"{BAND_FRACTION:.4f} - 3 sigma")
    return ok, detail


def criterion_6():
    summary = thm48(Thm48Config(seed=48))
    return summary.passed, "; ".join(c.line() for c in summary.checks)


def criterion_7():
    fact = CarlemanSequence.factorial()
    inc = doubling_increments(quasianalyticity_partial_sums(fact, 1024))
    labels = (classify(fact), classify(CarlemanSequence.gevrey(1.0)),
              classify(CarlemanSequence.gevrey(2.0)))
    ok = labels == (QUASIANALYTIC, QUASIANALYTIC, NOT_QUASIANALYTIC) and min(inc) >= 1.5
    return ok, f"classes {labels}, factorial doubling increments min {min(inc):.4f} >= 1.5"


def criterion_8():
    rng = np.random.default_rng(808)
    misses = 0
    for _ in range(50):
        q = int(rng.integers(1, 21))
        p = int(rng.integers(0, q))
        fr = Fraction(p, q)
        R = TWO_PI * fr.numerator / fr.denominator
        c = classify_resonance(R, TWO_PI, 20)
        got = best_rational(R / TWO_PI, c.k or 1)
        misses += not (c.kind == PERIODIC and c.k == fr.denominator
                       and got == (fr.numerator, fr.denominator))
    c = classify_resonance(TWO_PI * (math.sqrt(2) - 1), TWO_PI, 50, tol=1e-9)
    ok = misses == 0 and c.kind == NON_RESONANT
    return ok, f"{50 - misses}/50 rationals recovered; sqrt(2) - 1 -> {c.kind}"


def criterion_9():
    worst_t = worst_g = 0.0
    for i, s in enumerate((SPHERE, ODD)):
        for p in _domain_starts(s, 20, 900 + i):
            rt = return_time(s, p, TWO_PI)
            worst_t = max(worst_t, abs(rt.t_star - TWO_PI))
            worst_g = max(worst_g, rt.gradient_norm)
    ok = worst_t <= 1e-6 and worst_g <= 1e-5
    return ok, f"max |t* - 2pi| {worst_t:.3g} (limit 1e-06), max |grad t*| {worst_g:.3g} (limit 1e-05)"


CRITERIA = [
    (1, "sphere oracle", criterion_1),
    (2, "conservation suite", criterion_2),
    (3, "quadrature/ODE cross-validation", criterion_3),
    (4, "odd-profile Zoll property", criterion_4),
    (5, "bump surface: periodic band and nonperiodic set", criterion_5),
    (6, "half-surface billiard", criterion_6),
    (7, "Carleman criterion", criterion_7),
    (8, "resonance classifier", criterion_8),
    (9, "return-time properties", criterion_9),
]


def _line(number, name, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] AC{number} {name}: {detail}"


@pytest.mark.parametrize("number,name,check", CRITERIA, ids=[f"AC{n}" for n, _, _ in CRITERIA])
def test_acceptance(number, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(number, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, name, check in CRITERIA:
        ok, detail = check()
        results.append(ok)
        print(_line(number, name, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
