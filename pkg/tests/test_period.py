import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from revflow.geodesic import EquatorData, empirical_period, empirical_rotation, equator_to_phase, flow
from revflow.period import (EQUATOR_BAND, NON_RESONANT, PERIODIC, best_rational,
                            classify_resonance, convergents, in_equator_band,
                            period_T, rotation_R, resonant_fraction, scan)
from revflow.surface import ProfileFunction, build_surface

TWO_PI = 2.0 * math.pi


def _bump_mp(theta, a, b, amp):
    if not a < theta < b:
        return mp.mpf(0)
    return amp * mp.exp(mp.mpf(4) / (b - a) ** 2 - 1 / ((theta - a) * (b - theta)))


def _singular_oracle(bumps, alpha):
    """T and R from the original singular integrals with tanh-sinh quadrature."""
    mp.mp.dps = 30
    alpha = mp.mpf(alpha)
    ca2 = mp.cos(alpha) ** 2

    def fe(t):
        return sum(0.5 * (_bump_mp(t, a, b, amp) + _bump_mp(-t, a, b, amp))
                   for a, b, amp, _ in bumps)

    cuts = sorted({-alpha, alpha, *[x for a, b, _, _ in bumps for x in (a, b, -a, -b)
                                    if -alpha < x < alpha]})
    def root(t):
        # cos^2 t - cos^2 alpha, factored so it stays nonnegative near the ends
        return mp.sqrt(mp.sin(alpha - t) * mp.sin(alpha + t))

    T_int = mp.quad(lambda t: fe(t) * mp.cos(t) / root(t), cuts, method="tanh-sinh")
    R_int = mp.quad(lambda t: fe(t) / (mp.cos(t) * root(t)), cuts, method="tanh-sinh")
    return float(2 * mp.pi + 2 * T_int), float(2 * mp.sqrt(ca2) * R_int)


def _profile(bumps):
    parts = []
    for a, b, amp, s in bumps:
        parts.append(ProfileFunction.bump(a, b, amp) if s == 1 else
                     ProfileFunction.bump(-b, -a, amp))
    return ProfileFunction.sum(*parts)


def test_against_singular_quadrature():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        a = rng.uniform(0.05, 0.8)
        b = a + rng.uniform(0.1, 0.6)
        amp = rng.uniform(0.02, 0.3)
        side = int(rng.choice([1, -1]))
        bumps = [(a, b, amp, side)]
        surface = build_surface(_profile(bumps))
        alpha = rng.uniform(a + 0.02, 1.45)
        T_ref, R_ref = _singular_oracle(bumps, alpha)
        assert period_T(surface, alpha) == pytest.approx(T_ref, abs=1e-8)
        assert rotation_R(surface, alpha) == pytest.approx(R_ref, abs=1e-8)


def test_zero_profile(sphere_surface):
    for a in (0.1, 0.7, 1.4):
        assert period_T(sphere_surface, a) == TWO_PI
        assert rotation_R(sphere_surface, a) == 0.0


def test_support_shortcut(bump_surface):
    for a in (0.1, 0.4, 0.5):
        assert in_equator_band(bump_surface, a)
        assert period_T(bump_surface, a) == TWO_PI
        assert rotation_R(bump_surface, a) == 0.0


def test_odd_profile_identity(odd_surface):
    for a in np.linspace(0.05, 1.45, 15):
        assert period_T(odd_surface, a) == TWO_PI
        assert rotation_R(odd_surface, a) == 0.0


def test_positive_past_support(bump_surface):
    for a in np.linspace(0.52, 1.5, 25):
        assert rotation_R(bump_surface, a) > 0.0
        # near the edge the excess is below double resolution of 2 pi
        assert period_T(bump_surface, a) >= TWO_PI
    for a in np.linspace(0.6, 1.5, 10):
        assert period_T(bump_surface, a) > TWO_PI


def test_alpha_out_of_range(bump_surface):
    with pytest.raises(ValueError):
        period_T(bump_surface, 0.0)
    with pytest.raises(ValueError):
        rotation_R(bump_surface, 1.56)


def test_ode_cross_check(bump_surface):
    for alpha in (0.6, 0.9, 1.2):
        tr = flow(bump_surface, equator_to_phase(bump_surface, EquatorData(alpha)), 14.0)
        assert empirical_period(tr) == pytest.approx(period_T(bump_surface, alpha), abs=1e-6)
        assert empirical_rotation(tr) == pytest.approx(rotation_R(bump_surface, alpha), abs=1e-6)


def test_classify_examples():
    c = classify_resonance(0.0, TWO_PI, 20)
    assert (c.kind, c.k, c.full_period) == (PERIODIC, 1, TWO_PI)
    c = classify_resonance(math.pi, TWO_PI, 20)
    assert (c.kind, c.k, c.full_period) == (PERIODIC, 2, 2 * TWO_PI)
    c = classify_resonance(TWO_PI * (math.sqrt(2) - 1), TWO_PI, 50, tol=1e-9)
    assert c.kind == NON_RESONANT and not c.periodic
    with pytest.raises(ValueError):
        classify_resonance(0.1, TWO_PI, 0)


def test_sqrt2_convergents():
    # sqrt(2) - 1 = [0; 2, 2, 2, ...]: Pell-number convergents
    assert convergents(math.sqrt(2) - 1)[:6] == [(0, 1), (1, 2), (2, 5), (5, 12), (12, 29), (29, 70)]
    assert best_rational(math.sqrt(2) - 1, 50) == (12, 29)


@given(st.integers(1, 20).flatmap(lambda q: st.tuples(st.integers(-3 * q, 3 * q), st.just(q))))
def test_rational_recovery(pq):
    p, q = pq
    from fractions import Fraction
    fr = Fraction(p, q)
    c = classify_resonance(TWO_PI * p / q, 6.5, 20)
    assert c.kind == PERIODIC
    assert c.k == fr.denominator
    assert c.full_period == pytest.approx(fr.denominator * 6.5)


def test_smallest_q_wins():
    # 1/3 + 1e-12 fits q = 3 long before any larger denominator
    c = classify_resonance(TWO_PI * (1 / 3 + 1e-12), TWO_PI, 20)
    assert c.k == 3


def test_scan_zero_and_band(sphere_surface, bump_surface):
    rows = scan(sphere_surface, np.linspace(0.1, 1.4, 7))
    assert all(r.classification.kind == PERIODIC and r.classification.k == 1 for r in rows)
    rows = scan(bump_surface, np.linspace(0.05, 0.5, 10))
    assert all(r.T_star == TWO_PI and r.R == 0.0 for r in rows)
    assert all(r.classification.kind == EQUATOR_BAND for r in rows)


def test_scan_records_errors_and_keeps_order(bump_surface):
    rows = scan(bump_surface, [0.6, 1.56, 0.9])
    assert [r.alpha for r in rows] == [0.6, 1.56, 0.9]
    assert rows[1].error and rows[1].classification is None
    assert rows[0].error is None and rows[2].error is None


def test_scan_parallel_matches_serial(bump_surface):
    grid = np.linspace(0.55, 1.2, 12)
    assert scan(bump_surface, grid, jobs=2) == scan(bump_surface, grid, jobs=1)


def test_resonant_fraction_on_grid(bump_surface):
    grid = np.linspace(0.55, 1.2, 202)[1:-1]
    assert resonant_fraction(scan(bump_surface, grid, k_max=20)) <= 0.05
