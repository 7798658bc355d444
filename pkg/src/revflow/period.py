"""Period and rotation functions by quadrature, and the resonance classifier.

For a geodesic leaving the equator at angle ``alpha`` the latitude oscillates
with period ``T(alpha)`` and the longitude gains ``2 pi + R(alpha)`` per
oscillation.  Both are integrals over ``[-alpha, alpha]`` with an inverse
square-root singularity at the turning latitudes; the substitution
``sin(theta) = sin(alpha) sin(u)`` turns them into

    T(alpha) = 2 pi + 2 * int_{-pi/2}^{pi/2} fe(theta(u)) du
    R(alpha) = 2 cos(alpha) * int_{-pi/2}^{pi/2} fe(theta(u)) / cos(theta(u))^2 du

with ``fe`` the even part of the profile, both with bounded integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from ._core import profile_value
from .errors import NumericalError

TWO_PI = 2.0 * math.pi
DEFAULT_RESONANCE_TOL = 1e-8

PERIODIC = "PeriodicResonant"
NON_RESONANT = "NonResonantAtTolerance"
EQUATOR_BAND = "EquatorBand"


@dataclass(frozen=True)
class Classification:
    kind: str
    k: int | None = None
    full_period: float | None = None

    @property
    def periodic(self):
        return self.kind in (PERIODIC, EQUATOR_BAND)

    def __str__(self):
        if self.kind == NON_RESONANT:
            return self.kind
        return f"{self.kind}({self.k})"


@dataclass(frozen=True)
class PeriodRecord:
    alpha: float
    T_star: float
    R: float
    rot_p: int
    rot_q: int
    rot_error: float
    classification: Classification | None
    error: str | None = None


def _check_alpha(surface, alpha):
    if not 0.0 < alpha < surface.theta_max:
        raise ValueError(f"alpha = {alpha} outside (0, theta_max = {surface.theta_max})")


def _u_breakpoints(profile, alpha):
    sa = math.sin(alpha)
    pts = []
    for theta in profile.breakpoints():
        if 0.0 < theta < alpha:
            pts.append(math.asin(math.sin(theta) / sa))
    return sorted(pts)


def _half_integral(surface, alpha, weight, tol):
    """``2 * int_0^{pi/2} fe(theta(u)) * weight(theta(u)) du`` (even integrand)."""
    profile = surface.profile
    terms = profile.even_terms
    sa = math.sin(alpha)

    def integrand(u):
        theta = math.asin(sa * math.sin(u))
        fe = 0.5 * (profile_value(theta, terms) + profile_value(-theta, terms))
        return fe * weight(theta)

    pts = _u_breakpoints(profile, alpha)
    val, err = integrate.quad(integrand, 0.0, 0.5 * math.pi, epsabs=tol / 4,
                              epsrel=0.0, limit=400, points=pts or None)
    if not err <= tol / 4:
        raise NumericalError(
            f"quadrature at alpha = {alpha} reached {err:.3g}", achieved=err)
    return 2.0 * val


def in_equator_band(surface, alpha):
    """True when the even part vanishes on ``[-alpha, alpha]``."""
    return alpha <= surface.profile.even_support_infimum


def period_T(surface, alpha, tol=1e-12):
    """Period of the latitude oscillation for equator angle ``alpha``."""
    _check_alpha(surface, alpha)
    if in_equator_band(surface, alpha):
        return TWO_PI
    return TWO_PI + 2.0 * _half_integral(surface, alpha, lambda th: 1.0, tol / 2)


def rotation_R(surface, alpha, tol=1e-12):
    """Longitude advance beyond ``2 pi`` per latitude period."""
    _check_alpha(surface, alpha)
    if in_equator_band(surface, alpha):
        return 0.0
    ca = math.cos(alpha)
    return 2.0 * ca * _half_integral(
        surface, alpha, lambda th: 1.0 / math.cos(th) ** 2, tol / (2.0 * ca))


def convergents(x, max_terms=64):
    """Continued-fraction convergents ``(p, q)`` of ``x`` in order of growing q."""
    out = []
    p_prev, p = 1, math.floor(x)
    q_prev, q = 0, 1
    out.append((p, q))
    rem = x - math.floor(x)
    for _ in range(max_terms):
        if rem < 1e-300:
            break
        x = 1.0 / rem
        a = math.floor(x)
        rem = x - a
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
        if q > 10**15:
            break
    return out


def best_rational(x, q_max):
    """Last convergent of ``x`` with denominator at most ``q_max``."""
    best = (round(x), 1)
    for p, q in convergents(x):
        if q > q_max:
            break
        best = (p, q)
    return best


def classify_resonance(R, T_star, k_max, tol=DEFAULT_RESONANCE_TOL):
    """Resonance test of the rotation ``R`` at tolerance ``tol``.

    The geodesic closes after ``q`` latitude periods when ``q R`` is a
    multiple of ``2 pi``; we accept a convergent ``p/q`` of ``R / 2 pi`` with
    ``q <= k_max`` and ``|R / 2 pi - p/q| <= tol / (2 pi q)``, smallest ``q``
    first.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if abs(R) <= tol:
        return Classification(PERIODIC, 1, T_star)
    x = R / TWO_PI
    for p, q in convergents(x):
        if q > k_max:
            break
        if abs(x - p / q) <= tol / (TWO_PI * q):
            return Classification(PERIODIC, q, q * T_star)
    return Classification(NON_RESONANT)


def period_record(surface, alpha, tol=1e-12, k_max=20,
                  resonance_tol=DEFAULT_RESONANCE_TOL):
    try:
        T = period_T(surface, alpha, tol)
        R = rotation_R(surface, alpha, tol)
    except (NumericalError, ValueError) as exc:
        return PeriodRecord(alpha, math.nan, math.nan, 0, 0, math.nan, None, str(exc))
    x = R / TWO_PI
    p, q = best_rational(x, k_max)
    # the band tag needs an actual support edge; with fe == 0 everywhere the
    # orbit is simply resonant of order one
    if in_equator_band(surface, alpha) and math.isfinite(
            surface.profile.even_support_infimum):
        cls = Classification(EQUATOR_BAND, 1, T)
    else:
        cls = classify_resonance(R, T, k_max, resonance_tol)
    return PeriodRecord(alpha, T, R, p, q, abs(x - p / q), cls)


def scan(surface, alphas, tol=1e-12, k_max=20, resonance_tol=DEFAULT_RESONANCE_TOL,
         jobs=1):
    """One :class:`PeriodRecord` per grid value, in grid order."""
    alphas = [float(a) for a in alphas]
    if jobs == 1:
        return [period_record(surface, a, tol, k_max, resonance_tol) for a in alphas]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=jobs)(
        delayed(period_record)(surface, a, tol, k_max, resonance_tol) for a in alphas)


def rational_string(p, q):
    return str(Fraction(p, q))


def resonant_fraction(records):
    ok = [r for r in records if r.classification is not None]
    if not ok:
        return math.nan
    return float(np.mean([r.classification.kind == PERIODIC for r in ok]))
