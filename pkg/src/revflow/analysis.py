"""Absolute periodicity, return times and Liouville-measure estimates.

The displacement of a phase point after time ``T`` is

    D = (dtheta)^2 + (dphi mod 2 pi)^2 + (dp_theta)^2 + (dp_phi)^2,

computed in the chart ``(theta, phi, p_theta, p_phi)``.  Rotations in ``phi``
are symmetries, so derivatives of ``D`` are only taken across the transversal
``(theta, p_theta, p_phi)``; invariance along ``phi`` is checked separately.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .billiard import HalfSurface, billiard_flow
from .errors import FiniteDifferenceError, NoInteriorMinimumError
from .geodesic import PhasePoint, equator_angle, flow_to, flow_to_batch
from .period import period_record

TWO_PI = 2.0 * math.pi
TRANSVERSAL = (0, 2, 3)  # theta, p_theta, p_phi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# central-difference stencils: offsets in units of the step, and weights
STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _as_array(p):
    return p.as_array() if isinstance(p, PhasePoint) else np.asarray(p, dtype=float)


def displacement_of(y0, y1):
    """Squared phase-space distance with the longitude compared on the circle."""
    y0 = np.asarray(y0)
    y1 = np.asarray(y1)
    d = y1 - y0
    dphi = np.remainder(d[..., 1] + math.pi, TWO_PI) - math.pi
    return d[..., 0] ** 2 + dphi**2 + d[..., 2] ** 2 + d[..., 3] ** 2


def displacement(domain, p0, T, tol=1e-10):
    """``D(T, p0)`` for a surface or a :class:`HalfSurface` billiard."""
    y0 = _as_array(p0)
    if isinstance(domain, HalfSurface):
        bt = billiard_flow(domain, y0, T, tol)
        if bt.grazing or bt.dead_end:
            raise FiniteDifferenceError(f"billiard run ended early: {bt.stop}")
        y1 = bt.states[-1]
    else:
        y1 = flow_to(domain, y0, T, tol)
    return float(displacement_of(y0, y1))


def displacements(surface, y0s, T, tol=1e-10):
    y0s = np.asarray(y0s, dtype=float)
    return displacement_of(y0s, flow_to_batch(surface, y0s, T, tol))


# jets ---------------------------------------------------------------------

@dataclass
class JetReport:
    base: tuple
    T: float
    K: int
    fd_step: float
    jet_tol: float
    norms: list
    noise_floor: list
    verdict: str
    first_order: int | None = None
    magnitude: float | None = None
    phi_invariance: float = 0.0
    halved_norms: list | None = None

    @property
    def absolutely_periodic(self):
        return self.verdict == "AbsolutelyPeriodicToOrder"

    def to_dict(self):
        return asdict(self)


def multi_indices(K, dim=3):
    """All multi-indices of total order at most ``K``, grouped by order."""
    out = {j: [] for j in range(K + 1)}
    for beta in itertools.product(range(K + 1), repeat=dim):
        if sum(beta) <= K:
            out[sum(beta)].append(beta)
    return out


def _jet(surface, y0, T, K, h, tol):
    """Per-order max norms of finite-difference partials and noise floors."""
    indices = multi_indices(K)
    plans = []
    offsets = set()
    for j in range(K + 1):
        for beta in indices[j]:
            grids = [STENCILS[b] for b in beta]
            terms = []
            for combo in itertools.product(*(zip(*g) for g in grids)):
                off = tuple(c[0] for c in combo)
                w = math.prod(c[1] for c in combo)
                terms.append((off, w))
                offsets.add(off)
            plans.append((j, terms))
    offsets = sorted(offsets)
    pts = np.repeat(y0[None, :], len(offsets), axis=0)
    for i, off in enumerate(offsets):
        for axis, o in zip(TRANSVERSAL, off):
            pts[i, axis] += o * h
    D = dict(zip(offsets, displacements(surface, pts, T, tol)))
    # state errors of order tol give D errors of order 2 sqrt(D) tol + tol^2
    eps = dict((o, 2.0 * math.sqrt(max(d, 0.0)) * tol + tol * tol) for o, d in D.items())
    norms = [0.0] * (K + 1)
    floors = [0.0] * (K + 1)
    for j, terms in plans:
        val = sum(w * D[o] for o, w in terms) / h**j
        noise = sum(abs(w) * eps[o] for o, w in terms) / h**j
        norms[j] = max(norms[j], abs(val))
        floors[j] = max(floors[j], noise)
    return norms, floors


def jet_norms(surface, p0, T, K=3, fd_step=1e-3, tol=1e-10, jet_tol=1e-6,
              validate=True, n_shifts=8):
    """Finite-difference jet of ``D(T, .)`` at ``p0`` up to total order ``K``.

    ``AbsolutelyPeriodicToOrder`` is reported when every order ``j <= K``
    has norm at most ``jet_tol``.  An order that decides the verdict but sits
    inside its noise floor raises :class:`FiniteDifferenceError`, as does a
    step-halving inconsistency.  With ``validate`` the jet is recomputed at
    half the step; an order whose signal stands above the noise floor at both
    steps but changes by more than 10x raises :class:`FiniteDifferenceError`.
    """
    if not 0 <= K <= 4:
        raise ValueError("K must be between 0 and 4")
    y0 = _as_array(p0)
    norms, floors = _jet(surface, y0, T, K, fd_step, tol)
    # orders up to the first nonvanishing one decide the verdict; each must
    # be resolved above its noise floor or certified below jet_tol
    for j in range(K + 1):
        if floors[j] > jet_tol and norms[j] <= max(floors[j], jet_tol):
            raise FiniteDifferenceError(
                f"order-{j} jet {norms[j]:.3g} is within its noise floor "
                f"{floors[j]:.3g} at fd_step = {fd_step:g}; raise fd_step or tighten tol")
        if norms[j] > jet_tol:
            break
    halved = None
    if validate:
        halved, floors2 = _jet(surface, y0, T, K, fd_step / 2, tol)
        for j in range(K + 1):
            a, b = norms[j], halved[j]
            if a > floors[j] and b > floors2[j] and a > jet_tol:
                if not 0.1 <= b / a <= 10.0:
                    raise FiniteDifferenceError(
                        f"order-{j} jet changes from {a:.3g} to {b:.3g} on halving "
                        f"fd_step = {fd_step:g}")

    shifts = np.repeat(y0[None, :], n_shifts, axis=0)
    shifts[:, 1] += np.linspace(0.0, TWO_PI, n_shifts, endpoint=False) + 0.1
    d_shift = displacements(surface, shifts, T, tol)
    phi_inv = float(np.max(np.abs(d_shift - norms[0]))) if n_shifts else 0.0

    report = JetReport(tuple(float(v) for v in y0), T, K, fd_step, jet_tol,
                       norms, floors, "AbsolutelyPeriodicToOrder",
                       phi_invariance=phi_inv, halved_norms=halved)
    for j, nrm in enumerate(norms):
        if nrm > jet_tol:
            report.verdict = "FirstNonvanishingOrder"
            report.first_order = j
            report.magnitude = nrm
            break
    return report


# return time ----------------------------------------------------------------

@dataclass
class ReturnTime:
    t_star: float
    d_min: float
    gradient: np.ndarray | None = None

    @property
    def gradient_norm(self):
        return float(np.linalg.norm(self.gradient)) if self.gradient is not None else math.nan


def _golden(fun, a, b, xtol):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def _polish(fun, t, f_t, h):
    """One parabolic step through ``t - h, t, t + h``; kept only if better."""
    fl, fr = fun(t - h), fun(t + h)
    denom = fl - 2.0 * f_t + fr
    if denom <= 0.0:
        return t, f_t
    t_new = t + 0.5 * h * (fl - fr) / denom
    if abs(t_new - t) > h:
        return t, f_t
    f_new = fun(t_new)
    return (t_new, f_new) if f_new < f_t else (t, f_t)


def _return_time(surface, y0, T_guess, radius, tol, xtol):
    t_a = T_guess - radius
    y_a = flow_to(surface, y0, t_a, tol)

    def D(t):
        return float(displacement_of(y0, flow_to(surface, y_a, t - t_a, tol)))

    t, f = _golden(D, t_a, T_guess + radius, xtol)
    t, f = _polish(D, t, f, 10.0 * xtol)
    edge = 1e-3 * radius
    if t - t_a < edge or (T_guess + radius) - t < edge:
        raise NoInteriorMinimumError(
            f"displacement minimum at the window edge (t = {t:.12g})")
    return t, f


def return_time(surface, p0, T_guess, search_radius=0.5, tol=1e-10,
                grad_step=1e-4, xtol=1e-11, gradient=True):
    """Closest-approach time ``t*`` of the orbit of ``p0`` near ``T_guess``.

    ``t*`` minimises ``D(t, p0)`` over ``(T_guess - r, T_guess + r)`` by golden
    section and a parabolic polish; it is the period when ``p0`` is periodic.
    The gradient is taken by central differences across the transversal.
    """
    y0 = _as_array(p0)
    t_star, d_min = _return_time(surface, y0, T_guess, search_radius, tol, xtol)
    grad = None
    if gradient:
        grad = np.empty(len(TRANSVERSAL))
        for i, axis in enumerate(TRANSVERSAL):
            yp = y0.copy()
            ym = y0.copy()
            yp[axis] += grad_step
            ym[axis] -= grad_step
            tp, _ = _return_time(surface, yp, t_star, search_radius, tol, xtol)
            tm, _ = _return_time(surface, ym, t_star, search_radius, tol, xtol)
            grad[i] = (tp - tm) / (2.0 * grad_step)
    return ReturnTime(t_star, d_min, grad)


# Liouville sampling -----------------------------------------------------------

def _rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def _sample_one(surface, f_max, seed, index):
    rng = _rng(seed, index)
    profile = surface.profile
    while True:
        u, v = rng.random(2)
        theta = math.asin(2.0 * u - 1.0)
        r = 1.0 + float(profile(theta))
        if v * (1.0 + f_max) <= r:
            break
    phi = TWO_PI * rng.random()
    psi = TWO_PI * rng.random()
    return PhasePoint(theta, phi, r * math.cos(psi), math.cos(theta) * math.sin(psi))


def sample_liouville(surface, n, seed=0):
    """``n`` points of the unit cosphere bundle drawn from Liouville measure.

    Base points have density ``(1 + f) cos(theta)`` (rejection from
    ``cos(theta)``); the covector direction is uniform on the fibre circle.
    Sample ``i`` uses its own stream seeded by ``(seed, i)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    grid = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 20001)
    f_max = max(0.0, float(np.max(surface.profile(grid))))
    return [_sample_one(surface, f_max, seed, i) for i in range(n)]


# measure estimate -------------------------------------------------------------

@dataclass
class MeasureReport:
    n: int
    T: float
    seed: int
    tol: float
    k_max: int
    resonance_tol: float
    periodic: int
    nonperiodic: int
    unresolved: int
    periodic_fraction: float
    periodic_ci: tuple
    nonperiodic_fraction: float
    nonperiodic_ci: tuple
    unresolved_fraction: float
    band_fraction: float
    resonant_other_period: int = 0
    alphas: list = field(default_factory=list, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("alphas")
        return d


def wilson_interval(k, n, confidence=0.95):
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=confidence,
                                             method="wilson")
    return (float(ci.low), float(ci.high))


def divides(T, full_period, atol):
    m = round(T / full_period)
    return m >= 1 and abs(T - m * full_period) <= atol


def classify_sample(surface, p, T, tol, k_max, resonance_tol):
    """``'periodic'``, ``'nonperiodic'`` or ``'unresolved'`` plus extras."""
    alpha = equator_angle(surface, p)
    if alpha >= surface.theta_max:
        return "unresolved", alpha, False
    if alpha == 0.0:
        return ("periodic" if divides(T, TWO_PI, resonance_tol) else "nonperiodic"), alpha, False
    rec = period_record(surface, alpha, tol, k_max, resonance_tol)
    if rec.classification is None:
        return "unresolved", alpha, False
    cls = rec.classification
    if cls.periodic and divides(T, cls.full_period, resonance_tol * max(1.0, T)):
        return "periodic", alpha, False
    return "nonperiodic", alpha, cls.periodic


def estimate_measure(surface, T=TWO_PI, n=10_000, tol=1e-12, k_max=20, seed=0,
                     resonance_tol=1e-8, confidence=0.95, jobs=1):
    """Monte-Carlo estimate of the Liouville fraction of ``T``-periodic points.

    Each sample is reduced to its equator angle (Clairaut) and classified
    through the period/rotation quadratures and the resonance test.
    """
    samples = sample_liouville(surface, n, seed)
    if jobs == 1:
        results = [classify_sample(surface, p, T, tol, k_max, resonance_tol)
                   for p in samples]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=jobs)(
            delayed(classify_sample)(surface, p, T, tol, k_max, resonance_tol)
            for p in samples)
    kinds = [r[0] for r in results]
    alphas = [r[1] for r in results]
    n_per = kinds.count("periodic")
    n_non = kinds.count("nonperiodic")
    n_unr = kinds.count("unresolved")
    band = surface.profile.even_support_infimum
    return MeasureReport(
        n=n, T=T, seed=seed, tol=tol, k_max=k_max, resonance_tol=resonance_tol,
        periodic=n_per, nonperiodic=n_non, unresolved=n_unr,
        periodic_fraction=n_per / n,
        periodic_ci=wilson_interval(n_per, n, confidence),
        nonperiodic_fraction=n_non / n,
        nonperiodic_ci=wilson_interval(n_non, n, confidence),
        unresolved_fraction=n_unr / n,
        band_fraction=float(np.mean([a <= band for a in alphas])),
        resonant_other_period=sum(1 for r in results if r[2]),
        alphas=alphas,
    )
