"""Geodesic billiard on the half-surface ``{q1 >= 0}`` = ``{0 <= phi <= pi}``.

The boundary is the pair of meridians ``phi = 0`` and ``phi = pi``, both
fixed by the isometry ``phi -> -phi``.  Reflection therefore only flips the
sign of ``p_phi``, and a billiard trajectory unfolds to a geodesic of the
whole surface by mirroring every other arc.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _core
from .errors import NumericalError
from .geodesic import (EVENT_T_TOL, MAX_STEPS, Event, PhasePoint, Trajectory,
                       _integrator_args, _scan_events, _STOP_NAMES)

GRAZING_FLOOR = 1e-6
MAX_REFLECTIONS = 100_000
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HalfSurface:
    base: object  # SurfaceOfRevolution

    @property
    def theta_max(self):
        return self.base.theta_max

    @property
    def terms(self):
        return self.base.terms


@dataclass(frozen=True)
class Reflection:
    t: float
    boundary: float  # 0 or pi
    theta: float
    pre: np.ndarray
    post: np.ndarray

    def to_dict(self):
        return {"kind": "reflection", "t": self.t, "boundary": self.boundary,
                "theta": self.theta, "pre": [float(v) for v in self.pre],
                "post": [float(v) for v in self.post]}


@dataclass
class BilliardTrajectory:
    t: np.ndarray
    states: np.ndarray
    arc_index: np.ndarray
    reflections: list = field(default_factory=list)
    events: list = field(default_factory=list)
    stop: str = "end"
    grazing: bool = False
    dead_end: bool = False
    energy_drift: float = 0.0

    @property
    def n_reflections(self):
        return len(self.reflections)

    def reflections_before(self, t):
        return sum(1 for r in self.reflections if r.t < t)


def _locate_boundary(y, h, inv_h0, terms):
    end = _core.single_step(y, h, terms, inv_h0)
    wall = 0.0 if end[1] <= 0.0 else math.pi
    s, y_hit = _core.locate(y, h, inv_h0, terms, 1, wall, EVENT_T_TOL)
    y_hit = y_hit.copy()
    y_hit[1] = wall
    return s, y_hit, wall


def billiard_flow(half, p0, t_end, tol=1e-10, t_eval=None,
                  max_reflections=MAX_REFLECTIONS, grazing_floor=GRAZING_FLOOR):
    """Billiard trajectory from an interior phase point, forward in time.

    Impacts are located on the integrator step and answered by
    ``p_phi -> -p_phi``.  An impact with ``|p_phi| < grazing_floor`` marks the
    run as grazing and halts it; exceeding ``max_reflections`` marks it as a
    dead end.  Neither is an exception: both are results to inspect.
    """
    y = p0.as_array() if isinstance(p0, PhasePoint) else np.asarray(p0, float)
    if not 0.0 < y[1] < math.pi:
        raise ValueError(f"phi0 = {y[1]} is not interior to (0, pi)")
    if t_end < 0.0:
        raise ValueError("billiard_flow integrates forward only")
    surface = half.base
    terms = surface.terms
    step_tol, h_max, cap_from = _integrator_args(surface, tol)
    h0 = _core.hamiltonian(y, terms)
    inv_h0 = 1.0 / h0
    te_all = None if t_eval is None else np.asarray(t_eval, dtype=float)

    t0 = 0.0
    out_t, out_y, out_arc = [], [], []
    reflections, events = [], []
    drift = 0.0
    stop = "end"
    grazing = dead_end = False
    arc = 0
    while True:
        remaining = t_end - t0
        if te_all is None:
            te = np.zeros(0)
        else:
            lower = (te_all > t0) if arc else (te_all >= t0)
            te = te_all[lower & (te_all <= t_end)] - t0
        ts, ys, eval_ys, n_eval, code = _core.integrate(
            y, remaining, step_tol, step_tol, h_max, cap_from, terms,
            surface.theta_max, True, False, te, MAX_STEPS)
        ts = ts.copy()
        ys = ys.copy()
        hit = None
        step_start = (ts[-2], ys[-2].copy()) if len(ts) > 1 else None
        if code == _core.STOP_BOUNDARY:
            k = len(ts) - 2
            s, y_hit, wall = _locate_boundary(ys[k], ts[k + 1] - ts[k], inv_h0, terms)
            ts[-1] = ts[k] + s
            ys[-1] = y_hit
            hit = wall
        elif code == _core.STOP_DOMAIN:
            k = len(ts) - 2
            offset = math.copysign(surface.theta_max, ys[-1, 0])
            s, y_exit = _core.locate(ys[k], ts[k + 1] - ts[k], inv_h0, terms, 0,
                                     offset, EVENT_T_TOL)
            ts[-1] = ts[k] + s
            ys[-1] = y_exit
        elif code != _core.STOP_END:
            raise NumericalError(f"billiard arc halted: {_STOP_NAMES[code]}")

        for e in _scan_events(ts, ys, terms, inv_h0, EVENT_T_TOL):
            events.append(Event(e.kind, e.t + t0, e.theta, e.phi, e.direction))
        h = np.array([_core.hamiltonian(v, terms) for v in ys])
        drift = max(drift, float(np.max(np.abs(h - h0))))
        if te_all is None:
            out_t.append(ts + t0)
            out_y.append(ys)
        else:
            t_arc = list(te[:n_eval])
            y_arc = list(eval_ys[:n_eval])
            if code in (_core.STOP_BOUNDARY, _core.STOP_DOMAIN):
                # samples inside the terminal step, up to the located impact
                tk, yk = step_start
                for tq in te[n_eval:]:
                    if tq > ts[-1]:
                        break
                    t_arc.append(tq)
                    y_arc.append(_core.single_step(yk, tq - tk, terms, inv_h0))
            out_t.append(np.asarray(t_arc, dtype=float) + t0)
            out_y.append(np.asarray(y_arc, dtype=float).reshape(-1, 4))
        out_arc.append(np.full(len(out_t[-1]), arc))

        if code == _core.STOP_DOMAIN:
            events.append(Event("domain_exit", float(ts[-1] + t0), float(ys[-1, 0]),
                                float(ys[-1, 1])))
            stop = "domain_exit"
            break
        if hit is None:
            break
        t_hit = float(ts[-1] + t0)
        pre = ys[-1].copy()
        if abs(pre[3]) < grazing_floor:
            grazing = True
            stop = "grazing"
            events.append(Event("grazing", t_hit, float(pre[0]), hit))
            break
        post = pre.copy()
        post[3] = -pre[3]
        reflections.append(Reflection(t_hit, hit, float(pre[0]), pre, post))
        events.append(Event("reflection", t_hit, float(pre[0]), hit,
                            1 if post[3] > 0.0 else -1))
        if len(reflections) > max_reflections:
            dead_end = True
            stop = "dead_end"
            break
        y = post
        t0 = t_hit
        arc += 1
        if t0 >= t_end:
            break

    events.sort(key=lambda e: e.t)
    return BilliardTrajectory(np.concatenate(out_t), np.vstack(out_y),
                              np.concatenate(out_arc), reflections, events, stop,
                              grazing, dead_end, drift)


def unfold(half, bt):
    """Mirror every other arc by ``phi -> -phi`` to recover a base geodesic.

    Longitude is re-accumulated so the result is continuous across impacts.
    """
    if bt.grazing:
        raise ValueError("cannot unfold a grazing trajectory")
    states = bt.states.copy()
    odd = (bt.arc_index % 2) == 1
    states[odd, 1] = -states[odd, 1]
    states[odd, 3] = -states[odd, 3]
    prev_end = None
    for a in np.unique(bt.arc_index):
        rows = np.flatnonzero(bt.arc_index == a)
        if prev_end is not None and len(rows):
            shift = TWO_PI * round((prev_end - states[rows[0], 1]) / TWO_PI)
            states[rows, 1] += shift
        if len(rows):
            prev_end = states[rows[-1], 1]
    return Trajectory(bt.t.copy(), states, [], bt.stop, bt.energy_drift, 0.0)


def _conormal_sign(boundary):
    # boundary-adapted x_d = phi at phi = 0 and x_d = pi - phi at phi = pi
    return 1.0 if boundary == 0.0 else -1.0


def reflection_checks(half, refl, atol=1e-12):
    """Re-check the reflection law at one impact.

    In the chart ``x' = theta``, ``x_d = +-phi`` the covector splits as
    ``xi' = p_theta`` and ``xi_d = +-p_phi``.  Returns a dict of booleans for
    energy equality, fixed base point, unchanged tangential part, outgoing
    and incoming transversality, plus the post-impact conormal found by the
    general solve.
    """
    surface = half.base
    pre, post = refl.pre, refl.post
    sgn = _conormal_sign(refl.boundary)
    h_pre = float(surface.hamiltonian(pre[0], pre[2], pre[3]))
    h_post = float(surface.hamiltonian(post[0], post[2], post[3]))
    G = math.cos(pre[0]) ** 2
    # h_{xi_d} = xi_d / (G h) with xi_d = sgn * p_phi
    dh_in = sgn * pre[3] / (G * h_pre)
    dh_out = sgn * post[3] / (G * h_post)
    solved = sgn * general_reflection(surface, pre[0], pre[2], sgn * pre[3])
    return {
        "energy": h_pre == h_post,
        "base_point": bool(pre[0] == post[0] and pre[1] == post[1]),
        "tangential": bool(pre[2] == post[2]),
        "outgoing": dh_out > 0.0,
        "incoming": dh_in < 0.0,
        "general_solve_p_phi": solved,
        "general_solve_agrees": abs(solved - post[3]) <= atol * max(1.0, abs(post[3])),
    }


def general_reflection(surface, theta, xi_tan, xi_d_in):
    """Outgoing conormal component by solving the reflection law directly.

    Finds ``xi_d > xi_st`` with ``h(theta, xi_tan, xi_d) = h(theta, xi_tan,
    xi_d_in)`` where ``xi_st`` minimises ``h`` along the fibre.
    """
    E = float(surface.E(theta))
    G = math.cos(theta) ** 2

    def h(xd):
        return math.sqrt(xi_tan * xi_tan / E + xd * xd / G)

    target = h(xi_d_in)
    res = optimize.minimize_scalar(h, bracket=(xi_d_in, 0.5 * xi_d_in))
    xi_st = float(res.x)
    hi = abs(xi_d_in) + abs(xi_st) + 1.0
    while h(hi) < target:
        hi *= 2.0
    if xi_d_in >= xi_st:
        raise NumericalError("incoming conormal is not below the fibre minimum")
    return optimize.brentq(lambda xd: h(xd) - target, xi_st, hi,
                           xtol=1e-15, rtol=4 * np.finfo(float).eps)


# Hamiltonian curvature ------------------------------------------------------

def _richardson(fun, x, step):
    """Central difference of ``fun`` at ``x`` refined once by Richardson."""
    d1 = (fun(x + step) - fun(x - step)) / (2.0 * step)
    d2 = (fun(x + step / 2) - fun(x - step / 2)) / step
    return (4.0 * d2 - d1) / 3.0


def poisson_curvature(ginv, x_tan, xi_tan, fd_step=1e-5):
    """``{h_{xi_d}, h}`` at ``x_d = 0``, ``xi_d = xi_st`` for ``h = |xi|``.

    ``ginv(x_tan, x_d)`` returns the 2x2 inverse metric in boundary-adapted
    coordinates ordered ``(x', x_d)``.  The fibre minimum ``xi_st`` is found
    numerically; derivatives in the fibre are exact, those in the base come
    from Richardson-refined central differences of the metric with step
    ``fd_step``.  Uses ``{a, b} = a_xi . b_x - a_x . b_xi``.

    Returns ``(k, xi_st, h_xidxid)``.
    """
    if xi_tan == 0.0:
        raise ValueError("degenerate tangential covector xi' = 0")
    g0 = np.asarray(ginv(x_tan, 0.0), dtype=float)

    def h_fibre(xd):
        xi = np.array([xi_tan, xd])
        return math.sqrt(xi @ g0 @ xi)

    scale = abs(xi_tan) * math.sqrt(g0[0, 0] / g0[1, 1])
    res = optimize.minimize_scalar(h_fibre, bracket=(-scale, 0.0, scale),
                                   tol=1e-12)
    if not res.success:
        raise NumericalError("fibre minimisation failed")
    xi = np.array([xi_tan, float(res.x)])
    # exact fibre data at the base point
    gx = g0 @ xi
    h = math.sqrt(xi @ gx)
    h_xi = gx / h
    A_xi = g0[1] / h - gx[1] * gx / h**3
    h_dd = A_xi[1]
    # base derivatives of the inverse metric
    dg = [
        _richardson(lambda s: np.asarray(ginv(s, 0.0), float), x_tan, fd_step),
        _richardson(lambda d: np.asarray(ginv(x_tan, d), float), 0.0, fd_step),
    ]
    h_x = np.array([xi @ m @ xi / (2.0 * h) for m in dg])
    A_x = np.array([(m @ xi)[1] / h - gx[1] * (xi @ m @ xi) / (2.0 * h**3)
                    for m in dg])
    k = float(A_xi @ h_x - A_x @ h_xi)
    return k, float(res.x), float(h_dd)


def fermi_point(half, s, d, boundary=0.0, tol=1e-13):
    """``(theta, phi)`` and velocity reached from the boundary meridian.

    Starts at latitude ``s`` on the meridian ``phi = boundary`` and follows
    the geodesic orthogonal to it, pointing into the half-surface, for signed
    arc length ``d``.
    """
    surface = half.base
    direction = 1.0 if boundary == 0.0 else -1.0
    y0 = np.array([s, boundary, 0.0, direction * math.cos(s)])
    if d == 0.0:
        y = y0
    else:
        step_tol, h_max, cap_from = _integrator_args(surface, tol)
        y, code = _core.flow_final(y0, float(d), step_tol, step_tol, h_max,
                                   cap_from, surface.terms)
        if code != _core.STOP_END:
            raise NumericalError("Fermi-chart geodesic failed")
    r = 1.0 + surface.profile(y[0])
    vel = np.array([y[2] / r**2, y[3] / math.cos(y[0]) ** 2])
    return y[:2].copy(), vel


def fermi_inverse_metric(half, boundary=0.0, ds=1e-4, tol=1e-13):
    """Inverse metric in coordinates (latitude along boundary, signed distance)."""
    surface = half.base

    def ginv(s, d):
        (p_plus, _), (p_minus, _) = (fermi_point(half, s + ds, d, boundary, tol),
                                     fermi_point(half, s - ds, d, boundary, tol))
        (p_plus2, _), (p_minus2, _) = (fermi_point(half, s + ds / 2, d, boundary, tol),
                                       fermi_point(half, s - ds / 2, d, boundary, tol))
        e_s = (4.0 * (p_plus2 - p_minus2) / ds - (p_plus - p_minus) / (2 * ds)) / 3.0
        pt, e_d = fermi_point(half, s, d, boundary, tol)
        metric = np.diag([float(surface.E(pt[0])), math.cos(pt[0]) ** 2])
        J = np.column_stack([e_s, e_d])
        return np.linalg.inv(J.T @ metric @ J)

    return ginv


@dataclass(frozen=True)
class CurvatureSample:
    theta: float
    xi_tan: float
    k: float
    xi_st: float
    h_xidxid: float


def hamiltonian_curvature(half, theta, xi_tan, fd_step=1e-5, boundary=0.0):
    """Hamiltonian curvature of a boundary meridian at ``(theta, xi')``."""
    if not abs(theta) < half.theta_max:
        raise ValueError(f"theta = {theta} outside the dynamical domain")
    ginv = fermi_inverse_metric(half, boundary)
    k, xi_st, h_dd = poisson_curvature(ginv, theta, xi_tan, fd_step)
    if not h_dd > 0.0:
        raise NumericalError("strong simple reflection condition fails")
    return CurvatureSample(theta, xi_tan, k, xi_st, h_dd)


def disk_inverse_metric(x_tan, x_d):
    """Unit disk in (angle, distance to the circle): ``r = 1 - x_d``."""
    r = 1.0 - x_d
    return np.array([[1.0 / r**2, 0.0], [0.0, 1.0]])
