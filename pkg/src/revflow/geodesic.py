"""Geodesic Hamiltonian flow on a surface of revolution.

States are ``(theta, phi, p_theta, p_phi)`` with ``p_phi`` the Clairaut
integral.  The flow is that of the homogeneous Hamiltonian
``h = sqrt(p_theta^2 / E + p_phi^2 / G)``, so trajectories are traced at unit
speed whatever the size of the covector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import InsufficientEventsError, NumericalError

TWO_PI = 2.0 * math.pi
# per-step tolerance handed to the stepper, relative to the user tolerance
STEP_TOL_FACTOR = 0.01
# step cap near bump supports, as a fraction of the narrowest bump width
STEP_CAP_FRACTION = 1.0 / 16.0
EVENT_T_TOL = 1e-12
MAX_STEPS = 10_000_000

_STOP_NAMES = {
    _core.STOP_END: "end",
    _core.STOP_DOMAIN: "domain_exit",
    _core.STOP_BOUNDARY: "boundary",
    _core.STOP_MAX_STEPS: "max_steps",
    _core.STOP_UNDERFLOW: "step_underflow",
}


@dataclass(frozen=True)
class PhasePoint:
    theta: float
    phi: float
    p_theta: float
    p_phi: float

    def as_array(self):
        return np.array([self.theta, self.phi, self.p_theta, self.p_phi])

    @classmethod
    def from_array(cls, y):
        return cls(*(float(v) for v in y))


@dataclass(frozen=True)
class EquatorData:
    alpha: float
    phi0: float = 0.0
    direction: int = 1


@dataclass(frozen=True)
class Event:
    kind: str  # turning | equator | domain_exit | reflection
    t: float
    theta: float
    phi: float
    direction: int = 0

    def to_dict(self):
        return {"kind": self.kind, "t": self.t, "theta": self.theta,
                "phi": self.phi, "direction": self.direction}


@dataclass
class Trajectory:
    """Samples of a traced geodesic.

    ``states`` rows are ``(theta, phi, p_theta, p_phi)`` with ``phi`` kept
    continuous (not reduced mod 2 pi) so that rotation can be read off.
    """

    t: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    stop: str = "end"
    energy_drift: float = 0.0
    clairaut_drift: float = 0.0
    h0: float = 1.0

    @property
    def theta(self):
        return self.states[:, 0]

    @property
    def phi(self):
        return self.states[:, 1]

    @property
    def final(self):
        return PhasePoint.from_array(self.states[-1])

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]


def _integrator_args(surface, tol):
    profile = surface.profile
    width = profile.min_width
    h_max = width * STEP_CAP_FRACTION if math.isfinite(width) else math.inf
    cap_from = profile.support_infimum
    step_tol = tol * STEP_TOL_FACTOR
    return step_tol, h_max, cap_from


def equator_to_phase(surface, data):
    """Phase point on the equator leaving at angle ``alpha``.

    ``p_phi = cos(alpha)`` and ``p_theta = direction * (1 + f(0)) sin(alpha)``,
    which puts the point on the unit cosphere.
    """
    if not 0.0 <= data.alpha < 0.5 * math.pi:
        raise ValueError(f"alpha = {data.alpha} outside [0, pi/2)")
    if data.direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    r0 = 1.0 + surface.profile(0.0)
    return PhasePoint(0.0, data.phi0, data.direction * r0 * math.sin(data.alpha),
                      math.cos(data.alpha))


def phase_to_equator(surface, p, atol=1e-12):
    """Inverse of :func:`equator_to_phase` for points on the equator."""
    if abs(p.theta) > atol:
        raise ValueError(f"theta = {p.theta} is not on the equator")
    h = float(surface.hamiltonian(p.theta, p.p_theta, p.p_phi))
    alpha = math.acos(min(1.0, abs(p.p_phi) / h))
    return EquatorData(alpha, p.phi, 1 if p.p_theta >= 0.0 else -1)


def equator_angle(surface, p):
    """Angle at which the geodesic through ``p`` meets the equator.

    By Clairaut ``|p_phi| / h = cos(alpha)``.
    """
    h = float(surface.hamiltonian(p.theta, p.p_theta, p.p_phi))
    return math.acos(min(1.0, abs(p.p_phi) / h))


def _sign(x):
    return int(x > 0.0) - int(x < 0.0)


def _scan_events(ts, ys, terms, inv_h0, t_tol):
    """Turning points (p_theta = 0) and equator crossings (theta = 0)."""
    events = []
    for comp, kind in ((2, "turning"), (0, "equator")):
        g = ys[:, comp]
        for k in range(len(ts) - 1):
            g0, g1 = g[k], g[k + 1]
            if g0 == 0.0 or _sign(g0) == _sign(g1):
                continue
            if g1 == 0.0:
                s, y = ts[k + 1] - ts[k], ys[k + 1]
            else:
                s, y = _core.locate(ys[k], ts[k + 1] - ts[k], inv_h0, terms,
                                    comp, 0.0, t_tol)
            direction = _sign(g1) if kind == "equator" else -_sign(g0)
            events.append(Event(kind, float(ts[k] + s), float(y[0]), float(y[1]),
                                int(direction)))
    events.sort(key=lambda e: e.t)
    return events


def flow(surface, p0, t_end, tol=1e-10, t_eval=None, project=False,
         max_steps=MAX_STEPS):
    """Trace the geodesic from ``p0`` for arc length ``t_end`` (either sign).

    Events are located by sign change between accepted steps and bisection on
    the step.  Leaving ``|theta| < theta_max`` halts the run with a
    ``domain_exit`` event.  When ``t_eval`` is given the trajectory is
    sampled at those times, otherwise at the accepted steps.
    """
    y0 = p0.as_array() if isinstance(p0, PhasePoint) else np.asarray(p0, float)
    terms = surface.terms
    step_tol, h_max, cap_from = _integrator_args(surface, tol)
    te = np.zeros(0) if t_eval is None else np.asarray(t_eval, dtype=float)
    ts, ys, eval_ys, n_eval, stop = _core.integrate(
        y0, float(t_end), step_tol, step_tol, h_max, cap_from, terms,
        surface.theta_max, False, project, te, max_steps)
    h0 = _core.hamiltonian(y0, terms)
    inv_h0 = 1.0 / h0
    ts = ts.copy()
    ys = ys.copy()
    events = []
    if stop == _core.STOP_DOMAIN:
        k = len(ts) - 2
        offset = math.copysign(surface.theta_max, ys[-1, 0])
        s, y = _core.locate(ys[k], ts[k + 1] - ts[k], inv_h0, terms, 0,
                            offset, EVENT_T_TOL)
        ts[-1] = ts[k] + s
        ys[-1] = y
        events.append(Event("domain_exit", float(ts[-1]), float(y[0]), float(y[1])))
    elif stop in (_core.STOP_UNDERFLOW, _core.STOP_MAX_STEPS):
        raise NumericalError(
            f"integration halted at t = {ts[-1]:.6g}: {_STOP_NAMES[stop]}",
            achieved=float(ts[-1]))
    events = _scan_events(ts, ys, terms, inv_h0, EVENT_T_TOL) + events

    h = np.array([_core.hamiltonian(y, terms) for y in ys])
    energy_drift = float(np.max(np.abs(h - h0)))
    clairaut_drift = float(np.max(np.abs(ys[:, 3] - y0[3])))
    if t_eval is None:
        t_out, y_out = ts, ys
    else:
        t_out, y_out = te[:n_eval], eval_ys[:n_eval].copy()
    return Trajectory(t_out, y_out, events, _STOP_NAMES[stop], energy_drift,
                      clairaut_drift, float(h0))


def flow_to(surface, p0, t, tol=1e-10):
    """Final state after arc length ``t`` (no events, no sampling)."""
    y0 = p0.as_array() if isinstance(p0, PhasePoint) else np.asarray(p0, float)
    step_tol, h_max, cap_from = _integrator_args(surface, tol)
    y, code = _core.flow_final(y0, float(t), step_tol, step_tol, h_max, cap_from,
                               surface.terms)
    if code != _core.STOP_END:
        raise NumericalError(f"integration failed: {_STOP_NAMES[code]}")
    return y


def flow_to_batch(surface, y0s, t, tol=1e-10):
    """Final states for a batch of initial states (rows of ``y0s``)."""
    step_tol, h_max, cap_from = _integrator_args(surface, tol)
    out, codes = _core.flow_final_batch(np.ascontiguousarray(y0s, dtype=float),
                                        float(t), step_tol, step_tol, h_max,
                                        cap_from, surface.terms)
    if np.any(codes != _core.STOP_END):
        bad = int(np.flatnonzero(codes != _core.STOP_END)[0])
        raise NumericalError(f"integration failed for row {bad}: "
                             f"{_STOP_NAMES[int(codes[bad])]}")
    return out


def _on_equator_orbit(traj, atol=1e-12):
    return (np.max(np.abs(traj.states[:, 0])) <= atol
            and np.max(np.abs(traj.states[:, 2])) <= atol)


def _period_window(traj):
    """``(t1, t3, phi1, phi3)`` spanning one full theta-oscillation."""
    turning = traj.events_of("turning")
    if len(turning) >= 3:
        e1, e3 = turning[0], turning[2]
        return e1.t, e3.t, e1.phi, e3.phi
    crossings = traj.events_of("equator")
    for i, e in enumerate(crossings):
        for e2 in crossings[i + 1:]:
            if e2.direction == e.direction:
                return e.t, e2.t, e.phi, e2.phi
    return None


def empirical_period(traj):
    """Period of ``theta(t)`` read from consecutive turning points."""
    window = _period_window(traj)
    if window is None:
        if _on_equator_orbit(traj):
            return TWO_PI
        raise InsufficientEventsError(
            "need three turning points or two same-direction equator crossings")
    return window[1] - window[0]


def wrap_angle(x):
    """Reduce to ``(-pi, pi]``."""
    y = math.remainder(x, TWO_PI)
    return math.pi if y == -math.pi else y


def empirical_rotation(traj):
    """Advance of ``phi`` beyond ``2 pi`` over one ``theta`` period."""
    window = _period_window(traj)
    if window is None:
        if _on_equator_orbit(traj):
            return 0.0
        raise InsufficientEventsError(
            "need three turning points or two same-direction equator crossings")
    orientation = 1.0 if traj.states[0, 3] >= 0.0 else -1.0
    return wrap_angle(orientation * (window[3] - window[2]) - TWO_PI)
