"""Packaged end-to-end experiments on the bump surface.

``thm47`` checks that the bump surface carries both a positive-measure band of
absolutely 2 pi-periodic geodesics and a positive-measure set of nonperiodic
ones.  ``thm48`` checks the same band survives as (2 pi, 2)-periodic orbits of
the billiard on the half-surface, whose boundary has zero curvature.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .analysis import (displacement, estimate_measure, jet_norms,
                       sample_liouville)
from .billiard import (HalfSurface, billiard_flow, hamiltonian_curvature,
                       reflection_checks, unfold)
from .geodesic import EquatorData, PhasePoint, equator_angle, equator_to_phase, flow
from .period import resonant_fraction, scan
from .surface import load_surface

TWO_PI = 2.0 * math.pi


def packaged_surface_path(name):
    """Path of a surface document shipped with the package (``bump`` etc.)."""
    return str(resources.files("revflow") / "data" / f"{name}.json")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.6g} (threshold {self.threshold:.6g})"


@dataclass
class Summary:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"experiment": self.experiment, "config": self.config,
                "passed": self.passed, "checks": [asdict(c) for c in self.checks],
                **self.extras}


@dataclass(frozen=True)
class Thm47Config:
    surface: str = ""
    seed: int = 0
    tol: float = 1e-10
    quad_tol: float = 1e-12
    band_samples: int = 200
    jet_order: int = 3
    jet_tol: float = 1e-6
    fd_step: float = 1e-3
    band_displacement_tol: float = 1e-8
    grid_n: int = 200
    grid_lo: float = 0.55
    grid_hi: float = 1.2
    k_max: int = 20
    resonance_tol: float = 1e-8
    max_resonant_fraction: float = 0.05
    measure_samples: int = 10_000
    min_nonperiodic_fraction: float = 0.05
    jobs: int = 1


@dataclass(frozen=True)
class Thm48Config:
    surface: str = ""
    seed: int = 0
    tol: float = 1e-10
    unfold_starts: int = 50
    unfold_t_end: float = 20.0
    unfold_tol: float = 1e-7
    band_alpha: float = 0.3
    band_starts: int = 20
    band_tol: float = 1e-6
    curvature_samples: int = 20
    curvature_tol: float = 1e-5
    fd_step: float = 1e-5
    grazing_starts: int = 100
    grazing_t_end: float = 100.0


def _surface(path):
    return load_surface(path or packaged_surface_path("bump"))


def band_starts(surface, n, seed, alpha_max):
    """First ``n`` Liouville samples with equator angle below ``alpha_max``."""
    out = []
    batch = 0
    while len(out) < n:
        for p in sample_liouville(surface, 4 * n, seed + 7919 * batch):
            if equator_angle(surface, p) < alpha_max:
                out.append(p)
                if len(out) == n:
                    break
        batch += 1
    return out


def thm47(cfg=Thm47Config()):
    surface = _surface(cfg.surface)
    band_edge = surface.profile.even_support_infimum
    summary = Summary("thm47", asdict(cfg))
    checks = summary.checks

    starts = band_starts(surface, cfg.band_samples, cfg.seed, band_edge)
    d_max = max(displacement(surface, p, TWO_PI, cfg.tol) for p in starts)
    checks.append(Check("band displacement D(2pi) max", d_max <= cfg.band_displacement_tol,
                        d_max, cfg.band_displacement_tol))
    jet_max = 0.0
    for p in starts:
        rep = jet_norms(surface, p, TWO_PI, cfg.jet_order, cfg.fd_step, cfg.tol, cfg.jet_tol)
        jet_max = max(jet_max, max(rep.norms))
    checks.append(Check(f"band jets to order {cfg.jet_order} max", jet_max <= cfg.jet_tol,
                        jet_max, cfg.jet_tol))

    grid = np.linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_n + 2)[1:-1]
    records = scan(surface, grid, cfg.quad_tol, cfg.k_max, cfg.resonance_tol, cfg.jobs)
    frac = resonant_fraction(records)
    checks.append(Check("resonant fraction on the alpha grid",
                        frac <= cfg.max_resonant_fraction, frac, cfg.max_resonant_fraction))

    rep = estimate_measure(surface, TWO_PI, cfg.measure_samples, cfg.quad_tol, cfg.k_max,
                           cfg.seed, cfg.resonance_tol, jobs=cfg.jobs)
    summary.extras["measure"] = rep.to_dict()
    lo_per = rep.periodic_ci[0]
    lo_non = rep.nonperiodic_ci[0]
    checks.append(Check("periodic fraction, 95% lower bound", lo_per > 0.0, lo_per, 0.0))
    checks.append(Check("nonperiodic fraction, 95% lower bound",
                        lo_non >= cfg.min_nonperiodic_fraction, lo_non,
                        cfg.min_nonperiodic_fraction))
    return summary


def interior_start(p):
    """Move a sample into the half-surface by reducing phi into (0, pi)."""
    phi = math.fmod(p.phi, math.pi)
    if phi <= 0.0:
        phi += math.pi
    return PhasePoint(p.theta, phi, p.p_theta, p.p_phi)


def unfolding_error(half, p, t_end, tol):
    """Sup-norm distance between the unfolded billiard and the direct geodesic."""
    ts = np.linspace(0.0, t_end, 401)
    bt = billiard_flow(half, p, t_end, tol, t_eval=ts)
    un = unfold(half, bt)
    direct = flow(half.base, p, t_end, tol, t_eval=un.t)
    return float(np.max(np.abs(un.states - direct.states)))


def thm48(cfg=Thm48Config()):
    surface = _surface(cfg.surface)
    half = HalfSurface(surface)
    summary = Summary("thm48", asdict(cfg))
    checks = summary.checks
    rng = np.random.default_rng(cfg.seed)

    starts = [interior_start(p) for p in sample_liouville(surface, cfg.unfold_starts, cfg.seed)]
    err = max(unfolding_error(half, p, cfg.unfold_t_end, cfg.tol) for p in starts)
    checks.append(Check("unfolding sup error", err <= cfg.unfold_tol, err, cfg.unfold_tol))

    bad = 0
    n_refl = 0
    for p in starts:
        bt = billiard_flow(half, p, cfg.unfold_t_end, cfg.tol)
        for r in bt.reflections:
            n_refl += 1
            c = reflection_checks(half, r)
            if not (c["energy"] and c["base_point"] and c["tangential"]
                    and r.post[3] == -r.pre[3]):
                bad += 1
    checks.append(Check(f"reflections violating the law (of {n_refl})", bad == 0, bad, 0))

    worst = 0.0
    wrong_count = 0
    for i in range(cfg.band_starts):
        phi0 = math.pi * (i + 0.5) / cfg.band_starts
        p = equator_to_phase(surface, EquatorData(cfg.band_alpha, phi0, 1 - 2 * (i % 2)))
        bt = billiard_flow(half, p, TWO_PI, cfg.tol)
        worst = max(worst, float(np.max(np.abs(bt.states[-1] - p.as_array()))))
        wrong_count += bt.reflections_before(TWO_PI) != 2
    checks.append(Check(f"alpha = {cfg.band_alpha} band return error after 2pi",
                        worst <= cfg.band_tol, worst, cfg.band_tol))
    checks.append(Check("band starts without exactly 2 reflections per 2pi",
                        wrong_count == 0, wrong_count, 0))

    k_max = 0.0
    lim = 0.9 * surface.theta_max
    for _ in range(cfg.curvature_samples):
        theta = float(rng.uniform(-lim, lim))
        xi = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0))
        k_max = max(k_max, abs(hamiltonian_curvature(half, theta, xi, cfg.fd_step).k))
    checks.append(Check("boundary curvature max |k|", k_max <= cfg.curvature_tol,
                        k_max, cfg.curvature_tol))

    flagged = 0
    bound = math.ceil(cfg.grazing_t_end / math.pi) + 1
    most = 0
    for p in sample_liouville(surface, cfg.grazing_starts, cfg.seed + 1):
        bt = billiard_flow(half, interior_start(p), cfg.grazing_t_end, cfg.tol)
        flagged += bt.grazing or bt.dead_end
        most = max(most, bt.n_reflections)
    checks.append(Check("grazing or dead-end runs", flagged == 0, flagged, 0))
    checks.append(Check("most reflections in one run", most <= bound, most, bound))
    return summary


EXPERIMENTS = {"thm47": (thm47, Thm47Config), "thm48": (thm48, Thm48Config)}
