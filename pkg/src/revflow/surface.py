"""Profile functions and the surfaces of revolution they generate.

The surface is parametrised by latitude ``theta`` in ``[-pi/2, pi/2]`` and
longitude ``phi``; a profile ``f`` sets the meridian speed so the metric is

    ds^2 = (1 + f(theta))^2 dtheta^2 + cos(theta)^2 dphi^2.

Profiles are finite sums of flat-at-endpoints bumps, which keeps them
numba-friendly (see ``terms``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import InvalidProfileError, NumericalError

HALF_PI = 0.5 * math.pi
DEFAULT_THETA_MAX = HALF_PI - 0.05
DEFAULT_GRID_N = 10_000

KINDS = ("zero", "bump", "odd_bump", "sum")


def _bump(theta, a, b, amplitude):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    inside = (theta > a) & (theta < b)
    u = (theta[inside] - a) * (b - theta[inside])
    out[inside] = amplitude * np.exp(4.0 / (b - a) ** 2 - 1.0 / u)
    return out


def _bump_derivative(theta, a, b, amplitude):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    inside = (theta > a) & (theta < b)
    t = theta[inside]
    u = (t - a) * (b - t)
    g = amplitude * np.exp(4.0 / (b - a) ** 2 - 1.0 / u)
    out[inside] = g * (a + b - 2.0 * t) / (u * u)
    return out


@dataclass(frozen=True)
class ProfileFunction:
    """Generator ``f(theta)`` of a surface of revolution.

    Use the constructors :meth:`zero`, :meth:`bump`, :meth:`odd_bump` and
    :meth:`sum` rather than the raw fields.  ``Bump(a, b, amplitude)`` is
    ``amplitude * exp(4/(b-a)^2 - 1/((theta-a)(b-theta)))`` on ``(a, b)`` and
    zero elsewhere, so its peak value is ``amplitude``.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    amplitude: float = 0.0
    parts: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidProfileError(f"unknown profile kind {self.kind!r}")
        if self.kind in ("bump", "odd_bump"):
            if not (-HALF_PI < self.a < self.b < HALF_PI):
                raise InvalidProfileError(
                    f"bump support ({self.a}, {self.b}) must satisfy "
                    "-pi/2 < a < b < pi/2")
            if self.kind == "odd_bump" and self.a < 0.0:
                raise InvalidProfileError(
                    "odd_bump needs 0 <= a so the mirrored copy does not overlap")
            if not math.isfinite(self.amplitude) or self.amplitude == 0.0:
                raise InvalidProfileError("bump amplitude must be finite and nonzero")

    # constructors -----------------------------------------------------

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def bump(cls, a, b, amplitude):
        return cls("bump", float(a), float(b), float(amplitude))

    @classmethod
    def odd_bump(cls, a, b, amplitude):
        """``Bump(a, b, amp) - Bump(-b, -a, amp)``; odd by construction."""
        return cls("odd_bump", float(a), float(b), float(amplitude))

    @classmethod
    def sum(cls, *profiles):
        return cls("sum", parts=tuple(profiles))

    # evaluation -------------------------------------------------------

    @cached_property
    def terms(self):
        """Rows ``(a, b, amplitude)``, one per elementary bump."""
        if self.kind == "zero":
            rows = []
        elif self.kind == "bump":
            rows = [(self.a, self.b, self.amplitude)]
        elif self.kind == "odd_bump":
            rows = [(self.a, self.b, self.amplitude),
                    (-self.b, -self.a, -self.amplitude)]
        else:
            rows = [tuple(r) for p in self.parts for r in p.terms]
        return np.array(rows, dtype=float).reshape(-1, 3)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for a, b, amp in self.terms:
            out = out + _bump(theta, a, b, amp)
        return out if out.ndim else float(out)

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for a, b, amp in self.terms:
            out = out + _bump_derivative(theta, a, b, amp)
        return out if out.ndim else float(out)

    def even_part(self, theta):
        """``(f(theta) + f(-theta)) / 2``."""
        theta = np.asarray(theta, dtype=float)
        out = 0.5 * (np.asarray(self(theta)) + np.asarray(self(-theta)))
        return out if out.ndim else float(out)

    @cached_property
    def even_terms(self):
        """Terms of ``f`` that survive in the even part.

        A bump cancels in the even part against a mirrored bump of opposite
        amplitude; odd profiles therefore have no even terms.
        """
        rows = [tuple(r) for r in self.terms]
        kept = []
        used = [False] * len(rows)
        for i, (a, b, amp) in enumerate(rows):
            if used[i]:
                continue
            for j in range(i + 1, len(rows)):
                if used[j]:
                    continue
                a2, b2, amp2 = rows[j]
                if a2 == -b and b2 == -a and amp2 == -amp:
                    used[i] = used[j] = True
                    break
            if not used[i]:
                kept.append((a, b, amp))
        return np.array(kept, dtype=float).reshape(-1, 3)

    @property
    def even_support_infimum(self):
        """Distance from 0 to the support of the even part (inf if none)."""
        best = math.inf
        for a, b, _ in self.even_terms:
            dist = 0.0 if a < 0.0 < b else min(abs(a), abs(b))
            best = min(best, dist)
        return best

    @property
    def support_infimum(self):
        """Distance from 0 to the support of ``f`` itself (inf if none)."""
        best = math.inf
        for a, b, _ in self.terms:
            best = min(best, 0.0 if a < 0.0 < b else min(abs(a), abs(b)))
        return best

    @property
    def min_width(self):
        if len(self.terms) == 0:
            return math.inf
        return float(np.min(self.terms[:, 1] - self.terms[:, 0]))

    def breakpoints(self):
        """Support endpoints of all terms and their mirror images."""
        pts = set()
        for a, b, _ in self.terms:
            pts.update((a, b, -a, -b))
        return sorted(pts)

    # serialisation ----------------------------------------------------

    def to_dict(self):
        if self.kind == "zero":
            params = {}
        elif self.kind == "sum":
            params = {"terms": [p.to_dict() for p in self.parts]}
        else:
            params = {"a": self.a, "b": self.b, "amplitude": self.amplitude}
        return {"kind": self.kind, "parameters": params}

    @classmethod
    def from_dict(cls, doc):
        try:
            kind = doc["kind"]
            params = doc.get("parameters", {})
            if kind == "zero":
                return cls.zero()
            if kind == "sum":
                return cls.sum(*(cls.from_dict(d) for d in params["terms"]))
            if kind in ("bump", "odd_bump"):
                vals = []
                for name in ("a", "b", "amplitude"):
                    try:
                        vals.append(float(params[name]))
                    except (TypeError, ValueError):
                        raise InvalidProfileError(
                            f"parameters.{name} must be a number, got {params[name]!r}"
                        ) from None
                return getattr(cls, kind)(*vals)
        except KeyError as exc:
            raise InvalidProfileError(f"profile document missing field {exc}") from None
        raise InvalidProfileError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class ValidationReport:
    grid_n: int
    f_at_zero: float
    min_margin: float
    argmin_theta: float
    supports_inside: bool
    theta_max: float

    @property
    def ok(self):
        return self.supports_inside and self.min_margin > 0.0

    def to_dict(self):
        return {
            "grid_n": self.grid_n,
            "f_at_zero": self.f_at_zero,
            "min_margin": self.min_margin,
            "argmin_theta": self.argmin_theta,
            "supports_inside": self.supports_inside,
            "theta_max": self.theta_max,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class SurfaceOfRevolution:
    """A validated profile together with metric data and the embedding."""

    profile: ProfileFunction
    theta_max: float = DEFAULT_THETA_MAX
    validation: ValidationReport | None = None

    @property
    def terms(self):
        return self.profile.terms

    def E(self, theta):
        return (1.0 + np.asarray(self.profile(theta))) ** 2

    def G(self, theta):
        return np.cos(theta) ** 2

    def area_density(self, theta):
        """``sqrt(E G) = (1 + f) cos(theta)``."""
        return (1.0 + np.asarray(self.profile(theta))) * np.cos(theta)

    def hamiltonian(self, theta, p_theta, p_phi):
        r = 1.0 + np.asarray(self.profile(theta))
        return np.sqrt(np.asarray(p_theta) ** 2 / r**2
                       + np.asarray(p_phi) ** 2 / np.cos(theta) ** 2)

    def height(self, theta, tol=1e-10):
        """``q3(theta)``: integral of ``sqrt((1+f)^2 - sin^2)`` from 0."""
        if abs(theta) > HALF_PI:
            raise ValueError(f"|theta| = {abs(theta)} exceeds pi/2")

        def integrand(psi):
            r = 1.0 + self.profile(psi)
            return math.sqrt(max(r * r - math.sin(psi) ** 2, 0.0))

        lo, hi = sorted((0.0, float(theta)))
        pts = [p for p in self.profile.breakpoints() if lo < p < hi]
        val, err = integrate.quad(integrand, 0.0, theta, epsabs=tol, epsrel=0.0,
                                  limit=500, points=pts or None)
        if not err <= tol:
            raise NumericalError(
                f"height quadrature reached {err:.3g}, requested {tol:.3g}",
                achieved=err)
        return val

    def to_dict(self):
        doc = self.profile.to_dict()
        doc["theta_max"] = self.theta_max
        doc["grid_n"] = self.validation.grid_n if self.validation else DEFAULT_GRID_N
        return doc


def validate_profile(profile, grid_n=DEFAULT_GRID_N, theta_max=DEFAULT_THETA_MAX):
    """Grid check of f(0) = 0, 1 + f > |sin| and structural pole conditions."""
    grid = np.linspace(-HALF_PI, HALF_PI, grid_n + 2)[1:-1]
    margin = 1.0 + profile(grid) - np.abs(np.sin(grid))
    k = int(np.argmin(margin))
    terms = profile.terms
    inside = bool(np.all((terms[:, 0] > -HALF_PI) & (terms[:, 1] < HALF_PI)))
    return ValidationReport(
        grid_n=grid_n,
        f_at_zero=float(profile(0.0)),
        min_margin=float(margin[k]),
        argmin_theta=float(grid[k]),
        supports_inside=inside,
        theta_max=theta_max,
    )


def build_surface(profile, grid_n=DEFAULT_GRID_N, tol=1e-12,
                  theta_max=DEFAULT_THETA_MAX):
    """Validate ``profile`` and wrap it as a :class:`SurfaceOfRevolution`.

    Raises :class:`InvalidProfileError` naming the offending latitude when
    ``1 + f <= |sin theta| + tol`` somewhere on the grid, or when ``f(0)``
    is not zero.
    """
    if not 0.0 < theta_max < HALF_PI:
        raise InvalidProfileError(f"theta_max = {theta_max} outside (0, pi/2)")
    report = validate_profile(profile, grid_n, theta_max)
    if abs(report.f_at_zero) > tol:
        raise InvalidProfileError(f"f(0) = {report.f_at_zero} is not zero", theta=0.0)
    if report.min_margin < tol:
        raise InvalidProfileError(
            f"1 + f(theta) <= |sin theta| at theta = {report.argmin_theta:.6g} "
            f"(margin {report.min_margin:.3g})", theta=report.argmin_theta)
    if not report.supports_inside:
        raise InvalidProfileError("profile support reaches a pole")
    return SurfaceOfRevolution(profile, theta_max, report)


def embed(surface, theta, phi, tol=1e-10):
    """Point of R^3 on the surface at ``(theta, phi)``."""
    c = math.cos(theta)
    return (c * math.sin(phi), c * math.cos(phi), surface.height(theta, tol))


def even_part(profile, theta):
    return profile.even_part(theta)


def surface_from_dict(doc):
    profile = ProfileFunction.from_dict(doc)
    return build_surface(profile,
                         grid_n=int(doc.get("grid_n", DEFAULT_GRID_N)),
                         theta_max=float(doc.get("theta_max", DEFAULT_THETA_MAX)))


def load_surface(path):
    with open(Path(path)) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidProfileError(f"{path}: malformed JSON ({exc})") from None
    return surface_from_dict(doc)


def sphere():
    return build_surface(ProfileFunction.zero())
