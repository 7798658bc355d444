"""Carleman sequences: regularity checks and the quasianalyticity test.

A class ``C(m_n)`` is quasianalytic iff ``sum m_n^(-1/n)`` diverges.  All
arithmetic is done on ``log m_n`` since ``n!`` overflows doubles at n = 171.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import InvalidSequenceError

QUASIANALYTIC = "Quasianalytic"
NOT_QUASIANALYTIC = "NotQuasianalytic"
INCONCLUSIVE = "Inconclusive"

POWER_LADDER = (1, 2, 4, 8)
DIVERGENCE_RATIO = 0.9
CONVERGENCE_TAIL = 1e-6


@dataclass(frozen=True)
class CarlemanSequence:
    """``m_n`` for ``n = 1, 2, ...``.

    ``kind`` is ``"factorial"`` (``n!``), ``"gevrey"`` (``n^(s n)``) or
    ``"explicit"`` (given values, ``values[0] = m_1``).
    """

    kind: str
    s: float = 1.0
    values: tuple = field(default=())

    @classmethod
    def factorial(cls):
        return cls("factorial")

    @classmethod
    def gevrey(cls, s):
        if not s > 0:
            raise InvalidSequenceError(f"Gevrey exponent s = {s} must be positive")
        return cls("gevrey", s=float(s))

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(float(v) for v in values))

    @property
    def length(self):
        return len(self.values) if self.kind == "explicit" else math.inf

    def log_terms(self, N):
        """``log m_n`` for ``n = 1..N`` as an array."""
        n = np.arange(1, N + 1, dtype=float)
        if self.kind == "factorial":
            return gammaln(n + 1.0)
        if self.kind == "gevrey":
            return self.s * n * np.log(n)
        if self.kind == "explicit":
            if N > len(self.values):
                raise InvalidSequenceError(
                    f"explicit sequence has {len(self.values)} terms, {N} requested")
            v = np.asarray(self.values[:N])
            if np.any(~(v > 0)):
                raise InvalidSequenceError("sequence terms must be positive")
            return np.log(v)
        raise InvalidSequenceError(f"unknown sequence kind {self.kind!r}")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "gevrey":
            d["s"] = self.s
        if self.kind == "explicit":
            d["values"] = list(self.values)
        return d


def _validated_logs(seq, N):
    logs = seq.log_terms(N)
    if not np.all(np.isfinite(logs)):
        raise InvalidSequenceError("sequence terms must be positive and finite")
    diffs = np.diff(logs)
    if np.any(diffs < 0.0):
        n = int(np.flatnonzero(diffs < 0.0)[0]) + 1
        raise InvalidSequenceError(f"sequence decreases at n = {n}")
    return logs


@dataclass(frozen=True)
class RegularityReport:
    growth_ok: bool
    ratio_ok: bool
    ratio_constant: float | None
    convexity_ok: bool
    convexity_min_second_difference: float
    checked_up_to: int

    @property
    def regular(self):
        return self.growth_ok and self.ratio_ok and self.convexity_ok

    def to_dict(self):
        d = asdict(self)
        d["regular"] = self.regular
        return d


def check_regularity(seq, N=50, tol=1e-9):
    """Finite checks of the three standing conditions on ``m_n``.

    1. growth: ``m_n / n^p`` increases over the last quarter of the range for
       every ``p`` in (1, 2, 4, 8), a finite stand-in for "faster than any
       power";
    2. ratio: the least ``C`` with ``m_{n+1} / m_n <= n C^n`` on the range;
       it fails when that ``C`` is forced up by the tail of the range;
    3. convexity: the second differences of ``log(m_n / n!)`` are at least
       ``-tol`` for ``2 <= n <= N - 1``.
    """
    if N < 4:
        raise ValueError("N must be at least 4")
    logs = _validated_logs(seq, N + 1)
    n = np.arange(1, N + 2, dtype=float)

    tail = slice(max(1, (3 * N) // 4) - 1, N)
    step = np.diff(logs)[tail]
    growth_ok = all(bool(np.all(step > p * np.log1p(1.0 / n[tail])))
                    for p in POWER_LADDER)

    # log C_n = (log(m_{n+1}/m_n) - log n) / n  for n = 1..N
    log_c = (np.diff(logs) - np.log(n[:-1])) / n[:-1]
    c = float(np.exp(np.max(log_c))) if np.max(log_c) < 700 else math.inf
    head_max = np.max(log_c[: max(1, N // 2)])
    ratio_ok = math.isfinite(c) and bool(np.max(log_c[N // 2:]) <= head_max + tol)
    ratio_constant = c if math.isfinite(c) else None

    reduced = logs[:N] - gammaln(n[:N] + 1.0)
    second = reduced[2:] - 2.0 * reduced[1:-1] + reduced[:-2]
    min_second = float(np.min(second))
    return RegularityReport(growth_ok, ratio_ok, ratio_constant, min_second >= -tol,
                            min_second, N)


def _reciprocal_roots(seq, N):
    """``m_n^(-1/n)`` for ``n = 1..N`` from log space."""
    logs = _validated_logs(seq, N)
    n = np.arange(1, N + 1, dtype=float)
    return np.exp(-logs / n)


def quasianalyticity_partial_sums(seq, N=1024):
    """``{k: S_k}`` with ``S_k = sum_{n<=k} m_n^(-1/n)`` at k = N/8, N/4, N/2, N."""
    if N < 16:
        raise ValueError("N must be at least 16")
    cums = np.cumsum(_reciprocal_roots(seq, N))
    ks = (N // 8, N // 4, N // 2, N)
    return {k: float(cums[k - 1]) for k in ks}


def doubling_increments(sums):
    """``S_{2k} - S_k`` for consecutive checkpoints."""
    ks = sorted(sums)
    return [sums[b] - sums[a] for a, b in zip(ks, ks[1:])]


def classify(seq, N=1024):
    """Quasianalyticity of ``C(m_n)``.

    Closed forms decide the built-in families (``(n!)^(-1/n) ~ e/n`` diverges;
    ``n^(-s)`` diverges iff ``s <= 1``).  Explicit sequences are judged from
    the partial sums: doubling increments that hold up (successive ratio above
    0.9) look divergent, a Cauchy tail below 1e-6 looks convergent, anything
    else is inconclusive.
    """
    if seq.kind == "factorial":
        return QUASIANALYTIC
    if seq.kind == "gevrey":
        return QUASIANALYTIC if seq.s <= 1.0 else NOT_QUASIANALYTIC
    N = min(N, len(seq.values))
    N -= N % 8
    sums = quasianalyticity_partial_sums(seq, N)
    inc = doubling_increments(sums)
    if all(b > DIVERGENCE_RATIO * a for a, b in zip(inc, inc[1:])) and inc[-1] > 0:
        return QUASIANALYTIC
    if sums[N] - sums[N // 2] < CONVERGENCE_TAIL:
        return NOT_QUASIANALYTIC
    return INCONCLUSIVE


def report(seq, N=50, sums_N=1024, tol=1e-9):
    """JSON-ready summary used by the command line."""
    reg = check_regularity(seq, N, tol)
    if seq.kind == "explicit":
        sums_N = min(sums_N, len(seq.values))
        sums_N -= sums_N % 8
    sums = quasianalyticity_partial_sums(seq, sums_N)
    return {
        "sequence": seq.to_dict(),
        **reg.to_dict(),
        "partial_sums": {str(k): v for k, v in sums.items()},
        "doubling_increments": doubling_increments(sums),
        "classification": classify(seq, sums_N),
    }
