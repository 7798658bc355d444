import math

import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from revflow.carleman import (INCONCLUSIVE, NOT_QUASIANALYTIC, QUASIANALYTIC,
                              CarlemanSequence, check_regularity, classify,
                              doubling_increments, quasianalyticity_partial_sums,
                              report)
from revflow.errors import InvalidSequenceError

FACT = CarlemanSequence.factorial()


def test_terms_match_definitions():
    logs = FACT.log_terms(10)
    assert logs[4] == pytest.approx(math.log(120.0), rel=1e-15)
    g = CarlemanSequence.gevrey(1.5).log_terms(6)
    assert g[5] == pytest.approx(1.5 * 6 * math.log(6.0), rel=1e-15)


def test_log_space_survives_factorial_overflow():
    logs = FACT.log_terms(2000)
    assert math.isfinite(logs[-1]) and logs[-1] > 700


@pytest.mark.parametrize("seq", [FACT, CarlemanSequence.gevrey(2.0),
                                 CarlemanSequence.gevrey(1.0)])
def test_regular_families(seq):
    rep = check_regularity(seq, 50)
    assert rep.growth_ok and rep.ratio_ok and rep.convexity_ok
    assert rep.regular and rep.checked_up_to == 50
    assert rep.ratio_constant is not None and rep.ratio_constant > 0


def test_decreasing_sequence_rejected():
    with pytest.raises(InvalidSequenceError):
        check_regularity(CarlemanSequence.explicit([1.0 / n for n in range(1, 60)]), 50)


def test_nonpositive_sequence_rejected():
    with pytest.raises(InvalidSequenceError):
        quasianalyticity_partial_sums(CarlemanSequence.explicit([1.0, 0.0] + [2.0] * 30), 16)


def test_short_sequence_and_small_N_rejected():
    with pytest.raises(InvalidSequenceError):
        check_regularity(CarlemanSequence.explicit([1.0, 2.0, 3.0]), 50)
    with pytest.raises(ValueError):
        check_regularity(FACT, 3)
    with pytest.raises(ValueError):
        quasianalyticity_partial_sums(FACT, 8)
    with pytest.raises(InvalidSequenceError):
        CarlemanSequence.gevrey(0.0)


def test_polynomial_sequence_fails_growth():
    rep = check_regularity(CarlemanSequence.explicit([float(n) ** 3 for n in range(1, 80)]), 60)
    assert not rep.growth_ok


def test_superexponential_ratio_fails():
    # m_n = exp(c n^3): m_{n+1}/m_n = exp(3c n^2 + ...) outruns n C^n for any fixed C
    seq = CarlemanSequence.explicit([math.exp(0.01 * n ** 3) for n in range(1, 42)])
    assert seq.length == 41
    assert not check_regularity(seq, 40).ratio_ok


def test_convexity_report_matches_direct_second_difference():
    seq = CarlemanSequence.gevrey(1.3)
    rep = check_regularity(seq, 30)
    vals = [1.3 * n * math.log(n) - math.lgamma(n + 1) for n in range(1, 31)]
    direct = min(vals[i + 1] - 2 * vals[i] + vals[i - 1] for i in range(1, 29))
    assert rep.convexity_min_second_difference == pytest.approx(direct, abs=1e-12)


def test_factorial_partial_sums_match_mpmath():
    # oracle: mpmath high-precision sums of (n!)^(-1/n)
    mp.mp.dps = 30
    sums = quasianalyticity_partial_sums(FACT, 1024)
    terms = [mp.e ** (-mp.loggamma(n + 1) / n) for n in range(1, 1025)]
    for k, v in sums.items():
        assert v == pytest.approx(float(mp.fsum(terms[:k])), rel=1e-12)


def test_factorial_doubling_increments():
    inc = doubling_increments(quasianalyticity_partial_sums(FACT, 1024))
    assert len(inc) == 3
    assert all(d >= 1.5 for d in inc)
    # Stirling: (n!)^(-1/n) ~ e/n, so increments tend to e ln 2
    assert inc[-1] == pytest.approx(math.e * math.log(2.0), abs=0.02)


def test_gevrey_two_bounded_by_basel():
    sums = quasianalyticity_partial_sums(CarlemanSequence.gevrey(2.0), 1024)
    assert max(sums.values()) <= math.pi ** 2 / 6


def test_harmonic_doubling():
    inc = doubling_increments(quasianalyticity_partial_sums(CarlemanSequence.gevrey(1.0), 1024))
    assert all(d >= 0.6 for d in inc)


@pytest.mark.parametrize("seq,expected", [
    (FACT, QUASIANALYTIC),
    (CarlemanSequence.gevrey(1.0), QUASIANALYTIC),
    (CarlemanSequence.gevrey(2.0), NOT_QUASIANALYTIC),
])
def test_classify_built_ins(seq, expected):
    assert classify(seq) == expected


@given(st.floats(0.05, 4.0))
def test_gevrey_flip_at_one(s):
    expected = QUASIANALYTIC if s <= 1.0 else NOT_QUASIANALYTIC
    assert classify(CarlemanSequence.gevrey(s)) == expected


@given(st.floats(1.0, 3.0), st.sampled_from([16, 64, 256]))
def test_partial_sums_nondecreasing(s, N):
    sums = quasianalyticity_partial_sums(CarlemanSequence.gevrey(s), N)
    vals = [sums[k] for k in sorted(sums)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert sorted(sums) == [N // 8, N // 4, N // 2, N]


@given(st.floats(1.0, 3.0), st.integers(8, 200))
def test_regularity_holds_for_gevrey(s, N):
    assert check_regularity(CarlemanSequence.gevrey(s), N).regular


@given(st.integers(8, 400))
def test_regularity_holds_for_factorial(N):
    assert check_regularity(FACT, N).regular


def test_power_ladder_needs_a_long_enough_range():
    # n! only outgrows n^8 from n = 5 on; the finite check reports that honestly
    assert not check_regularity(FACT, 4).growth_ok


def test_explicit_heuristic():
    harmonic_like = CarlemanSequence.explicit([float(n) ** n for n in range(1, 141)])
    assert classify(harmonic_like, 136) == QUASIANALYTIC
    # m_n^(-1/n) = exp(-5 - n): Cauchy tail far below 1e-6
    fast = CarlemanSequence.explicit([math.exp(n * (5 + n)) for n in range(1, 25)])
    assert classify(fast, 24) == NOT_QUASIANALYTIC
    # slowly converging p-series: never a false definitive answer
    slow = CarlemanSequence.explicit([float(n) ** (1.5 * n) for n in range(1, 97)])
    assert classify(slow, 96) == INCONCLUSIVE


def test_report_fields():
    doc = report(CarlemanSequence.gevrey(2.0), 20, 64)
    for key in ("growth_ok", "ratio_constant", "convexity_min_second_difference",
                "checked_up_to", "partial_sums", "classification"):
        assert key in doc
    assert doc["classification"] == NOT_QUASIANALYTIC
