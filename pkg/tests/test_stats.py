from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fskjcr.ambiguity import domain_points
from fskjcr.stats import (
    BudgetExceeded,
    DiscreteDistribution,
    approx_psl_cdf,
    exhaustive_psl_cdf,
    horizontal_gap,
    monte_carlo_psl_cdf,
    sl_correlation_empirical,
    sl_correlation_printed,
    sl_correlation_symmetric,
    sl_mean,
    sl_pmf,
    wasserstein1,
    wasserstein_report,
)
from fskjcr.core import DomainError, all_freq_sequences
from oracles import sidelobe_tally


def exact_tally(L, M, k, r):
    counts = sidelobe_tally(L, M, k, r)
    return tuple(Fraction(int(c), M ** L) for c in counts)


def test_distribution_validation():
    with pytest.raises(DomainError):
        DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
    with pytest.raises(DomainError):
        DiscreteDistribution(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        DiscreteDistribution.from_cdf([0, 1], [0.6, 0.5])
    d = DiscreteDistribution.from_samples([0.5, 0.25, 0.5, 1.0])
    assert d.support.tolist() == [0.25, 0.5, 1.0]
    assert d.cdf.tolist() == [0.25, 0.75, 1.0]
    assert d.mean == pytest.approx(0.5625)
    assert d.quantile([0.1, 0.5, 0.8]).tolist() == [0.25, 0.5, 1.0]


def test_sl_pmf_single_trial():
    d = sl_pmf(4, 2, 3, 1)
    assert d.exact[:2] == (Fraction(3, 4), Fraction(1, 4))
    assert d.pmf[0] == 0.75 and d.pmf[1] == 0.25
    assert d.support.tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_sl_pmf_matches_tally_example():
    assert sl_pmf(4, 2, 1, 0).exact == exact_tally(4, 2, 1, 0)


@pytest.mark.parametrize("L,M", [(4, 2), (5, 3), (8, 4), (7, 2)])
def test_sl_pmf_sums_to_one(L, M):
    for p in domain_points(L, M):
        for mode in ("exact", "literal"):
            d = sl_pmf(L, M, p.k, p.r, k0_mode=mode)
            assert sum(d.exact) == 1
            assert abs(d.pmf.sum() - 1) < 1e-12


def test_sl_pmf_domain_errors():
    with pytest.raises(DomainError):
        sl_pmf(4, 2, 4, 0)
    with pytest.raises(DomainError):
        sl_pmf(4, 2, 1, 2)
    with pytest.raises(DomainError):
        sl_pmf(4, 2, 0, 0)
    with pytest.raises(DomainError):
        sl_pmf(4, 2, 1, 0, k0_mode="other")


def test_binomial_single_trial_and_literal_k0():
    assert sl_pmf(4, 2, 3, 1, method="binomial").exact == sl_pmf(4, 2, 3, 1).exact
    assert sl_pmf(5, 3, 2, 1, method="binomial").exact[1] == 3 * Fraction(2, 9) * Fraction(7, 9) ** 2


def test_k0_modes():
    assert sl_pmf(4, 3, 0, 1).exact[0] == 1
    literal = sl_pmf(4, 3, 0, 1, k0_mode="literal")
    assert literal.exact[1] == 4 * Fraction(2, 9) * Fraction(7, 9) ** 3


@pytest.mark.parametrize("L,M", [(2, 2), (3, 3), (4, 4), (6, 2), (8, 2), (8, 4)])
def test_exact_method_equals_exhaustive_tally(L, M):
    for p in domain_points(L, M):
        if p.k >= 1:
            assert sl_pmf(L, M, p.k, p.r, method="exact").exact == exact_tally(L, M, p.k, p.r)


@pytest.mark.parametrize("L,M", [(4, 2), (6, 3), (8, 4)])
def test_binomial_law_exact_without_shared_tones(L, M):
    # matches at (k, r) share a tone only when 2k < L, or when r = 0
    for p in domain_points(L, M):
        if p.k >= 1 and (2 * p.k >= L or p.r == 0):
            assert sl_pmf(L, M, p.k, p.r, method="binomial").exact == exact_tally(L, M, p.k, p.r)


def test_binomial_law_inexact_for_chained_nonzero_doppler():
    # X(l) and X(l+k) share f[l]; both equal one only if f[l-k] = f[l] + r = f[l+k] + 2r
    assert sl_pmf(3, 2, 1, 1, method="binomial").exact != exact_tally(3, 2, 1, 1)
    assert sl_pmf(3, 2, 1, 1).exact == exact_tally(3, 2, 1, 1)


def test_sl_mean_monotone():
    L, M = 8, 4
    for p in domain_points(L, M):
        if p.k >= 1:
            d = sl_pmf(L, M, p.k, p.r)
            assert d.mean == pytest.approx(sl_mean(L, M, p.k, p.r))
            assert d.mean == pytest.approx(sl_pmf(L, M, p.k, p.r, method="binomial").mean)
            if p.k + 1 < L:
                assert sl_pmf(L, M, p.k + 1, p.r).mean < d.mean
            if abs(p.r) + 1 < M:
                assert sl_pmf(L, M, p.k, abs(p.r) + 1).mean < d.mean


def test_correlation_printed_examples():
    assert sl_correlation_printed(8, 4, 1, 0, 2, 1) == 0
    assert sl_correlation_printed(8, 2, 3, 0, 3, 1) == pytest.approx(-1.0)
    assert sl_correlation_printed(8, 4, 2, 0, 2, -3) == pytest.approx(-1 / 3)
    with pytest.raises(DomainError):
        sl_correlation_printed(8, 4, 1, 1, 1, 1)
    assert sl_correlation_symmetric(8, 4, 1, 0, 1, 0 + 1) == pytest.approx(-np.sqrt(0.25 * 0.1875 / (0.75 * 0.8125)))


def test_correlation_empirical_cross_delay_is_zero():
    rep = sl_correlation_empirical(8, 4, 1, 0, 3, 2, samples=40000, seed=3)
    assert abs(rep.empirical_value) < 3 * rep.standard_error
    assert rep.printed_formula_value == 0 and rep.samples == 40000


def test_correlation_empirical_same_delay_reports_both_formulas():
    rep = sl_correlation_empirical(8, 4, 1, 0, 1, 1, samples=10 ** 5, seed=0)
    assert rep.printed_formula_value == pytest.approx(-1 / 3)
    assert rep.symmetric_formula_value == pytest.approx(-0.27735, abs=1e-5)
    assert -1 <= rep.empirical_value <= 0
    # the sample lies closer to the symmetric form than to the printed one
    assert abs(rep.empirical_value - rep.symmetric_formula_value) < abs(rep.empirical_value - rep.printed_formula_value)


def test_correlation_self_diagnostic():
    rep = sl_correlation_empirical(6, 3, 2, 1, 2, 1, samples=10 ** 4, diagnostic=True)
    assert rep.empirical_value == pytest.approx(1.0)
    with pytest.raises(DomainError):
        sl_correlation_empirical(6, 3, 2, 1, 2, 1, samples=10 ** 4)
    with pytest.raises(DomainError):
        sl_correlation_empirical(6, 3, 2, 1, 1, 1, samples=100)


@pytest.mark.parametrize("mode", ["exact", "literal"])
@pytest.mark.parametrize("L,M", [(2, 2), (4, 4), (8, 2), (16, 8)])
def test_approx_cdf_shape(L, M, mode):
    d = approx_psl_cdf(L, M, mode)
    cdf = d.cdf
    assert np.all(np.diff(cdf) >= 0)
    if mode == "exact":
        assert cdf[L - 1] == pytest.approx(1.0)
    else:
        # the binomial law at k = 0 has L trials and so reaches the value 1
        assert cdf[L - 1] < 1.0
    assert cdf[-1] == 1.0
    assert d.lattice == L


def test_approx_cdf_requires_two_subpulses():
    with pytest.raises(DomainError):
        approx_psl_cdf(1, 4)


def test_exhaustive_small_cases():
    d = exhaustive_psl_cdf(2, 2)
    assert d.exact[1] == 1 and d.cdf_at(0.5) == 1.0 and d.cdf_at(0.49) == 0.0
    d = exhaustive_psl_cdf(4, 2)
    assert d.count == 16 and d.cdf[-1] == 1
    assert set(np.flatnonzero(d.pmf)) <= {1, 2, 3}


def test_exhaustive_chunking_is_exact():
    a = exhaustive_psl_cdf(6, 3)
    b = exhaustive_psl_cdf(6, 3, chunk=37)
    assert a.exact == b.exact


def test_exhaustive_with_phase_table():
    F = all_freq_sequences(3, 2)
    table = np.zeros((8, 3))
    a = exhaustive_psl_cdf(3, 2)
    b = exhaustive_psl_cdf(3, 2, phase_table=table)
    assert wasserstein1(a, b) == 0
    rng = np.random.default_rng(0)
    phased = {i: rng.uniform(0, 6, 3) for i in range(8)}
    c = exhaustive_psl_cdf(3, 2, phase_table=phased)
    assert c.count == len(F)


def test_exhaustive_budget():
    with pytest.raises(BudgetExceeded, match="monte_carlo"):
        exhaustive_psl_cdf(16, 8)
    with pytest.raises(BudgetExceeded):
        exhaustive_psl_cdf(4, 4, budget=255)


def test_monte_carlo_deterministic_and_convergent():
    a = monte_carlo_psl_cdf(4, 4, 5000, seed=9)
    b = monte_carlo_psl_cdf(4, 4, 5000, seed=9)
    assert a.exact == b.exact
    big = monte_carlo_psl_cdf(4, 4, 10 ** 5, seed=1)
    assert wasserstein1(big, exhaustive_psl_cdf(4, 4)) < 0.01
    with pytest.raises(DomainError):
        monte_carlo_psl_cdf(4, 4, 999)


def test_monte_carlo_worker_count_independent():
    a = monte_carlo_psl_cdf(6, 3, 4000, seed=2, block_size=1000, n_jobs=1)
    b = monte_carlo_psl_cdf(6, 3, 4000, seed=2, block_size=1000, n_jobs=2)
    assert a.exact == b.exact


def test_monte_carlo_with_phases_and_local_maxima():
    zero = monte_carlo_psl_cdf(5, 2, 1000, seed=4)
    phased = monte_carlo_psl_cdf(5, 2, 1000, seed=4, phase_fn=lambda f: np.zeros(f.shape))
    assert wasserstein1(zero, phased) == pytest.approx(0, abs=1e-15)
    lm = monte_carlo_psl_cdf(5, 2, 1000, seed=4, kind="local-maxima", oversampling=8)
    assert lm.mean >= zero.mean - 1 / 40


def test_wasserstein_examples():
    zero, one = DiscreteDistribution.point_mass(0.0), DiscreteDistribution.point_mass(1.0)
    assert wasserstein1(zero, one) == 1.0
    assert wasserstein1(DiscreteDistribution.point_mass(0.25), DiscreteDistribution.point_mass(0.75)) == 0.5
    d = approx_psl_cdf(6, 3)
    assert wasserstein1(d, d) == 0.0
    with pytest.raises(DomainError):
        wasserstein1(d, np.array([0.5]))


def _random_dist(data):
    n = data.draw(st.integers(1, 6))
    support = sorted(set(data.draw(st.lists(st.integers(0, 16), min_size=n, max_size=n))))
    weights = data.draw(st.lists(st.integers(1, 9), min_size=len(support), max_size=len(support)))
    return DiscreteDistribution(np.array(support) / 16, np.array(weights) / sum(weights))


@settings(max_examples=80, deadline=None)
@given(data=st.data())
def test_wasserstein_symmetry_and_triangle(data):
    a, b, c = _random_dist(data), _random_dist(data), _random_dist(data)
    ab = wasserstein1(a, b)
    assert ab >= 0
    assert ab == pytest.approx(wasserstein1(b, a), abs=1e-15)
    assert ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-12
    assert horizontal_gap(a, a) == 0


def test_horizontal_gap_examples():
    a = DiscreteDistribution.from_samples([0.25, 0.5])
    b = DiscreteDistribution.from_samples([0.25, 0.75])
    assert horizontal_gap(a, b) == 0.25
    assert horizontal_gap(DiscreteDistribution.point_mass(0.1), DiscreteDistribution.point_mass(0.4)) == pytest.approx(0.3)


@pytest.mark.parametrize("L,M", [(4, 4), (4, 8), (8, 4), (4, 16), (4, 32)])
def test_approximation_close_to_exhaustive(L, M):
    assert wasserstein1(approx_psl_cdf(L, M), exhaustive_psl_cdf(L, M)) <= 0.07


def test_exports(tmp_path):
    d = approx_psl_cdf(4, 2)
    lines = d.to_csv(tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "value,probability" and len(lines) == 6
    lines = d.to_csv(tmp_path / "c.csv", "cdf").read_text().splitlines()
    assert lines[0] == "value,cdf" and lines[-1].endswith(",1")
    with pytest.raises(ValueError):
        d.to_csv(tmp_path / "x.csv", "other")
    report = wasserstein_report(exhaustive_psl_cdf(3, 2), d, tmp_path / "w.json")
    assert report["n1"] == 8 and report["n2"] == 0
    assert '"w1"' in (tmp_path / "w.json").read_text()
