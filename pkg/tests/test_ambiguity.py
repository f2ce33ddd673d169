import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fskjcr.ambiguity import (
    GridPoint,
    complex_af,
    domain_points,
    grid_psl,
    grid_psl_batch,
    grid_psl_counts,
    grid_sidelobe,
    grid_sidelobe_map,
    local_maxima_psl,
    mainlobe_mask,
    pulse_caf,
    sampled_af_surface,
    zero_delay_cut,
    zero_doppler_cut,
)
from fskjcr.core import DomainError, FskWaveform, WaveformSpec, all_freq_sequences
from oracles import brute_psl, quadrature_af


def random_waveform(rng, L, M, T=1.0, phased=True):
    spec = WaveformSpec(L, M, T)
    return FskWaveform(spec, rng.integers(0, M, L), rng.uniform(0, 2 * np.pi, L) if phased else None)


def test_domain_size_and_membership():
    for L, M in [(1, 2), (4, 2), (8, 4), (5, 7)]:
        pts = domain_points(L, M)
        assert len(pts) == L * (2 * M - 1) - 1
        assert GridPoint(0, 0) not in pts
    assert not GridPoint(4, 0).in_domain(4, 2)
    assert not GridPoint(1, 2).in_domain(4, 2)
    assert GridPoint(0, -1).in_domain(4, 2)


def test_pulse_caf_examples():
    T = 2e-3
    assert pulse_caf(0.0, 0.0, T) == pytest.approx(T)
    for r in (1, -2, 3):
        assert abs(pulse_caf(0.0, 2 * np.pi * r / T, T)) < 1e-15
    assert pulse_caf(T / 2, 0.0, T) == pytest.approx(T / 2)
    assert pulse_caf(T, 1.0, T) == 0
    assert pulse_caf(-1.5 * T, 0.0, T) == 0


def test_pulse_caf_matches_exponential_form():
    T = 1.3
    rng = np.random.default_rng(4)
    for _ in range(50):
        tau = rng.uniform(-T, T)
        omega = rng.uniform(-20, 20)
        lo, hi = max(0.0, tau), min(T, T + tau)
        # integral over the overlap of exp(j omega t)
        expected = (np.exp(1j * omega * hi) - np.exp(1j * omega * lo)) / (1j * omega)
        assert abs(pulse_caf(tau, omega, T) - expected) < 1e-12
    assert abs(pulse_caf(0.2, 1e-12, T) - (T - 0.2)) < 1e-12


def test_complex_af_origin_and_support():
    rng = np.random.default_rng(0)
    wf = random_waveform(rng, 6, 3, T=1e-3)
    assert abs(complex_af(wf, 0.0, 0.0) - 1.0) < 1e-12
    for tau in (6e-3, -6e-3, 7.5e-3):
        assert complex_af(wf, tau, 123.0) == 0


def test_complex_af_matches_quadrature():
    rng = np.random.default_rng(7)
    spec_T = 1e-3
    for _ in range(3):
        wf = random_waveform(rng, 5, 4, T=spec_T)
        for _ in range(25):
            tau = rng.uniform(-5 * spec_T, 5 * spec_T)
            omega = rng.uniform(-2 * np.pi * 5 / spec_T, 2 * np.pi * 5 / spec_T)
            assert abs(complex_af(wf, tau, omega) - quadrature_af(wf, tau, omega)) < 1e-6


def test_af_bounded_by_one():
    rng = np.random.default_rng(2)
    wf = random_waveform(rng, 8, 4)
    taus = rng.uniform(-8, 8, 400)
    omegas = rng.uniform(-30, 30, 400)
    assert np.all(np.abs(complex_af(wf, taus, omegas)) <= 1 + 1e-12)


def test_zero_doppler_cut_single_pulse_triangle():
    wf = FskWaveform(WaveformSpec(1, 2, 2.0), [1])
    taus = np.linspace(-2.5, 2.5, 41)
    assert np.allclose(zero_doppler_cut(wf, taus), np.clip((2.0 - np.abs(taus)) / 2.0, 0, None), atol=1e-12)
    assert zero_doppler_cut(wf, [0.0])[0] == pytest.approx(1.0)


def test_zero_delay_cut_examples():
    spec = WaveformSpec(6, 4, 1e-3)
    assert zero_delay_cut(spec, [0.0])[0] == pytest.approx(1.0)
    q = np.array([1, 2, 3, 5, 7, 8, 11])
    omegas = 2 * np.pi * spec.freq_step / spec.L * q
    assert np.all(zero_delay_cut(spec, omegas) < 1e-12)


def test_zero_delay_cut_is_sequence_independent():
    spec = WaveformSpec(5, 4)
    rng = np.random.default_rng(3)
    omegas = rng.uniform(-25, 25, 50)
    cut = zero_delay_cut(spec, omegas)
    for _ in range(3):
        wf = FskWaveform(spec, rng.integers(0, 4, 5))
        assert np.allclose(np.abs(complex_af(wf, 0.0, omegas)), cut, atol=1e-12)


def test_grid_sidelobe_examples():
    spec = WaveformSpec(2, 2)
    assert grid_sidelobe(FskWaveform(spec, [0, 0]), (1, 0)) == 0.5
    wf = FskWaveform(spec, [0, 1])
    assert grid_sidelobe(wf, 1, -1) == 0.5
    assert grid_sidelobe(wf, 1, 0) == 0
    assert grid_sidelobe(FskWaveform(spec, [0, 0], [0, np.pi]), 1, 0) == pytest.approx(0.5)
    assert grid_sidelobe(wf, 0, 0) == 1.0
    with pytest.raises(DomainError):
        grid_sidelobe(wf, 2, 0)
    with pytest.raises(DomainError):
        grid_sidelobe(wf, 1, 2)


def test_grid_sidelobe_equals_af_at_lattice_points():
    rng = np.random.default_rng(11)
    for phased in (False, True):
        wf = random_waveform(rng, 7, 3, T=2e-3, phased=phased)
        spec = wf.spec
        for p in domain_points(7, 3):
            af = abs(complex_af(wf, p.k * spec.T, 2 * np.pi * p.r * spec.freq_step))
            assert abs(af - grid_sidelobe(wf, p)) < 1e-9


def test_grid_sidelobe_map_examples():
    spec = WaveformSpec(4, 2)
    psls = {grid_psl(FskWaveform.from_index(spec, i)) for i in range(16)}
    assert psls <= {0.25, 0.5, 0.75}
    rng = np.random.default_rng(5)
    m = grid_sidelobe_map(random_waveform(rng, 6, 3))
    assert set(m.values) == set(domain_points(6, 3))
    assert all(m.values[GridPoint(0, r)] == 0 for r in (-2, -1, 1, 2))
    assert all(0 <= v <= 1 for v in m.values.values())
    const = grid_sidelobe_map(FskWaveform(WaveformSpec(5, 3), [2] * 5))
    assert all(const.values[GridPoint(k, 0)] == pytest.approx((5 - k) / 5) for k in range(1, 5))
    assert const.psl == pytest.approx(0.8)
    assert const.argmax == GridPoint(1, 0)


def test_grid_psl_bounds_and_batch_consistency():
    rng = np.random.default_rng(9)
    L, M = 9, 3
    freq = rng.integers(0, M, (40, L))
    phases = rng.uniform(0, 2 * np.pi, (40, L))
    batch = grid_psl_batch(freq, phases, M)
    counts = grid_psl_counts(freq, M)
    for i in range(40):
        wf = FskWaveform(WaveformSpec(L, M), freq[i], phases[i])
        assert batch[i] == pytest.approx(grid_psl(wf), abs=1e-12)
        assert batch[i] == pytest.approx(brute_psl(freq[i], phases[i], M), abs=1e-12)
        assert counts[i] / L == grid_psl(wf.with_phases(None))
        assert 0 <= grid_psl(wf) <= (L - 1) / L + 1e-12


def test_grid_psl_counts_exhaustive_small():
    F = all_freq_sequences(4, 2)
    counts = grid_psl_counts(F, 2)
    assert all(counts[i] == round(4 * brute_psl(F[i], np.zeros(4), 2)) for i in range(16))


def test_surface_lattice_origin_symmetry():
    rng = np.random.default_rng(21)
    wf = random_waveform(rng, 6, 3, T=1e-3)
    surface = sampled_af_surface(wf, 8)
    spec = wf.spec
    assert surface.nearest(0.0, 0.0) == pytest.approx(1.0, abs=1e-9)
    for p in domain_points(6, 3):
        tau, omega = p.k * spec.T, 2 * np.pi * p.r * spec.freq_step
        assert abs(surface.nearest(tau, omega) - grid_sidelobe(wf, p)) < 1e-9
        assert abs(surface.nearest(-tau, -omega) - grid_sidelobe(wf, p)) < 1e-9
    n_tau, n_omega = surface.magnitude.shape
    i = rng.integers(0, n_tau, 100)
    j = rng.integers(0, n_omega, 100)
    assert np.max(np.abs(surface.magnitude[i, j] - surface.magnitude[n_tau - 1 - i, n_omega - 1 - j])) < 1e-9
    direct = np.abs(complex_af(wf, surface.delays[i], surface.dopplers[j]))
    assert np.max(np.abs(surface.magnitude[i, j] - direct)) < 1e-12


def test_surface_axes_and_errors(tmp_path):
    wf = FskWaveform(WaveformSpec(3, 2, 0.5), [0, 1, 1])
    surface = sampled_af_surface(wf, 4)
    assert surface.delays[0] == pytest.approx(-1.5) and surface.delays[-1] == pytest.approx(1.5)
    assert surface.dopplers[-1] == pytest.approx(2 * np.pi * 2 * 2.0)
    with pytest.raises(DomainError):
        sampled_af_surface(wf, 3)
    with pytest.raises(DomainError):
        local_maxima_psl(surface)
    path = surface.to_csv(tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "tau_seconds,omega_rad_per_s,magnitude"
    assert len(lines) == 1 + surface.magnitude.size


def test_mainlobe_mask_region():
    wf = FskWaveform(WaveformSpec(3, 2), [0, 1, 0])
    surface = sampled_af_surface(wf, 8)
    mask = mainlobe_mask(surface)
    tau, omega = np.meshgrid(surface.delays, surface.dopplers, indexing="ij")
    expected = (np.abs(tau) < 1 - 1e-9) & (np.abs(omega) < 2 * np.pi - 1e-9)
    assert np.array_equal(mask, expected)


def test_local_maxima_constant_frequency():
    L = 6
    wf = FskWaveform(WaveformSpec(L, 3), [1] * L)
    psl = local_maxima_psl(sampled_af_surface(wf, 16))
    assert psl == pytest.approx((L - 1) / L, abs=1e-9)


def test_local_maxima_at_least_grid_psl():
    rng = np.random.default_rng(17)
    os_ = 8
    for _ in range(100):
        L = int(rng.integers(2, 9))
        M = int(rng.integers(2, 5))
        wf = random_waveform(rng, L, M, phased=bool(rng.integers(0, 2)))
        assert local_maxima_psl(sampled_af_surface(wf, os_)) >= grid_psl(wf) - 1 / (L * os_)


@settings(max_examples=25, deadline=None)
@given(L=st.integers(1, 6), M=st.integers(2, 4), seed=st.integers(0, 10 ** 6))
def test_surface_symmetry_property(L, M, seed):
    wf = random_waveform(np.random.default_rng(seed), L, M)
    mag = sampled_af_surface(wf, 4).magnitude
    assert np.array_equal(mag, mag[::-1, ::-1])
    assert mag.max() <= 1 + 1e-12
