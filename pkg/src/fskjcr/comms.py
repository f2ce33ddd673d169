"""Statistic-level simulation of the FSK communications link.

The receiver front end is represented by the M x L bank of matched
correlator outputs ``y[m, l]``. With maximum-ratio combining over ``N``
antennas, ``y[m, l] = mu[m, l] + n[m, l]`` where ``mu`` is
``sqrt(1/L) * ||h||^2 * exp(j theta_l)`` at the transmitted tone of
sub-pulse ``l`` and zero elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from ._io import write_csv
from ._parallel import block_rng, block_sizes
from .core import DomainError, FskWaveform, WaveformSpec, index_to_freq_sequence

DETECTORS = ("coherent-before", "noncoherent-before", "noncoherent-after", "joint-ml-after")
JOINT_ML_BITS = 24
WAVEFORMS_PER_BLOCK = 4096


@dataclass(frozen=True)
class ChannelModel:
    variant: str = "awgn"
    num_rx_antennas: int = 1
    rician_k: float = 1.0

    def __post_init__(self):
        if self.variant not in ("awgn", "rician"):
            raise DomainError("variant must be 'awgn' or 'rician'")
        if int(self.num_rx_antennas) != self.num_rx_antennas or self.num_rx_antennas < 1:
            raise DomainError("num_rx_antennas must be a positive integer")
        if not self.rician_k >= 0:
            raise DomainError("rician_k must be >= 0")

    @property
    def N(self) -> int:
        return int(self.num_rx_antennas)

    @property
    def mean_energy(self) -> float:
        """E[||h||^2], equal to N for both variants."""
        return float(self.N)


def draw_channel(model: ChannelModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Channel vector(s) of length N; ``size`` adds a leading batch axis."""
    shape = (model.N,) if size is None else (int(size), model.N)
    if model.variant == "awgn" or np.isinf(model.rician_k):
        return np.ones(shape, dtype=complex)
    K = float(model.rician_k)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return math.sqrt(K / (K + 1)) + math.sqrt(1 / (K + 1)) * g


def noise_psd(snr_db: float, model: ChannelModel) -> float:
    """N0 for which the average per-symbol correlator SNR equals ``snr_db``."""
    return model.mean_energy / 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class CorrelatorBank:
    y: np.ndarray
    channel_energy: float
    noise_psd: float

    @property
    def M(self) -> int:
        return self.y.shape[0]

    @property
    def L(self) -> int:
        return self.y.shape[1]

    @property
    def amplitude(self) -> float:
        return math.sqrt(1.0 / self.L) * self.channel_energy

    @property
    def noise_variance(self) -> float:
        return self.channel_energy * self.noise_psd / self.L


def _means(freq: np.ndarray, phases: np.ndarray, amp: np.ndarray, M: int) -> np.ndarray:
    """Noise-free bank(s) for batched ``freq``/``phases`` of shape (n, L)."""
    n, L = freq.shape
    mu = np.zeros((n, M, L), dtype=complex)
    np.put_along_axis(mu, freq[:, None, :], (amp[:, None] * np.exp(1j * phases))[:, None, :], axis=1)
    return mu


def correlator_bank(waveform: FskWaveform, h, snr_db: float, rng: np.random.Generator | None = None) -> CorrelatorBank:
    """Correlator outputs for one waveform; ``snr_db=inf`` gives the noise-free bank.

    Noise in column ``l`` is a standard draw rotated by ``exp(j theta_l)``, so
    magnitudes do not depend on the phases for a fixed stream.
    """
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    energy = float(np.sum(np.abs(h) ** 2))
    L, M = waveform.spec.L, waveform.spec.M
    model = ChannelModel("awgn", len(h))
    n0 = 0.0 if np.isinf(snr_db) else noise_psd(snr_db, model)
    mu = _means(waveform.freq_indices[None, :], waveform.phases[None, :], np.array([math.sqrt(1.0 / L) * energy]), M)[0]
    if n0 > 0:
        if rng is None:
            raise DomainError("a random generator is required for a noisy bank")
        std = math.sqrt(energy * n0 / L / 2.0)
        base = (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))) * std
        mu = mu + base * np.exp(1j * waveform.phases)[None, :]
    return CorrelatorBank(mu, energy, n0)


def _coherent(y: np.ndarray) -> np.ndarray:
    return np.argmax(y.real, axis=-2)


def _noncoherent(y: np.ndarray) -> np.ndarray:
    return np.argmax(np.abs(y), axis=-2)


def _pick(decisions: np.ndarray, l):
    return decisions if l is None else int(decisions[l])


def detect_coherent(bank: CorrelatorBank, l: int | None = None):
    """Per-symbol argmax of Re y; all L decisions when ``l`` is None."""
    return _pick(_coherent(bank.y), l)


def detect_noncoherent(bank: CorrelatorBank, l: int | None = None):
    """Per-symbol argmax of |y|; all L decisions when ``l`` is None."""
    return _pick(_noncoherent(bank.y), l)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Every waveform of a family with its phases, row ``i`` being waveform ``i``."""

    M: int
    freq: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_phase_table(cls, spec: WaveformSpec, table: dict) -> "Codebook":
        if spec.L * math.log2(spec.M) > JOINT_ML_BITS:
            raise DomainError("joint ML is limited to L*log2(M) <= 24 bits; use detect_noncoherent")
        missing = [i for i in range(spec.num_waveforms) if i not in table]
        if missing:
            raise DomainError(f"joint ML needs phases for all {spec.num_waveforms} waveforms ({len(missing)} missing)")
        freq = np.array([index_to_freq_sequence(spec, i) for i in range(spec.num_waveforms)])
        phases = np.array([np.asarray(table[i], dtype=float) for i in range(spec.num_waveforms)])
        return cls(spec.M, freq, phases)

    def __len__(self):
        return len(self.freq)


def _joint_ml(y: np.ndarray, amp: np.ndarray, var: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Batched joint ML decisions for ``y`` of shape (n, M, L)."""
    n, M, L = y.shape
    cols = np.arange(L)
    out = np.empty((n, L), dtype=np.int64)
    # the energy terms of |y - mu|^2 are common to all hypotheses
    chunk = max(1, 2 ** 22 // (len(codebook) * L))
    rot = np.exp(-1j * codebook.phases)
    for s in range(0, n, chunk):
        e = slice(s, s + chunk)
        corr = np.einsum("nil,il->ni", y[e][:, codebook.freq, cols], rot)
        loglik = 2.0 * (amp[e] / var[e])[:, None] * corr.real
        for l in range(L):
            scores = np.stack(
                [special.logsumexp(loglik[:, codebook.freq[:, l] == k], axis=1) for k in range(M)], axis=1
            )
            out[e, l] = np.argmax(scores, axis=1)
    return out


def detect_joint_ml(bank: CorrelatorBank, codebook: Codebook, l: int | None = None):
    """Symbol decisions marginalizing over all codebook waveforms consistent with each hypothesis."""
    if codebook.freq.shape[1] != bank.L or codebook.M != bank.M:
        raise DomainError("codebook does not match the bank dimensions")
    if bank.noise_psd == 0:
        # noise-free limit: the closest codeword decides
        dist = np.sum(np.abs(bank.y[codebook.freq, np.arange(bank.L)] - bank.amplitude * np.exp(1j * codebook.phases)) ** 2, axis=1)
        return _pick(codebook.freq[int(np.argmin(dist))], l)
    decisions = _joint_ml(bank.y[None], np.array([bank.amplitude]), np.array([bank.noise_variance]), codebook)[0]
    return _pick(decisions, l)


@dataclass(frozen=True, eq=False)
class SerCurve:
    snr_db: np.ndarray
    trials: np.ndarray
    errors: np.ndarray

    @property
    def ser(self) -> np.ndarray:
        return self.errors / self.trials

    @property
    def ci95(self) -> np.ndarray:
        """Wilson score half-widths of the 95% interval."""
        z = stats.norm.ppf(0.975)
        n, p = self.trials.astype(float), self.ser
        return z / (1 + z * z / n) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))

    def to_csv(self, path):
        return write_csv(path, ["snr_db", "trials", "errors", "ser", "ci95"],
                         [self.snr_db, self.trials, self.errors, self.ser, self.ci95])


def _draw_block(spec: WaveformSpec, model: ChannelModel, rng, size: int, table_keys, table_phases):
    h = draw_channel(model, rng, size)
    if table_keys is None:
        freq = rng.integers(0, spec.M, size=(size, spec.L))
        phases = np.zeros((size, spec.L))
    else:
        pick = rng.integers(0, len(table_keys), size=size)
        freq = table_keys[pick]
        phases = table_phases[pick]
    base = rng.standard_normal((size, spec.M, spec.L)) + 1j * rng.standard_normal((size, spec.M, spec.L))
    return h, freq, phases, base


def simulate_ser(spec: WaveformSpec, detector: str, model: ChannelModel, snr_db, trials: int, seed: int = 0,
                 phase_table: dict | None = None) -> SerCurve:
    """Monte Carlo SER over an SNR grid.

    ``trials`` counts symbol decisions and is rounded up to whole waveforms.
    The ``*-before`` detectors draw waveforms uniformly with zero phases; the
    ``*-after`` detectors draw uniformly among the waveforms of
    ``phase_table`` and transmit them with their phases. Block ``b`` at SNR
    index ``s`` uses the substream ``(seed, s, b)``.
    """
    if detector not in DETECTORS:
        raise DomainError(f"detector must be one of {DETECTORS}")
    if trials < 1000:
        raise DomainError("at least 1000 trials are required")
    keys = phases = codebook = None
    if detector.endswith("after"):
        if not phase_table:
            raise DomainError(f"detector {detector!r} needs a phase table")
        order = sorted(phase_table)
        keys = np.array([index_to_freq_sequence(spec, i) for i in order])
        phases = np.array([np.asarray(phase_table[i], dtype=float) for i in order])
        if detector == "joint-ml-after":
            codebook = Codebook.from_phase_table(spec, phase_table)
    n_waveforms = -(-int(trials) // spec.L)
    snrs = np.atleast_1d(np.asarray(snr_db, dtype=float))
    errors = np.zeros(len(snrs), dtype=np.int64)
    for s, snr in enumerate(snrs):
        n0 = noise_psd(snr, model)
        for b, size in enumerate(block_sizes(n_waveforms, WAVEFORMS_PER_BLOCK)):
            h, freq, ph, base = _draw_block(spec, model, block_rng(seed, s, b), size, keys, phases)
            energy = np.sum(np.abs(h) ** 2, axis=1)
            amp = math.sqrt(1.0 / spec.L) * energy
            var = energy * n0 / spec.L
            y = _means(freq, ph, amp, spec.M) + base * np.sqrt(var / 2.0)[:, None, None] * np.exp(1j * ph)[:, None, :]
            if detector == "coherent-before":
                dec = _coherent(y)
            elif detector == "joint-ml-after":
                dec = _joint_ml(y, amp, var, codebook)
            else:
                dec = _noncoherent(y)
            errors[s] += int(np.count_nonzero(dec != freq))
    return SerCurve(snrs, np.full(len(snrs), n_waveforms * spec.L, dtype=np.int64), errors)


def coherent_fsk_ser(M: int, snr_db) -> np.ndarray:
    """Closed-form SER of coherent orthogonal M-FSK in AWGN at per-symbol SNR."""
    gammas = 10.0 ** (np.atleast_1d(np.asarray(snr_db, dtype=float)) / 10.0)
    if M == 2:
        return stats.norm.sf(np.sqrt(gammas))
    out = []
    for g in gammas:
        shift = math.sqrt(2 * g)
        correct, _ = integrate.quad(lambda x: stats.norm.pdf(x) * stats.norm.cdf(x + shift) ** (M - 1), -np.inf, np.inf)
        out.append(1.0 - correct)
    return np.array(out)


def noncoherent_fsk_ser(M: int, snr_db) -> np.ndarray:
    """Closed-form SER of non-coherent orthogonal M-FSK in AWGN at per-symbol SNR."""
    gammas = 10.0 ** (np.atleast_1d(np.asarray(snr_db, dtype=float)) / 10.0)
    total = np.zeros_like(gammas)
    for k in range(1, M):
        total += (-1) ** (k + 1) * math.comb(M - 1, k) / (k + 1) * np.exp(-k * gammas / (k + 1))
    return total


def snr_at_ser(curve: SerCurve, target: float) -> float:
    """SNR where the curve first falls to ``target``, by log-linear interpolation; NaN if never bracketed."""
    ser = curve.ser
    for i in range(len(ser) - 1):
        a, b = ser[i], ser[i + 1]
        if a >= target > b or a > target >= b:
            if b <= 0:
                return float("nan")
            la, lb, lt = np.log10(a), np.log10(b), np.log10(target)
            return float(curve.snr_db[i] + (la - lt) / (la - lb) * (curve.snr_db[i + 1] - curve.snr_db[i]))
    return float("nan")


def snr_gap(worse: SerCurve, better: SerCurve, target: float) -> float:
    """Extra SNR (dB) ``worse`` needs over ``better`` to reach SER ``target``."""
    return snr_at_ser(worse, target) - snr_at_ser(better, target)
