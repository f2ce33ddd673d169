"""Waveform families, concrete FSK waveforms, the index codec and envelope sampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class WaveformSpec:
    """Static parameters of an M-ary FSK waveform family.

    Parameters
    ----------
    num_subpulses : int
        Number of sub-pulses ``L``.
    mod_order : int
        FSK modulation order ``M``.
    subpulse_duration : float
        Sub-pulse duration ``T`` in seconds.
    freq_step_multiple : int
        Non-zero integer ``i`` with frequency spacing ``i / T``.
    """

    num_subpulses: int
    mod_order: int
    subpulse_duration: float = 1.0
    freq_step_multiple: int = 1

    def __post_init__(self):
        if int(self.num_subpulses) != self.num_subpulses or self.num_subpulses < 1:
            raise DomainError(f"num_subpulses must be a positive integer, got {self.num_subpulses}")
        if int(self.mod_order) != self.mod_order or self.mod_order < 2:
            raise DomainError(f"mod_order must be an integer >= 2, got {self.mod_order}")
        if not self.subpulse_duration > 0:
            raise DomainError(f"subpulse_duration must be positive, got {self.subpulse_duration}")
        if int(self.freq_step_multiple) != self.freq_step_multiple or self.freq_step_multiple == 0:
            raise DomainError(f"freq_step_multiple must be a non-zero integer, got {self.freq_step_multiple}")
        object.__setattr__(self, "num_subpulses", int(self.num_subpulses))
        object.__setattr__(self, "mod_order", int(self.mod_order))
        object.__setattr__(self, "freq_step_multiple", int(self.freq_step_multiple))
        object.__setattr__(self, "subpulse_duration", float(self.subpulse_duration))

    @property
    def L(self) -> int:
        return self.num_subpulses

    @property
    def M(self) -> int:
        return self.mod_order

    @property
    def T(self) -> float:
        return self.subpulse_duration

    @property
    def freq_step(self) -> float:
        """Tone spacing in Hz."""
        return self.freq_step_multiple / self.subpulse_duration

    @property
    def duration(self) -> float:
        return self.num_subpulses * self.subpulse_duration

    @property
    def num_waveforms(self) -> int:
        return self.mod_order ** self.num_subpulses

    @property
    def data_rate(self) -> float:
        """Bits per second carried by the family."""
        return math.log2(self.mod_order) / self.subpulse_duration


def _canonical_phases(phases: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phases, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FskWaveform:
    """One member of a waveform family: frequency indices plus initial phases."""

    spec: WaveformSpec
    freq_indices: np.ndarray
    phases: np.ndarray = field(default=None)

    def __post_init__(self):
        L, M = self.spec.L, self.spec.M
        freq = np.asarray(self.freq_indices)
        if freq.shape != (L,):
            raise DomainError(f"expected {L} frequency indices, got shape {freq.shape}")
        if not np.all(np.equal(np.mod(freq, 1), 0)):
            raise DomainError("frequency indices must be integers")
        freq = freq.astype(np.int64)
        if freq.min() < 0 or freq.max() > M - 1:
            raise DomainError(f"frequency indices must lie in [0, {M - 1}]")
        if self.phases is None:
            phases = np.zeros(L)
        else:
            phases = np.asarray(self.phases, dtype=float)
            if phases.shape != (L,):
                raise DomainError(f"expected {L} phases, got shape {phases.shape}")
            if not np.all(np.isfinite(phases)):
                raise DomainError("phases must be finite")
            phases = _canonical_phases(phases)
        object.__setattr__(self, "freq_indices", _frozen(freq))
        object.__setattr__(self, "phases", _frozen(phases))

    @classmethod
    def from_index(cls, spec: WaveformSpec, index: int, phases=None) -> "FskWaveform":
        return cls(spec, index_to_freq_sequence(spec, index), phases)

    @property
    def index(self) -> int:
        return freq_sequence_to_index(self.spec, self.freq_indices)

    @property
    def omegas(self) -> np.ndarray:
        """Angular sub-pulse frequencies in rad/s."""
        return TWO_PI * self.spec.freq_step * self.freq_indices

    @property
    def is_constant_frequency(self) -> bool:
        return bool(np.all(self.freq_indices == self.freq_indices[0]))

    def with_phases(self, phases) -> "FskWaveform":
        return FskWaveform(self.spec, self.freq_indices, phases)

    def __eq__(self, other):
        if not isinstance(other, FskWaveform):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.freq_indices, other.freq_indices)
            and np.array_equal(self.phases, other.phases)
        )

    def __hash__(self):
        return hash((self.spec, self.freq_indices.tobytes(), self.phases.tobytes()))

    def __repr__(self):
        return (
            f"FskWaveform(L={self.spec.L}, M={self.spec.M}, "
            f"freq_indices={self.freq_indices.tolist()}, phases={np.round(self.phases, 6).tolist()})"
        )

    def to_json_dict(self) -> dict:
        return {
            "L": self.spec.L,
            "M": self.spec.M,
            "T_seconds": self.spec.T,
            "freq_step_multiple": self.spec.freq_step_multiple,
            "freq_indices": [int(f) for f in self.freq_indices],
            "phases_rad": [float(p) for p in self.phases],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "FskWaveform":
        try:
            spec = WaveformSpec(
                int(payload["L"]),
                int(payload["M"]),
                float(payload.get("T_seconds", 1.0)),
                int(payload.get("freq_step_multiple", 1)),
            )
            freq = payload["freq_indices"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed waveform JSON: {exc}") from exc
        return cls(spec, np.asarray(freq), payload.get("phases_rad"))


def save_waveform(waveform: FskWaveform, path) -> None:
    Path(path).write_text(json.dumps(waveform.to_json_dict(), indent=2))


def load_waveform(path) -> FskWaveform:
    return FskWaveform.from_json_dict(json.loads(Path(path).read_text()))


def index_to_freq_sequence(spec: WaveformSpec, index: int) -> np.ndarray:
    """Base-M digits of ``index``, most significant digit first.

    >>> index_to_freq_sequence(WaveformSpec(3, 4), 10).tolist()
    [0, 2, 2]
    """
    index = int(index)
    if not 0 <= index < spec.num_waveforms:
        raise DomainError(f"waveform index {index} outside [0, {spec.num_waveforms})")
    digits = np.zeros(spec.L, dtype=np.int64)
    for pos in range(spec.L - 1, -1, -1):
        index, digits[pos] = divmod(index, spec.M)
    return digits


def freq_sequence_to_index(spec: WaveformSpec, freq_indices) -> int:
    freq = np.asarray(freq_indices)
    if freq.shape != (spec.L,):
        raise DomainError(f"expected {spec.L} digits, got shape {freq.shape}")
    index = 0
    for digit in freq.tolist():
        if int(digit) != digit or not 0 <= digit < spec.M:
            raise DomainError(f"digit {digit} outside [0, {spec.M - 1}]")
        index = index * spec.M + int(digit)
    return index


def all_freq_sequences(L: int, M: int) -> np.ndarray:
    """Every frequency sequence of the family, row ``i`` being waveform ``i``."""
    idx = np.arange(M ** L, dtype=np.int64)
    powers = M ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % M


def indices_to_freq_sequences(L: int, M: int, indices) -> np.ndarray:
    """Vectorized codec for index arrays that fit in int64."""
    idx = np.asarray(indices, dtype=np.int64)
    powers = M ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return (idx[..., None] // powers) % M


@dataclass(frozen=True, eq=False)
class SampledEnvelope:
    """Uniform samples of a complex baseband envelope in polar form.

    Keeping the modulus separate lets constant-envelope signals report an
    exactly constant instantaneous power.
    """

    sample_rate: float
    magnitude: np.ndarray
    phase: np.ndarray

    @classmethod
    def from_samples(cls, sample_rate: float, samples) -> "SampledEnvelope":
        samples = np.asarray(samples, dtype=complex)
        return cls(float(sample_rate), _frozen(np.abs(samples)), _frozen(np.angle(samples)))

    @property
    def samples(self) -> np.ndarray:
        return self.magnitude * np.exp(1j * self.phase)

    @property
    def energy(self) -> float:
        return float(np.sum(self.magnitude ** 2) / self.sample_rate)

    def __len__(self):
        return len(self.magnitude)


def default_sample_rate(spec: WaveformSpec, oversampling: int = 16) -> float:
    """``oversampling`` samples per 1/freq_step, raised to the 2*M*freq_step floor."""
    per_step = max(oversampling, 2 * spec.M)
    return per_step * abs(spec.freq_step)


def sample_envelope(waveform: FskWaveform, sample_rate: float | None = None) -> SampledEnvelope:
    spec = waveform.spec
    if sample_rate is None:
        sample_rate = default_sample_rate(spec)
    floor = 2 * spec.M * abs(spec.freq_step)
    if sample_rate < floor * (1 - 1e-12):
        raise DomainError(f"sample_rate {sample_rate} below the 2*M*freq_step floor {floor}")
    exact_count = spec.duration * sample_rate
    n_samples = int(round(exact_count))
    if n_samples < 1 or abs(n_samples - exact_count) > 1e-9 * max(n_samples, 1):
        raise DomainError("sample_rate must place an integer number of samples in the waveform")
    t = np.arange(n_samples) / sample_rate
    seg = np.minimum(np.floor(t / spec.T + 1e-12).astype(np.int64), spec.L - 1)
    local = t - seg * spec.T
    phase = waveform.omegas[seg] * local + waveform.phases[seg]
    magnitude = np.full(n_samples, math.sqrt(1.0 / spec.duration))
    return SampledEnvelope(float(sample_rate), _frozen(magnitude), _frozen(phase))


def papr(envelope) -> float:
    """Peak-to-average power ratio of an envelope or a raw complex sample vector."""
    if isinstance(envelope, SampledEnvelope):
        power = envelope.magnitude ** 2
    else:
        power = np.abs(np.asarray(envelope, dtype=complex)) ** 2
    if power.size == 0:
        raise DomainError("papr of an empty signal is undefined")
    if power.min() == power.max():
        return 1.0
    mean = power.mean()
    if mean == 0:
        raise DomainError("papr of an all-zero signal is undefined")
    return float(power.max() / mean)
