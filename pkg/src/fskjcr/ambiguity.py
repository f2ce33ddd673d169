"""Ambiguity function of FSK waveforms: closed forms, cuts, grid sidelobes, sampled surfaces.

The complex ambiguity function is taken as

    A(tau, omega) = integral s(t) conj(s(t - tau)) exp(+j omega t) dt

which is the sign convention under which a grid sidelobe at Doppler index ``r``
counts sub-pulse pairs with ``f[l-k] - f[l] == r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from ._io import write_csv
from .core import TWO_PI, DomainError, FskWaveform, WaveformSpec

DEFAULT_OVERSAMPLING = 16


class GridPoint(NamedTuple):
    """Delay index ``k`` (tau = kT) and Doppler index ``r`` (omega = 2 pi r freq_step)."""

    k: int
    r: int

    def in_domain(self, L: int, M: int) -> bool:
        return 0 <= self.k <= L - 1 and -(M - 1) <= self.r <= M - 1 and (self.k, self.r) != (0, 0)


def domain_points(L: int, M: int) -> list[GridPoint]:
    """The half-plane grid domain, ordered by ``k`` then ``r``; size ``L(2M-1) - 1``."""
    return [GridPoint(k, r) for k in range(L) for r in range(-(M - 1), M) if (k, r) != (0, 0)]


def pulse_caf(tau, omega, T: float):
    """Complex ambiguity function of the rectangular pulse of width ``T``.

    Written as ``exp(j omega (T + tau)/2) (T - |tau|) sinc``, which equals the
    two-branch exponential form and has the omega -> 0 limit built in.
    """
    tau = np.asarray(tau, dtype=float)
    omega = np.asarray(omega, dtype=float)
    tau, omega = np.broadcast_arrays(tau, omega)
    width = T - np.abs(tau)
    inside = width > 0
    width = np.where(inside, width, 0.0)
    value = np.exp(0.5j * omega * (T + tau)) * width * np.sinc(omega * width / TWO_PI)
    value = np.where(inside, value, 0.0)
    return value[()] if value.ndim == 0 else value


def complex_af(waveform: FskWaveform, tau, omega):
    """Closed-form complex ambiguity function, broadcast over ``tau`` and ``omega``."""
    spec = waveform.spec
    L, T = spec.L, spec.T
    tau = np.asarray(tau, dtype=float)
    omega = np.asarray(omega, dtype=float)
    tau, omega = np.broadcast_arrays(tau, omega)
    w = waveform.omegas
    th = waveform.phases
    out = np.zeros(tau.shape, dtype=complex)
    for offset in range(-(L - 1), L):
        shifted = tau + offset * T
        if not np.any(np.abs(shifted) < T):
            continue
        for l in range(max(0, -offset), min(L, L - offset)):
            n = l + offset
            term = pulse_caf(shifted, omega - w[n] + w[l], T)
            out += term * np.exp(1j * (omega * l * T + w[n] * shifted + th[l] - th[n]))
    out /= L * T
    return out[()] if out.ndim == 0 else out


def zero_doppler_cut(waveform: FskWaveform, tau_samples) -> np.ndarray:
    return np.abs(complex_af(waveform, tau_samples, 0.0))


def zero_delay_cut(spec: WaveformSpec, omega_samples) -> np.ndarray:
    """|A(0, omega)|; identical for every frequency sequence of the family."""
    omega = np.asarray(omega_samples, dtype=float)
    L, T = spec.L, spec.T
    geometric = np.exp(1j * np.multiply.outer(omega, np.arange(L) * T)).sum(axis=-1)
    return np.abs(pulse_caf(0.0, omega, T) * geometric / (L * T))


def _check_point(spec: WaveformSpec, k: int, r: int) -> None:
    if (k, r) != (0, 0) and not GridPoint(k, r).in_domain(spec.L, spec.M):
        raise DomainError(f"grid point (k={k}, r={r}) outside the domain for L={spec.L}, M={spec.M}")


def grid_sidelobe(waveform: FskWaveform, k, r: int | None = None) -> float:
    """Sidelobe magnitude at the grid point ``(k, r)``; ``(0, 0)`` returns 1."""
    if r is None:
        k, r = k
    k, r = int(k), int(r)
    spec = waveform.spec
    _check_point(spec, k, r)
    if (k, r) == (0, 0):
        return 1.0
    f, th, L = waveform.freq_indices, waveform.phases, spec.L
    match = (f[: L - k] - f[k:]) == r
    if not np.any(match):
        return 0.0
    if not np.any(th):
        return int(match.sum()) / L
    terms = np.exp(1j * (th[k:] - th[: L - k]))[match]
    return float(abs(terms.sum()) / L)


@dataclass(frozen=True, eq=False)
class GridSidelobeMap:
    spec: WaveformSpec
    values: dict

    @property
    def psl(self) -> float:
        return max(self.values.values())

    @property
    def argmax(self) -> GridPoint:
        return max(self.values, key=lambda p: (self.values[p], -p.k, -p.r))

    def as_array(self) -> np.ndarray:
        """Values as an ``(L, 2M-1)`` array indexed by ``[k, r + M - 1]``; NaN at the origin."""
        L, M = self.spec.L, self.spec.M
        out = np.full((L, 2 * M - 1), np.nan)
        for p, v in self.values.items():
            out[p.k, p.r + M - 1] = v
        return out


def grid_sidelobe_map(waveform: FskWaveform) -> GridSidelobeMap:
    spec = waveform.spec
    L, M = spec.L, spec.M
    f, th = waveform.freq_indices, waveform.phases
    values = {}
    for k in range(L):
        diff = f[: L - k] - f[k:] + (M - 1)
        terms = np.exp(1j * (th[k:] - th[: L - k]))
        sums = np.bincount(diff, terms.real, 2 * M - 1) + 1j * np.bincount(diff, terms.imag, 2 * M - 1)
        counts = np.bincount(diff, minlength=2 * M - 1)
        for r in range(-(M - 1), M):
            if k == 0 and r == 0:
                continue
            c = counts[r + M - 1]
            if c == 0 or k == 0:
                v = 0.0
            elif not np.any(th):
                v = int(c) / L
            else:
                v = float(abs(sums[r + M - 1]) / L)
            values[GridPoint(k, r)] = v
    return GridSidelobeMap(spec, values)


def grid_psl(waveform: FskWaveform) -> float:
    return grid_sidelobe_map(waveform).psl


def grid_psl_counts(freq: np.ndarray, M: int) -> np.ndarray:
    """Zero-phase grid PSL of many sequences as integer match counts (PSL = count / L).

    ``freq`` has shape ``(n, L)``.
    """
    freq = np.asarray(freq, dtype=np.int64)
    n, L = freq.shape
    width = 2 * M - 1
    best = np.zeros(n, dtype=np.int64)
    rows = np.arange(n, dtype=np.int64)[:, None] * width
    for k in range(1, L):
        key = rows + (freq[:, : L - k] - freq[:, k:] + (M - 1))
        counts = np.bincount(key.ravel(), minlength=n * width).reshape(n, width)
        np.maximum(best, counts.max(axis=1), out=best)
    return best


def grid_psl_batch(freq: np.ndarray, phases: np.ndarray | None, M: int) -> np.ndarray:
    """Grid PSL for many ``(freq, phases)`` rows at once."""
    freq = np.asarray(freq, dtype=np.int64)
    n, L = freq.shape
    if phases is None:
        return grid_psl_counts(freq, M) / L
    phases = np.asarray(phases, dtype=float)
    width = 2 * M - 1
    best = np.zeros(n)
    rows = np.arange(n, dtype=np.int64)[:, None] * width
    for k in range(1, L):
        key = (rows + (freq[:, : L - k] - freq[:, k:] + (M - 1))).ravel()
        z = np.exp(1j * (phases[:, k:] - phases[:, : L - k])).ravel()
        s = np.bincount(key, z.real, n * width) + 1j * np.bincount(key, z.imag, n * width)
        np.maximum(best, np.abs(s).reshape(n, width).max(axis=1) / L, out=best)
    return best


@dataclass(frozen=True, eq=False)
class AfSurface:
    """Sampled AF magnitude over the full delay-Doppler plane.

    ``magnitude[i, j]`` is the AF at ``(delays[i], dopplers[j])``.
    """

    spec: WaveformSpec
    delays: np.ndarray
    dopplers: np.ndarray
    magnitude: np.ndarray
    oversampling: int

    def nearest(self, tau: float, omega: float) -> float:
        i = int(np.argmin(np.abs(self.delays - tau)))
        j = int(np.argmin(np.abs(self.dopplers - omega)))
        return float(self.magnitude[i, j])

    def to_csv(self, path):
        tau = np.repeat(self.delays, len(self.dopplers))
        omega = np.tile(self.dopplers, len(self.delays))
        return write_csv(path, ["tau_seconds", "omega_rad_per_s", "magnitude"],
                         [tau, omega, self.magnitude.ravel()])


def sampled_af_surface(waveform: FskWaveform, oversampling: int = DEFAULT_OVERSAMPLING) -> AfSurface:
    """Evaluate the closed-form AF on a delay step ``T/os`` and Doppler step ``2 pi df/os``.

    Delays cover ``[-LT, LT]``; Dopplers cover ``+-2 pi M df`` (the largest tone
    difference plus one spacing). Only the ``tau >= 0`` half is computed, the
    rest follows from ``A(tau, omega) = A(-tau, -omega)``.
    """
    if int(oversampling) != oversampling or oversampling < 4:
        raise DomainError("oversampling must be an integer >= 4")
    os_ = int(oversampling)
    spec = waveform.spec
    L, M, T = spec.L, spec.M, spec.T
    step = TWO_PI * abs(spec.freq_step) / os_
    q = np.arange(-M * os_, M * os_ + 1)
    omega = q * step
    delta = np.arange(os_) * T / os_
    f, th, w = waveform.freq_indices, waveform.phases, waveform.omegas

    diffs = np.arange(-(M - 1), M)
    nu = omega[None, :] + TWO_PI * spec.freq_step * diffs[:, None]  # (D, W)
    p_lead = pulse_caf(delta[:, None, None], nu[None], T)  # pairs with n = l - k
    p_lag = pulse_caf(delta[:, None, None] - T, nu[None], T)  # pairs with n = l - k - 1
    tone = np.exp(1j * np.outer(np.arange(L) * T, omega))  # (L, W)

    half = np.zeros((L * os_ + 1, len(omega)), dtype=complex)
    for k in range(L):
        acc = np.zeros((os_, len(omega)), dtype=complex)
        for shift, table, tau_local in ((k, p_lead, delta), (k + 1, p_lag, delta - T)):
            if shift > L - 1:
                continue
            l = np.arange(shift, L)
            n = l - shift
            coef = np.exp(1j * (th[l] - th[n]))[None, :] * np.exp(1j * np.outer(tau_local, w[n]))
            pulse = table[:, f[l] - f[n] + (M - 1), :]  # (os, nl, W)
            acc += np.einsum("jl,jlq,lq->jq", coef, pulse, tone[l])
        half[k * os_:(k + 1) * os_] = acc
    half /= L * T
    mag_half = np.abs(half)
    mag = np.vstack([mag_half[:0:-1, ::-1], mag_half])
    delays = np.arange(-L * os_, L * os_ + 1) * (T / os_)
    return AfSurface(spec, delays, omega, mag, os_)


def mainlobe_mask(surface: AfSurface) -> np.ndarray:
    """Samples with |tau| < T and |omega| < 2 pi |df|."""
    os_ = surface.oversampling
    n_tau = len(surface.delays) // 2
    n_omega = len(surface.dopplers) // 2
    ti = np.abs(np.arange(len(surface.delays)) - n_tau)
    oi = np.abs(np.arange(len(surface.dopplers)) - n_omega)
    return (ti[:, None] < os_) & (oi[None, :] < os_)


def local_maxima(surface: AfSurface) -> np.ndarray:
    """Boolean mask of samples >= all 8 neighbours once the mainlobe is removed."""
    masked = np.where(mainlobe_mask(surface), -np.inf, surface.magnitude)
    neighbourhood = ndimage.maximum_filter(masked, size=3, mode="constant", cval=-np.inf)
    return np.isfinite(masked) & (masked >= neighbourhood)


def local_maxima_psl(surface: AfSurface) -> float:
    if surface.oversampling < 8:
        raise DomainError("local-maxima PSL needs a surface with oversampling >= 8")
    peaks = local_maxima(surface)
    return float(surface.magnitude[peaks].max())
