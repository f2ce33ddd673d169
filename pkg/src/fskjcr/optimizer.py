"""Multi-start min-max optimization of the grid-point PSL over initial phases.

The max over sidelobes is replaced by a log-sum-exp surrogate whose
temperature is annealed over a few stages; each stage runs a BFGS descent
with Armijo backtracking and the last stage is polished with subgradient
steps on the true max. Phase 0 is pinned to zero throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import write_csv
from ._parallel import block_rng, run_blocks
from .core import TWO_PI, DomainError, FskWaveform, WaveformSpec, _canonical_phases, index_to_freq_sequence


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 10
    max_iterations: int = 500
    tolerance: float = 1e-10
    smoothing: tuple = (1e2, 1e3, 1e4)
    polish_iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise DomainError("restarts must be a positive integer")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be positive")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if not self.smoothing or any(c <= 0 for c in self.smoothing):
            raise DomainError("smoothing factors must be positive")
        object.__setattr__(self, "smoothing", tuple(float(c) for c in self.smoothing))


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    waveform_index: int
    phases: np.ndarray
    psl: float
    pre_psl: float
    restart_winner: int  # -1 when no restart beat the zero-phase waveform
    iterations: int
    converged: bool
    constant_frequency: bool = False

    @property
    def drop(self) -> float:
        return self.pre_psl - self.psl


class _Structure:
    """Nonzero sidelobe terms of one frequency sequence, flattened.

    Term ``t`` contributes ``exp(j(theta[a[t]] - theta[b[t]])) / L`` to
    sidelobe ``sid[t]``. Grid points without terms are identically zero.
    """

    def __init__(self, freq: np.ndarray, M: int):
        freq = np.asarray(freq, dtype=np.int64)
        L = len(freq)
        sid, a, b = [], [], []
        count = 0
        for k in range(1, L):
            l = np.arange(k, L)
            diff = freq[l - k] - freq[l]
            key = diff + (M - 1)
            for r_key in np.unique(key):
                ls = l[key == r_key]
                sid.append(np.full(len(ls), count))
                a.append(ls)
                b.append(ls - k)
                count += 1
        self.L = L
        self.n = count
        cat = (lambda parts: np.concatenate(parts) if parts else np.empty(0, dtype=np.int64))
        self.sid, self.a, self.b = cat(sid), cat(a), cat(b)

    def sums(self, theta: np.ndarray):
        z = np.exp(1j * (theta[self.a] - theta[self.b]))
        s = (np.bincount(self.sid, z.real, self.n) + 1j * np.bincount(self.sid, z.imag, self.n)) / self.L
        return s, z

    def squared(self, theta: np.ndarray) -> np.ndarray:
        s, _ = self.sums(theta)
        return s.real ** 2 + s.imag ** 2

    def peak(self, theta: np.ndarray) -> float:
        return float(self.squared(theta).max()) if self.n else 0.0

    def gradient(self, theta: np.ndarray, weights=None, active=None, cached=None) -> np.ndarray:
        """Gradient of sum_s w_s |S_s|^2 (or of |S_active|^2) with respect to theta."""
        s, z = self.sums(theta) if cached is None else cached
        if weights is None:
            weights = np.zeros(self.n)
            weights[active] = 1.0
        c = 2.0 / self.L * weights[self.sid] * np.real(np.conj(s[self.sid]) * 1j * z)
        return np.bincount(self.a, c, self.L) - np.bincount(self.b, c, self.L)

    def smoothed(self, theta: np.ndarray, beta: float):
        s, z = self.sums(theta)
        f = s.real ** 2 + s.imag ** 2
        m = f.max()
        w = np.exp(beta * (f - m))
        total = w.sum()
        return m + np.log(total) / beta, self.gradient(theta, weights=w / total, cached=(s, z))


def _check_phases(waveform: FskWaveform, phases) -> np.ndarray:
    phases = waveform.phases if phases is None else np.asarray(phases, dtype=float)
    if phases.shape != (waveform.spec.L,):
        raise DomainError(f"expected {waveform.spec.L} phases")
    return phases


def objective(waveform: FskWaveform, phases=None) -> float:
    """Largest squared grid sidelobe of ``waveform`` carrying ``phases``."""
    phases = _check_phases(waveform, phases)
    return _Structure(waveform.freq_indices, waveform.spec.M).peak(phases)


def smoothed_objective(waveform: FskWaveform, phases, smoothing: float) -> float:
    """``logsumexp(beta * |S|^2) / beta`` over the nonzero grid sidelobes, ``beta = smoothing``."""
    phases = _check_phases(waveform, phases)
    st = _Structure(waveform.freq_indices, waveform.spec.M)
    return float(st.smoothed(phases, float(smoothing))[0]) if st.n else 0.0


def objective_gradient(waveform: FskWaveform, phases=None, smoothing: float | None = None) -> np.ndarray:
    """Gradient of the objective surrogate with respect to all ``L`` phases.

    Without ``smoothing`` this is the gradient of the active (first maximal)
    squared sidelobe; with ``smoothing=beta`` it is the gradient of
    ``logsumexp(beta * |S|^2) / beta``.
    """
    phases = _check_phases(waveform, phases)
    st = _Structure(waveform.freq_indices, waveform.spec.M)
    if st.n == 0:
        return np.zeros(waveform.spec.L)
    if smoothing is not None:
        return st.smoothed(phases, float(smoothing))[1]
    return st.gradient(phases, active=int(np.argmax(st.squared(phases))))


def _bfgs(fun, x, max_iterations: int, tolerance: float):
    """Minimize ``fun`` (returning value, gradient) from ``x``; returns (x, f, iterations, converged)."""
    n = len(x)
    f, g = fun(x)
    h = np.eye(n)
    for it in range(1, max_iterations + 1):
        d = -h @ g
        slope = g @ d
        if slope >= 0:
            h = np.eye(n)
            d = -g
            slope = -(g @ g)
        if slope == 0:
            return x, f, it, True
        step = 1.0
        while True:
            x_new = x + step * d
            f_new, g_new = fun(x_new)
            if f_new <= f + 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        s, y = x_new - x, g_new - g
        sy = s @ y
        if sy > 1e-16:
            rho = 1.0 / sy
            hy = h @ y
            h = h - rho * (np.outer(s, hy) + np.outer(hy, s)) + (rho * rho * (y @ hy) + rho) * np.outer(s, s)
        change = abs(f - f_new)
        x, f, g = x_new, f_new, g_new
        if change < tolerance:
            return x, f, it, True
    return x, f, max_iterations, False


def _polish(st: _Structure, theta: np.ndarray, iterations: int) -> np.ndarray:
    """Subgradient descent on the true max, accepting only strict decreases."""
    best = st.peak(theta)
    step = 0.1
    for _ in range(iterations):
        s, z = st.sums(theta)
        g = st.gradient(theta, active=int(np.argmax(np.abs(s))), cached=(s, z))
        g[0] = 0.0
        norm = np.linalg.norm(g)
        if norm == 0:
            break
        while step > 1e-10:
            trial = theta - step * g / norm
            value = st.peak(trial)
            if value < best:
                theta, best = trial, value
                step *= 1.5
                break
            step *= 0.5
        else:
            break
    return theta


def _run_restart(st: _Structure, x0: np.ndarray, config: OptimizerConfig):
    L = st.L
    x = x0
    iterations = 0
    converged = False
    for c in config.smoothing:
        beta = c * L * L

        def fun(v, beta=beta):
            value, grad = st.smoothed(np.concatenate([[0.0], v]), beta)
            return value, grad[1:]

        x, _, used, converged = _bfgs(fun, x, config.max_iterations, config.tolerance)
        iterations += used
    theta = _polish(st, np.concatenate([[0.0], x]), config.polish_iterations)
    return theta, iterations, converged


def optimize_phases(waveform: FskWaveform, config: OptimizerConfig = OptimizerConfig(),
                    waveform_index: int | None = None) -> OptimizationResult:
    """Best-of-restarts phases minimizing the grid PSL of ``waveform``.

    Restart ``j`` starts from phases drawn by the stream ``(seed, index, j)``.
    The zero-phase waveform stays a candidate, so the result never has a
    higher PSL than the input frequency sequence without phases.
    """
    spec = waveform.spec
    if spec.L < 2:
        raise DomainError("phase optimization needs L >= 2")
    index = waveform.index if waveform_index is None else int(waveform_index)
    st = _Structure(waveform.freq_indices, spec.M)
    zero = np.zeros(spec.L)
    pre = np.sqrt(st.peak(zero))
    best_theta, best_psl, winner, best_iters, best_conv = zero, pre, -1, 0, True
    if st.n:
        for j in range(config.restarts):
            x0 = block_rng(config.seed, index, j).uniform(0.0, TWO_PI, spec.L - 1)
            theta, iters, conv = _run_restart(st, x0, config)
            theta = _canonical_phases(theta - theta[0])
            psl = np.sqrt(st.peak(theta))
            if psl < best_psl:
                best_theta, best_psl, winner, best_iters, best_conv = theta, psl, j, iters, conv
    return OptimizationResult(index, best_theta, float(best_psl), float(pre), winner, best_iters, bool(best_conv),
                              waveform.is_constant_frequency)


def _optimize_one(spec: WaveformSpec, index: int, config: OptimizerConfig) -> OptimizationResult:
    return optimize_phases(FskWaveform(spec, index_to_freq_sequence(spec, index)), config, index)


@dataclass(frozen=True, eq=False)
class BatchResult:
    spec: WaveformSpec
    results: list = field(default_factory=list)

    def __len__(self):
        return len(self.results)

    def summary(self) -> dict:
        def stats(rows):
            if not rows:
                return {"count": 0, "mean_pre_psl": None, "mean_post_psl": None, "mean_drop": None}
            return {
                "count": len(rows),
                "mean_pre_psl": float(np.mean([r.pre_psl for r in rows])),
                "mean_post_psl": float(np.mean([r.psl for r in rows])),
                "mean_drop": float(np.mean([r.drop for r in rows])),
            }

        return {
            "all": stats(self.results),
            "excluding_constant_frequency": stats([r for r in self.results if not r.constant_frequency]),
            "constant_frequency_count": sum(r.constant_frequency for r in self.results),
        }

    def phase_table(self) -> dict:
        return {r.waveform_index: r.phases for r in self.results}

    def to_csv(self, path):
        rows = self.results
        return write_csv(
            path,
            ["waveform_index", "pre_psl", "post_psl", "drop", "converged", "restart_winner"],
            [[r.waveform_index for r in rows], [r.pre_psl for r in rows], [r.psl for r in rows],
             [r.drop for r in rows], [r.converged for r in rows], [r.restart_winner for r in rows]],
        )


def batch_optimize(spec: WaveformSpec, indices, config: OptimizerConfig = OptimizerConfig(), n_jobs=None) -> BatchResult:
    indices = [int(i) for i in indices]
    for i in indices:
        if not 0 <= i < spec.num_waveforms:
            raise DomainError(f"waveform index {i} outside [0, {spec.num_waveforms})")
    results = run_blocks(_optimize_one, [(spec, i, config) for i in indices], n_jobs)
    return BatchResult(spec, list(results))


def sample_indices(spec: WaveformSpec, n: int, seed: int) -> list[int]:
    """``n`` waveform indices drawn uniformly (with replacement) from the family."""
    rng = block_rng(seed, 0)
    freq = rng.integers(0, spec.M, size=(int(n), spec.L))
    out = []
    for row in freq:
        idx = 0
        for d in row.tolist():
            idx = idx * spec.M + d
        out.append(idx)
    return out


def save_phase_table(spec: WaveformSpec, table: dict, path) -> Path:
    payload = {
        "L": spec.L,
        "M": spec.M,
        "T_seconds": spec.T,
        "freq_step_multiple": spec.freq_step_multiple,
        "phases_rad": {str(int(i)): [float(p) for p in ph] for i, ph in sorted(table.items())},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def load_phase_table(path) -> tuple[WaveformSpec, dict]:
    try:
        payload = json.loads(Path(path).read_text())
        spec = WaveformSpec(int(payload["L"]), int(payload["M"]), float(payload.get("T_seconds", 1.0)),
                            int(payload.get("freq_step_multiple", 1)))
        table = {int(k): np.asarray(v, dtype=float) for k, v in payload["phases_rad"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed phase table {path}: {exc}") from exc
    for k, v in table.items():
        if v.shape != (spec.L,) or not 0 <= k < spec.num_waveforms:
            raise DomainError(f"phase table entry {k} is inconsistent with L={spec.L}, M={spec.M}")
    return spec, table
