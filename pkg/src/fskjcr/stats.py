"""Sidelobe-level laws, the independence approximation of the PSL law, oracles and W1."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._io import write_csv, write_json
from ._parallel import block_rng, block_sizes, run_blocks
from .ambiguity import GridPoint, domain_points, grid_psl_batch, grid_psl_counts, local_maxima_psl, sampled_af_surface
from .core import DomainError, FskWaveform, WaveformSpec, indices_to_freq_sequences

ENUMERATION_BUDGET = 2 ** 24
K0_MODES = ("exact", "literal")


class BudgetExceeded(DomainError):
    """Exhaustive enumeration would exceed the configured budget."""


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A finite distribution stored as sorted support values and a PMF.

    ``exact`` optionally carries the PMF as :class:`fractions.Fraction` values.
    When ``lattice`` is set the support is ``arange(lattice + 1) / lattice``
    and index ``i`` stands for the exact point ``i / lattice``.
    """

    support: np.ndarray
    pmf: np.ndarray
    exact: tuple | None = None
    lattice: int | None = None
    count: int = 0

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        pmf = np.asarray(self.pmf, dtype=float)
        if support.ndim != 1 or support.shape != pmf.shape or support.size == 0:
            raise DomainError("support and pmf must be non-empty vectors of equal length")
        if np.any(np.diff(support) <= 0):
            raise DomainError("support must be strictly increasing")
        if np.any(pmf < -1e-12) or abs(pmf.sum() - 1.0) > 1e-9:
            raise DomainError("pmf must be non-negative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "pmf", np.clip(pmf, 0.0, None))

    @classmethod
    def on_lattice(cls, L: int, pmf, exact=None, count: int = 0) -> "DiscreteDistribution":
        pmf = np.asarray(pmf, dtype=float)
        if len(pmf) != L + 1:
            raise DomainError(f"lattice PMF needs {L + 1} entries")
        return cls(np.arange(L + 1) / L, pmf, tuple(exact) if exact is not None else None, L, count)

    @classmethod
    def from_counts(cls, L: int, counts) -> "DiscreteDistribution":
        """Empirical law of ``i / L`` from integer tallies ``counts[i]``."""
        counts = [int(c) for c in counts]
        counts += [0] * (L + 1 - len(counts))
        total = sum(counts)
        if total == 0:
            raise DomainError("no samples")
        exact = tuple(Fraction(c, total) for c in counts)
        return cls.on_lattice(L, [c / total for c in counts], exact, total)

    @classmethod
    def from_cdf(cls, support, cdf, lattice: int | None = None) -> "DiscreteDistribution":
        cdf = np.asarray(cdf, dtype=float)
        if np.any(np.diff(cdf) < -1e-12) or abs(cdf[-1] - 1.0) > 1e-9 or cdf[0] < -1e-12:
            raise DomainError("not a valid CDF")
        pmf = np.diff(np.concatenate([[0.0], cdf]))
        pmf[-1] += 1.0 - cdf[-1]
        return cls(support, pmf, None, lattice)

    @classmethod
    def from_samples(cls, values) -> "DiscreteDistribution":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise DomainError("no samples")
        support, counts = np.unique(values, return_counts=True)
        return cls(support, counts / values.size, None, None, int(values.size))

    @classmethod
    def point_mass(cls, x: float) -> "DiscreteDistribution":
        return cls(np.array([float(x)]), np.array([1.0]), (Fraction(1),))

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf)
        c[-1] = 1.0
        return c

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    def cdf_at(self, x) -> np.ndarray:
        idx = np.searchsorted(self.support, np.asarray(x, dtype=float), side="right")
        return np.concatenate([[0.0], self.cdf])[idx]

    def quantile(self, u) -> np.ndarray:
        """Smallest support value whose CDF reaches ``u``."""
        idx = np.searchsorted(self.cdf, np.asarray(u, dtype=float) - 1e-15, side="left")
        return self.support[np.minimum(idx, len(self.support) - 1)]

    def to_csv(self, path, kind: str = "pmf"):
        if kind == "pmf":
            return write_csv(path, ["value", "probability"], [self.support, self.pmf])
        if kind == "cdf":
            return write_csv(path, ["value", "cdf"], [self.support, self.cdf])
        raise ValueError(f"unknown kind {kind!r}")


def wasserstein1(first: DiscreteDistribution, second: DiscreteDistribution) -> float:
    """Exact L1 area between two piecewise-constant CDFs."""
    for d in (first, second):
        if not isinstance(d, DiscreteDistribution):
            raise DomainError("wasserstein1 expects DiscreteDistribution inputs")
    xs = np.union1d(first.support, second.support)
    if xs.size < 2:
        return 0.0
    gap = np.abs(first.cdf_at(xs[:-1]) - second.cdf_at(xs[:-1]))
    return float(np.sum(gap * np.diff(xs)))


def horizontal_gap(first: DiscreteDistribution, second: DiscreteDistribution) -> float:
    """Largest horizontal distance between the two CDFs (sup-norm of quantile difference)."""
    levels = np.union1d(np.concatenate([[0.0], first.cdf]), np.concatenate([[0.0], second.cdf]))
    levels = levels[(levels >= 0.0) & (levels <= 1.0)]
    mids = 0.5 * (levels[:-1] + levels[1:])
    if mids.size == 0:
        return float(abs(first.support[0] - second.support[0]))
    return float(np.max(np.abs(first.quantile(mids) - second.quantile(mids))))


def wasserstein_report(first: DiscreteDistribution, second: DiscreteDistribution, path=None) -> dict:
    report = {"w1": wasserstein1(first, second), "n1": int(first.count), "n2": int(second.count)}
    if path is not None:
        write_json(path, report)
    return report


# ---------------------------------------------------------------- per-point laws

def _check_sl_point(L: int, M: int, k: int, r: int) -> None:
    if L < 1 or M < 2 or not GridPoint(k, r).in_domain(L, M):
        raise DomainError(f"(k={k}, r={r}) is not a sidelobe grid point for L={L}, M={M}")


def match_probability(M: int, r: int) -> Fraction:
    """Probability that a uniformly drawn tone pair differs by ``r`` steps."""
    return Fraction(M - abs(r), M * M)


def _binomial_exact(n: int, p: Fraction) -> list[Fraction]:
    q = 1 - p
    return [math.comb(n, i) * p ** i * q ** (n - i) for i in range(n + 1)]


def _chain_counts(length: int, M: int, r: int) -> list[int]:
    """Tally of matches ``f[a] - f[a+1] == r`` over all ``M**length`` chains."""
    # state[f][c]: number of prefixes ending in tone f with c matches
    state = [[1] for _ in range(M)]
    for _ in range(length - 1):
        nxt = [[0] * (len(state[0]) + 1) for _ in range(M)]
        for f_prev in range(M):
            for f in range(M):
                hit = 1 if f_prev - f == r else 0
                row = nxt[f]
                for c, v in enumerate(state[f_prev]):
                    if v:
                        row[c + hit] += v
        state = nxt
    width = max(len(s) for s in state)
    return [sum(s[c] for s in state if c < len(s)) for c in range(width)]


def _exact_sl_counts(L: int, M: int, k: int, r: int) -> list[int]:
    """Exact tally of the match count at (k, r) over all M**L sequences.

    Pairs (l-k, l) link positions with equal residue mod k into chains whose
    tones are independent across chains, so chain tallies convolve.
    """
    total = [1]
    for start in range(k):
        length = len(range(start, L, k))
        chain = _chain_counts(length, M, r)
        conv = [0] * (len(total) + len(chain) - 1)
        for i, a in enumerate(total):
            for j, b in enumerate(chain):
                conv[i + j] += a * b
        total = conv
    return total


def sl_pmf(L: int, M: int, k: int, r: int, k0_mode: str = "exact", method: str = "exact") -> DiscreteDistribution:
    """Law of the zero-phase grid sidelobe at ``(k, r)`` on the lattice ``i / L``.

    ``method="exact"`` accounts for pair matches that share a tone and agrees
    with exhaustive enumeration everywhere. ``method="binomial"`` is the
    Binomial(L-k, (M-|r|)/M^2) law that treats the matches as independent;
    it coincides with the exact law when ``r == 0`` or ``2k >= L``.
    ``k0_mode`` selects the treatment of ``k = 0`` points: ``"exact"`` gives a
    point mass at 0, ``"literal"`` applies the binomial law with ``L`` trials.
    """
    _check_sl_point(L, M, k, r)
    if k0_mode not in K0_MODES:
        raise DomainError(f"k0_mode must be one of {K0_MODES}")
    if method not in ("binomial", "exact"):
        raise DomainError("method must be 'binomial' or 'exact'")
    if k == 0 and k0_mode == "exact":
        exact = [Fraction(1)] + [Fraction(0)] * L
    elif method == "binomial" or k == 0:
        exact = _binomial_exact(L - k, match_probability(M, r)) + [Fraction(0)] * k
    else:
        counts = _exact_sl_counts(L, M, k, r)
        exact = [Fraction(c, M ** L) for c in counts] + [Fraction(0)] * (L + 1 - len(counts))
    return DiscreteDistribution.on_lattice(L, [float(p) for p in exact], exact)


def sl_mean(L: int, M: int, k: int, r: int) -> float:
    """Mean zero-phase sidelobe ``(L-k)(M-|r|)/(L M^2)`` for ``k >= 1``."""
    _check_sl_point(L, M, k, r)
    return (L - k) * (M - abs(r)) / (L * M * M)


# ---------------------------------------------------------------- correlations

@dataclass(frozen=True)
class CorrelationReport:
    point_a: GridPoint
    point_b: GridPoint
    printed_formula_value: float
    symmetric_formula_value: float
    empirical_value: float
    standard_error: float
    samples: int


def sl_correlation_printed(L: int, M: int, k: int, r: int, k2: int, r2: int) -> float:
    """Pairwise sidelobe correlation as published: 0 across delays, -(M-|r|)/(M^2-(M-|r|)) on one delay."""
    _check_sl_point(L, M, k, r)
    _check_sl_point(L, M, k2, r2)
    if (k, r) == (k2, r2):
        raise DomainError("correlation needs two distinct grid points")
    if k != k2:
        return 0.0
    a = M - abs(r)
    return -a / (M * M - a)


def sl_correlation_symmetric(L: int, M: int, k: int, r: int, k2: int, r2: int) -> float:
    """Variant with covariance numerator symmetric in ``r`` and ``r2``."""
    _check_sl_point(L, M, k, r)
    _check_sl_point(L, M, k2, r2)
    if (k, r) == (k2, r2):
        raise DomainError("correlation needs two distinct grid points")
    if k != k2:
        return 0.0
    p, p2 = float(match_probability(M, r)), float(match_probability(M, r2))
    return -math.sqrt(p * p2 / ((1 - p) * (1 - p2)))


def _match_counts(freq: np.ndarray, k: int, r: int) -> np.ndarray:
    L = freq.shape[1]
    if k == 0:
        return np.zeros(len(freq), dtype=np.int64)
    return np.sum((freq[:, : L - k] - freq[:, k:]) == r, axis=1)


def sl_correlation_empirical(L: int, M: int, k: int, r: int, k2: int, r2: int,
                             samples: int = 10 ** 5, seed: int = 0,
                             diagnostic: bool = False) -> CorrelationReport:
    """Monte Carlo Pearson correlation of two zero-phase grid sidelobes.

    With ``diagnostic=True`` the two points may coincide (self-correlation).
    """
    if samples < 10 ** 4:
        raise DomainError("at least 10^4 samples are required")
    _check_sl_point(L, M, k, r)
    _check_sl_point(L, M, k2, r2)
    same = (k, r) == (k2, r2)
    if same and not diagnostic:
        raise DomainError("correlation needs two distinct grid points")
    freq = block_rng(seed, 0).integers(0, M, size=(samples, L))
    a = _match_counts(freq, k, r).astype(float)
    b = _match_counts(freq, k2, r2).astype(float)
    if a.std() == 0 or b.std() == 0:
        rho = float("nan")
    else:
        rho = float(np.corrcoef(a, b)[0, 1])
    se = math.sqrt(max(1.0 - rho * rho, 0.0) / (samples - 2)) if np.isfinite(rho) else float("nan")
    if same:
        printed = symmetric = 1.0
    else:
        printed = sl_correlation_printed(L, M, k, r, k2, r2)
        symmetric = sl_correlation_symmetric(L, M, k, r, k2, r2)
    return CorrelationReport(GridPoint(k, r), GridPoint(k2, r2), printed, symmetric, rho, se, samples)


# ---------------------------------------------------------------- PSL laws

def approx_psl_cdf(L: int, M: int, k0_mode: str = "exact", method: str = "binomial") -> DiscreteDistribution:
    """PSL law obtained by treating all grid sidelobes as independent."""
    if L < 2:
        raise DomainError("approx_psl_cdf needs L >= 2")
    cdf = np.ones(L + 1)
    for p in domain_points(L, M):
        if p.k == 0 and k0_mode == "exact":
            continue
        cdf *= sl_pmf(L, M, p.k, p.r, k0_mode, method).cdf
    return DiscreteDistribution.from_cdf(np.arange(L + 1) / L, cdf, lattice=L)


def _exhaustive_counts_block(L: int, M: int, start: int, stop: int) -> np.ndarray:
    freq = indices_to_freq_sequences(L, M, np.arange(start, stop, dtype=np.int64))
    return np.bincount(grid_psl_counts(freq, M), minlength=L + 1)


def exhaustive_psl_cdf(L: int, M: int, phase_table=None, budget: int = ENUMERATION_BUDGET,
                       chunk: int = 2 ** 17, n_jobs=None) -> DiscreteDistribution:
    """Exact grid-PSL law over all ``M**L`` waveforms, enumerated in index order.

    ``phase_table`` may be an ``(M**L, L)`` array (or mapping from index to
    phases) applied per waveform; the law is then over float PSL values.
    """
    total = M ** L
    if total > budget:
        raise BudgetExceeded(f"M**L = {total} exceeds the enumeration budget {budget}; use monte_carlo_psl_cdf")
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if phase_table is None:
        parts = run_blocks(_exhaustive_counts_block, [(L, M, a, b) for a, b in bounds], n_jobs)
        return DiscreteDistribution.from_counts(L, np.sum(parts, axis=0))
    values = []
    for a, b in bounds:
        idx = np.arange(a, b, dtype=np.int64)
        freq = indices_to_freq_sequences(L, M, idx)
        if isinstance(phase_table, np.ndarray):
            phases = phase_table[a:b]
        else:
            phases = np.array([phase_table[int(i)] for i in idx])
        values.append(grid_psl_batch(freq, phases, M))
    return DiscreteDistribution.from_samples(np.concatenate(values))


def _mc_block(L, M, seed, block, size, kind, oversampling, phase_fn):
    rng = block_rng(seed, block)
    freq = rng.integers(0, M, size=(size, L))
    phases = None if phase_fn is None else np.asarray(phase_fn(freq))
    if kind == "grid":
        return grid_psl_batch(freq, phases, M)
    spec = WaveformSpec(L, M)
    out = np.empty(size)
    for i in range(size):
        wf = FskWaveform(spec, freq[i], None if phases is None else phases[i])
        out[i] = local_maxima_psl(sampled_af_surface(wf, oversampling))
    return out


def monte_carlo_psl_samples(L: int, M: int, n: int, seed: int = 0, phase_fn=None, kind: str = "grid",
                            oversampling: int = 16, block_size: int = 1024, n_jobs=None) -> np.ndarray:
    """PSL of ``n`` uniformly drawn waveforms; sample ``i`` depends only on ``(seed, i)``.

    ``kind`` is ``"grid"`` or ``"local-maxima"``. ``phase_fn`` maps an
    ``(n, L)`` block of frequency sequences to their phases.
    """
    if kind not in ("grid", "local-maxima"):
        raise DomainError("kind must be 'grid' or 'local-maxima'")
    sizes = block_sizes(n, block_size)
    args = [(L, M, seed, b, s, kind, oversampling, phase_fn) for b, s in enumerate(sizes)]
    parts = run_blocks(_mc_block, args, n_jobs)
    return np.concatenate(parts) if parts else np.empty(0)


def monte_carlo_psl_cdf(L: int, M: int, n: int, seed: int = 0, phase_fn=None, kind: str = "grid",
                        oversampling: int = 16, block_size: int = 1024, n_jobs=None) -> DiscreteDistribution:
    if n < 10 ** 3:
        raise DomainError("Monte Carlo PSL laws need n >= 1000")
    values = monte_carlo_psl_samples(L, M, n, seed, phase_fn, kind, oversampling, block_size, n_jobs)
    if kind == "grid" and phase_fn is None:
        counts = np.bincount(np.rint(values * L).astype(np.int64), minlength=L + 1)
        return DiscreteDistribution.from_counts(L, counts)
    return DiscreteDistribution.from_samples(values)
