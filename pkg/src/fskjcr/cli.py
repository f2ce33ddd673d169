"""Command-line driver: ``fskjcr {af,sl-dist,optimize,ser,papr}``.

Every run writes its outputs plus ``config.json`` (the fully resolved
arguments) into ``--out-dir``; ``fskjcr --config <out-dir>/config.json``
reproduces it. Exit codes: 0 success, 2 input error, 3 budget or
precondition error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import ambiguity, comms, optimizer, stats
from ._io import write_csv, write_json
from ._parallel import block_rng
from .core import DomainError, FskWaveform, WaveformSpec, load_waveform, papr, sample_envelope

log = logging.getLogger("fskjcr")


class PreconditionError(Exception):
    """Maps to exit code 3."""


def _add_spec_args(p):
    p.add_argument("--L", type=int, help="number of sub-pulses")
    p.add_argument("--M", type=int, help="modulation order")
    p.add_argument("--T", type=float, default=1.0, help="sub-pulse duration in seconds")
    p.add_argument("--freq-step-multiple", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fskjcr", description="FSK radar/communications waveform toolkit")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--config", help="JSON file of argument values (e.g. a previous config.json)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("af", help="ambiguity surface, cuts and PSL summary of one waveform")
    p.add_argument("--waveform", help="waveform JSON file")
    _add_spec_args(p)
    p.add_argument("--index", type=int, help="waveform index (with --L/--M)")
    p.add_argument("--phase-table", help="phase-table JSON supplying phases for --index")
    p.add_argument("--oversampling", type=int, default=ambiguity.DEFAULT_OVERSAMPLING)

    p = sub.add_parser("sl-dist", help="sidelobe and PSL distributions with W1 distances")
    _add_spec_args(p)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo sample count (0: exhaustive)")
    p.add_argument("--local-maxima", action="store_true", help="also sample the local-maxima PSL law")
    p.add_argument("--oversampling", type=int, default=ambiguity.DEFAULT_OVERSAMPLING)
    p.add_argument("--literal-k0", action="store_true", help="apply the binomial law to k=0 points too")
    p.add_argument("--exact-pmf", action="store_true", help="use dependence-exact per-point laws")
    p.add_argument("--pmfs", action="store_true", help="write every per-point PMF")

    p = sub.add_parser("optimize", help="min-max PSL phase optimization over a waveform set")
    _add_spec_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true")
    group.add_argument("--sample", type=int)
    group.add_argument("--indices", type=int, nargs="*")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--tolerance", type=float, default=1e-10)

    p = sub.add_parser("ser", help="Monte Carlo symbol error rate curves")
    _add_spec_args(p)
    p.add_argument("--detectors", nargs="+", default=["coherent-before", "noncoherent-after"], choices=comms.DETECTORS)
    p.add_argument("--channel", choices=["awgn", "rician"], default="awgn")
    p.add_argument("--N", type=int, default=1, help="receive antennas")
    p.add_argument("--K", type=float, default=1.0, help="Rician K factor")
    p.add_argument("--snr-db", type=float, nargs="+", default=[0.0, 4.0, 8.0, 12.0])
    p.add_argument("--trials", type=int, default=10 ** 5, help="symbol decisions per SNR point")
    p.add_argument("--phase-table", help="phase-table JSON from the optimize subcommand")
    p.add_argument("--targets", type=float, nargs="+", default=[1e-3, 1e-4])

    p = sub.add_parser("papr", help="peak-to-average power ratio of waveforms")
    p.add_argument("--waveform", help="waveform JSON file")
    _add_spec_args(p)
    p.add_argument("--index", type=int)
    p.add_argument("--random", type=int, default=0, help="also evaluate this many random waveforms")
    p.add_argument("--sample-rate", type=float)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        values = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read config {known.config}: {exc}") from exc
    command = values.pop("command", None)
    values.pop("config", None)
    if command and not any(a in COMMANDS for a in argv):
        argv = list(argv) + [command]
    args = parser.parse_args(argv)
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in values.items():
        if key not in explicit:
            setattr(args, key, value)
    return args


def _spec(args) -> WaveformSpec:
    if args.L is None or args.M is None:
        raise DomainError("--L and --M are required")
    return WaveformSpec(args.L, args.M, args.T, args.freq_step_multiple)


def _load_table(path):
    if not path:
        return None, None
    if not Path(path).exists():
        raise PreconditionError(f"phase table {path} not found")
    return optimizer.load_phase_table(path)


def _waveform(args) -> FskWaveform:
    if args.waveform:
        if not Path(args.waveform).exists():
            raise DomainError(f"waveform file {args.waveform} not found")
        try:
            return load_waveform(args.waveform)
        except ValueError as exc:
            raise DomainError(f"bad waveform file {args.waveform}: {exc}") from exc
    if args.index is None:
        raise DomainError("give --waveform or --L/--M/--index")
    spec = _spec(args)
    phases = None
    if getattr(args, "phase_table", None):
        _, table = _load_table(args.phase_table)
        if args.index not in table:
            raise PreconditionError(f"waveform {args.index} is not in the phase table")
        phases = table[args.index]
    return FskWaveform.from_index(spec, args.index, phases)


def cmd_af(args, out: Path) -> dict:
    wf = _waveform(args)
    spec = wf.spec
    surface = ambiguity.sampled_af_surface(wf, args.oversampling)
    surface.to_csv(out / "af_surface.csv")
    taus = surface.delays
    write_csv(out / "zero_doppler_cut.csv", ["tau_seconds", "magnitude"], [taus, ambiguity.zero_doppler_cut(wf, taus)])
    omegas = surface.dopplers
    write_csv(out / "zero_delay_cut.csv", ["omega_rad_per_s", "magnitude"], [omegas, ambiguity.zero_delay_cut(spec, omegas)])
    summary = {
        "L": spec.L,
        "M": spec.M,
        "freq_indices": wf.freq_indices,
        "phases_rad": wf.phases,
        "zero_phase_grid_psl": ambiguity.grid_psl(wf.with_phases(None)),
        "grid_psl": ambiguity.grid_psl(wf),
        "local_maxima_psl": ambiguity.local_maxima_psl(surface) if args.oversampling >= 8 else None,
        "papr_ratio": papr(sample_envelope(wf)),
    }
    write_json(out / "summary.json", summary)
    return summary


def cmd_sl_dist(args, out: Path) -> dict:
    spec = _spec(args)
    L, M = spec.L, spec.M
    k0_mode = "literal" if args.literal_k0 else "exact"
    method = "exact" if args.exact_pmf else "binomial"
    if args.pmfs:
        for p in ambiguity.domain_points(L, M):
            stats.sl_pmf(L, M, p.k, p.r, k0_mode, method).to_csv(out / "pmf" / f"sl_k{p.k}_r{p.r}.csv")
    approx = stats.approx_psl_cdf(L, M, k0_mode, method)
    approx.to_csv(out / "approx_psl_cdf.csv", "cdf")
    if args.mc:
        grid = stats.monte_carlo_psl_cdf(L, M, args.mc, args.seed, n_jobs=args.threads)
    else:
        try:
            grid = stats.exhaustive_psl_cdf(L, M, n_jobs=args.threads)
        except stats.BudgetExceeded as exc:
            raise PreconditionError(f"{exc} (pass --mc N)") from exc
    grid.to_csv(out / "grid_psl_cdf.csv", "cdf")
    report = {"grid_vs_approx": stats.wasserstein_report(grid, approx)}
    if args.local_maxima:
        n = args.mc or 10 ** 4
        lm = stats.monte_carlo_psl_cdf(L, M, n, args.seed, kind="local-maxima",
                                       oversampling=args.oversampling, n_jobs=args.threads)
        lm.to_csv(out / "local_maxima_psl_cdf.csv", "cdf")
        report["local_maxima_vs_grid"] = stats.wasserstein_report(lm, grid)
        report["local_maxima_vs_grid"]["horizontal_gap"] = stats.horizontal_gap(lm, grid)
        report["local_maxima_vs_approx"] = stats.wasserstein_report(lm, approx)
    report["k0_mode"] = k0_mode
    report["pmf_method"] = method
    write_json(out / "wasserstein.json", report)
    return report


def cmd_optimize(args, out: Path) -> dict:
    spec = _spec(args)
    if args.all:
        if spec.num_waveforms > stats.ENUMERATION_BUDGET:
            raise PreconditionError("--all exceeds the enumeration budget; use --sample")
        indices = range(spec.num_waveforms)
    elif args.sample is not None:
        indices = optimizer.sample_indices(spec, args.sample, args.seed)
    elif args.indices is not None:
        indices = args.indices
    else:
        raise DomainError("give one of --all, --sample N or --indices")
    config = optimizer.OptimizerConfig(args.restarts, args.max_iterations, args.tolerance, seed=args.seed)
    batch = optimizer.batch_optimize(spec, indices, config, n_jobs=args.threads)
    batch.to_csv(out / "batch.csv")
    optimizer.save_phase_table(spec, batch.phase_table(), out / "phases.json")
    summary = batch.summary()
    write_json(out / "summary.json", summary)
    return summary


def cmd_ser(args, out: Path) -> dict:
    spec = _spec(args)
    if args.trials < 1000:
        raise DomainError("--trials must be at least 1000")
    table_spec, table = _load_table(args.phase_table)
    if table_spec is not None and (table_spec.L, table_spec.M) != (spec.L, spec.M):
        raise DomainError("phase table was built for a different (L, M)")
    if table is None and any(d.endswith("after") for d in args.detectors):
        raise PreconditionError("the *-after detectors need --phase-table")
    model = comms.ChannelModel(args.channel, args.N, args.K)
    curves = {}
    for det in args.detectors:
        try:
            curves[det] = comms.simulate_ser(spec, det, model, args.snr_db, args.trials, args.seed, table)
        except DomainError as exc:
            raise PreconditionError(str(exc)) from exc
        curves[det].to_csv(out / f"ser_{det}.csv")
    gaps = {}
    for a in curves:
        for b in curves:
            if a != b:
                gaps[f"{a}_minus_{b}"] = {f"{t:g}": comms.snr_gap(curves[a], curves[b], t) for t in args.targets}
    report = {"snr_gap_db": gaps, "snr_at_ser_db": {d: {f"{t:g}": comms.snr_at_ser(c, t) for t in args.targets}
                                                   for d, c in curves.items()}}
    write_json(out / "gaps.json", report)
    return report


def cmd_papr(args, out: Path) -> dict:
    waveforms = []
    if args.waveform or args.index is not None:
        waveforms.append(_waveform(args))
    if args.random:
        spec = _spec(args)
        freq = block_rng(args.seed, 0).integers(0, spec.M, size=(args.random, spec.L))
        ph = block_rng(args.seed, 1).uniform(0, 2 * np.pi, size=(args.random, spec.L))
        waveforms += [FskWaveform(spec, f, p) for f, p in zip(freq, ph)]
    if not waveforms:
        raise DomainError("nothing to evaluate: give --waveform, --index or --random")
    values = [papr(sample_envelope(w, args.sample_rate)) for w in waveforms]
    summary = {"count": len(values), "papr_ratio_max": max(values), "papr_ratio_mean": float(np.mean(values)),
               "papr_ratio": values}
    write_json(out / "papr.json", summary)
    return summary


COMMANDS = {"af": cmd_af, "sl-dist": cmd_sl_dist, "optimize": cmd_optimize, "ser": cmd_ser, "papr": cmd_papr}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        resolved = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
        write_json(out / "config.json", resolved)
        result = COMMANDS[args.command](args, out)
        log.info(json.dumps(result, default=str))
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
