"""Command-line entry point.

    nnlmf simulate  [--config F] [--seed S] [--out DIR] [--format csv|json] [--paper-scale]
    nnlmf model     ...
    nnlmf compare   ...
    nnlmf stability ...
    nnlmf moments   ...

Every run writes ``manifest.json`` next to its tables.  Passing that manifest
back through ``--config`` (with the subcommand it records) reproduces the
tables byte for byte.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import (
    EMSE,
    MEAN_WEIGHTS,
    MOMENTS,
    STABILITY_MAP,
    ExperimentConfig,
    parse_config,
    render_config,
)
from .montecarlo import EnsembleConfig, compare_model_vs_simulation, run_ensemble
from .report import SCALAR_COLUMNS, STABILITY_COLUMNS, CurveTable, Table
from .signals import noise_moments, snr_db
from .stability import GridSpec, sweep
from .theory import TheoryConfig, predict_curves

log = logging.getLogger("nnlmf")

COMMANDS = ("simulate", "model", "compare", "stability", "moments")
_FORCED_KIND = {"stability": STABILITY_MAP, "moments": MOMENTS}


class ExperimentFailed(RuntimeError):
    """Raised after outputs were written when part of the run failed."""


def _ensemble_config(cfg: ExperimentConfig) -> EnsembleConfig:
    return EnsembleConfig(cfg.system, cfg.mu, cfg.initial_weights, cfg.n_iters, cfg.n_realizations,
                          cfg.master_seed, cfg.algorithm, cfg.divergence_threshold)


def _curves(cfg: ExperimentConfig, command: str, out: Path, workers: int) -> list[Path]:
    fmt = cfg.output.format
    iters = range(0, cfg.n_iters, cfg.output.subsample)
    M = len(cfg.w_star)
    sim = model = None
    if command in ("simulate", "compare"):
        sim = run_ensemble(_ensemble_config(cfg), workers=workers)
    if command in ("model", "compare"):
        tcfg = TheoryConfig.from_system(cfg.system, cfg.mu, cfg.mean_trace)
        model = predict_curves(tcfg, cfg.initial_weights, cfg.n_iters)

    table = CurveTable()
    if cfg.experiment == MEAN_WEIGHTS:
        for tag, res in (("sim", sim), ("model", model)):
            if res is not None:
                for i in range(M):
                    table.add(f"{tag}_w{i}", res.mean_weights[:, i], iters)
    else:
        if sim is not None:
            table.add("sim_emse", sim.emse, iters, with_db=True)
            table.add("sim_emse_trace", sim.emse_trace, iters, with_db=True)
        if model is not None:
            table.add("model_emse", model.emse, iters, with_db=True)
    written = [table.write(out / "curves", fmt)]

    summary = Table(SCALAR_COLUMNS)
    if sim is not None:
        summary.rows += [["n_realizations", sim.n_realizations], ["n_diverged", sim.n_diverged]]
    if model is not None:
        summary.rows.append(["model_indefinite_at", -1 if model.indefinite_at is None else model.indefinite_at])
    if sim is not None and model is not None:
        report = compare_model_vs_simulation(sim, model, cfg.burn_in, cfg.tail_window)
        summary.rows += [[k, v] for k, v in report.summary().items()]
        dev = Table(("iteration", "max_weight_dev", "emse_dev_db"))
        for n in iters:
            dev.rows.append([n, float(report.weight_dev[n]), float(report.emse_dev_db[n])])
        written.append(dev.write(out / "deviations", fmt))
    written.append(summary.write(out / "summary", fmt))
    return written


def _stability(cfg: ExperimentConfig, out: Path, workers: int) -> tuple[list[Path], bool]:
    template = _ensemble_config(cfg)
    spec = GridSpec(cfg.stability.mu_values, cfg.stability.d_values, cfg.stability.n_realizations,
                    cfg.stability.n_iters, cfg.master_seed)
    grid = sweep(spec, template, workers=workers)
    table = Table(STABILITY_COLUMNS)
    for c in grid.cells:
        table.rows.append([c.mu, c.d, c.k, c.classification, c.divergence_fraction])
    for c in grid.failed:
        log.error("stability cell mu=%g d=%g failed: %s", c.mu, c.d, c.error)
    return [table.write(out / "stability", cfg.output.format)], bool(grid.failed)


def _moments(cfg: ExperimentConfig, out: Path) -> list[Path]:
    s2, m4, m6 = noise_moments(cfg.noise)
    table = Table(SCALAR_COLUMNS, [
        ["sigma_z2", s2], ["m4", m4], ["m6", m6],
        ["snr_db", snr_db(cfg.noise, cfg.input.process_variance)],
    ])
    return [table.write(out / "moments", cfg.output.format)]


def manifest(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "library_version": __version__,
    }


def run_experiment(cfg: ExperimentConfig, command: str = "compare", workers: int = 1) -> list[Path]:
    """Run ``command`` for ``cfg`` and write its tables plus a manifest.

    Raises :class:`ExperimentFailed` (after writing) if stability cells failed.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    if command in _FORCED_KIND:
        cfg = replace(cfg, experiment=_FORCED_KIND[command])
    elif cfg.experiment not in (MEAN_WEIGHTS, EMSE):
        raise ValueError(f"'{command}' needs experiment mean_weights or emse, got {cfg.experiment!r}")
    out = Path(cfg.output.path)
    out.mkdir(parents=True, exist_ok=True)
    failed = False
    if cfg.experiment == STABILITY_MAP:
        written, failed = _stability(cfg, out, workers)
    elif cfg.experiment == MOMENTS:
        written = _moments(cfg, out)
    else:
        written = _curves(cfg, command, out, workers)
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest(cfg, command), indent=2) + "\n", encoding="utf-8")
    written.append(mpath)
    if failed:
        raise ExperimentFailed("one or more stability cells failed")
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnlmf", description="NNLMF adaptive filter experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "Monte Carlo ensemble curves"),
        ("model", "analytical model curves"),
        ("compare", "model and simulation side by side, with deviations"),
        ("stability", "empirical convergence map over (mu, d)"),
        ("moments", "noise moments and SNR"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="JSON config or a previous run's manifest.json")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--format", choices=("csv", "json"), help="table format (overrides the config)")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the full published realization counts and stability grid sizes")
        p.add_argument("--workers", type=int, default=1, help="worker threads (does not change results)")
        p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config.read_text(encoding="utf-8")) if args.config else parse_config("{}")
    if args.seed is not None:
        if args.seed < 0:
            raise ValueError("--seed must be nonnegative")
        cfg = replace(cfg, master_seed=args.seed)
    if args.out is not None or args.format is not None:
        cfg = replace(cfg, output=replace(cfg.output, path=args.out or cfg.output.path,
                                          format=args.format or cfg.output.format))
    if args.paper_scale:
        cfg = cfg.paper_scale()
    # round-trip so CLI overrides pass the same validation as file input
    return parse_config(render_config(cfg))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(render_config(cfg))
            return 0
        for path in run_experiment(cfg, args.command, workers=max(1, args.workers)):
            print(path)
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status
        print(f"nnlmf: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
