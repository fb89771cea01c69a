"""Command-line front end.

Subcommands: simulate, fit, estimate, sweep, report, selftest. Relative output
paths are placed under ``$AIRATE_OUTPUT_DIR`` when that variable is set.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import io
from .constellation import build_qam
from .models import ModelFitError, fit, get_kind
from .oracles import true_gmi_oracle, true_rate_oracle
from .sim import SCENARIO_KINDS, ChannelScenario, simulate, simulate_batches
from .sweep import evaluate_batches, failures, parse_grid, plan_evaluations, rate_sweep

ENV_OUTPUT_DIR = "AIRATE_OUTPUT_DIR"
log = logging.getLogger("airate")


def _out_path(path: str | None, default: str) -> Path:
    p = Path(path or default)
    base = os.environ.get(ENV_OUTPUT_DIR)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _indexed(path: Path, i: int, count: int) -> Path:
    return path if count == 1 else path.with_name(f"{path.stem}-b{i}{path.suffix}")


def _effective_config(args) -> io.RunConfig:
    cfg = io.load_config(args.config) if getattr(args, "config", None) else io.RunConfig()
    overrides = {
        "models": io.parse_models(args.models) if getattr(args, "models", None) else None,
        "estimators": io.parse_estimators(args.estimators) if getattr(args, "estimators", None) else None,
        "split_ratio": getattr(args, "split_ratio", None),
        "seed": getattr(args, "seed", None),
        "batches": getattr(args, "batches", None),
        "n": getattr(args, "n", None),
        "mean_mode": getattr(args, "mean_mode", None),
        "constellation": getattr(args, "constellation", None),
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "input", None):
        cfg.inputs = list(args.input)
    return cfg.validate()


def _scenario_from_args(args, cfg, **changes) -> ChannelScenario:
    kw = dict(kind=args.scenario, snr_db=args.snr, n=cfg.n, seed=cfg.seed,
              rho=args.rho, spread=args.spread, phase_std=args.phase_std, gamma=args.gamma)
    kw.update(changes)
    return ChannelScenario(**kw)


def _print_rows(rows, out=None):
    out = out or sys.stdout
    out.write(f"{'scenario':<40} {'model':<8} {'est':<4} {'means':<8} {'rate':>9} {'stderr':>8}\n")
    for r in rows:
        rate = "FAILED" if "error" in r else f"{r['rate']:9.4f}"
        out.write(f"{r['scenario'][:40]:<40} {r['model']:<8} {r['estimator']:<4} "
                  f"{r['mean_mode']:<8} {rate:>9} {r['stderr']:8.4f}\n")


def _finish(rows, path, cfg_dict) -> int:
    io.write_results_csv(rows, path, cfg_dict)
    _print_rows(rows)
    print(f"wrote {path}")
    bad = failures(rows)
    for scenario, model, est, err in bad:
        print(f"FAILED {scenario} {model}/{est}: {err}", file=sys.stderr)
    return 1 if bad else 0


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _effective_config(args)
    c = build_qam(cfg.constellation)
    scenarios = cfg.scenarios if args.config and cfg.scenarios else [_scenario_from_args(args, cfg)]
    base = _out_path(args.output, "batch.bin")
    written = []
    for k, sc in enumerate(scenarios):
        target = base if len(scenarios) == 1 else base.with_name(f"{base.stem}-s{k}{base.suffix}")
        for b in range(cfg.batches):
            path = _indexed(target, b, cfg.batches)
            io.write_batch(simulate(c, sc, b), path, c)
            written.append(str(path))
    print(json.dumps({"config": cfg.to_dict(), "scenarios": [s.to_text() for s in scenarios],
                      "written": written}, sort_keys=True))
    return 0


def cmd_fit(args) -> int:
    cfg = _effective_config(args)
    if not cfg.inputs:
        raise SystemExit("fit: --input is required")
    c = build_qam(cfg.constellation)
    out = _out_path(args.output, "models")
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for path in cfg.inputs:
        batch = io.read_batch(path)
        for name in cfg.models:
            kind = get_kind(name, cfg.mean_mode)
            try:
                model = fit(kind, c, batch, min_samples=args.min_samples)
            except ModelFitError as exc:
                print(f"FAILED {path} {name}: {exc}", file=sys.stderr)
                status = 1
                continue
            target = out / f"{Path(path).stem}.{name}.model"
            io.write_model(model, target)
            print(f"wrote {target}")
    return status


def cmd_estimate(args) -> int:
    cfg = _effective_config(args)
    if not cfg.inputs:
        raise SystemExit("estimate: --input is required")
    c = build_qam(cfg.constellation)
    batches = [io.read_batch(p) for p in cfg.inputs]
    plan = plan_evaluations(cfg.models, cfg.estimators)
    label = ",".join(Path(p).name for p in cfg.inputs)
    rows = evaluate_batches(batches, plan, c, label, cfg.split_ratio, cfg.seed,
                            cfg.mean_mode, args.min_samples)
    return _finish(rows, _out_path(args.output, "estimates.csv"), cfg.to_dict())


def cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    c = build_qam(cfg.constellation)
    grids = {"snr_db": args.snr_grid, "gamma": args.gamma_grid, "phase_std": args.phase_std_grid}
    grids = {k: parse_grid(v) for k, v in grids.items() if v}
    if len(grids) > 1:
        raise SystemExit("sweep: give at most one of --snr-grid, --gamma-grid, --phase-std-grid")
    if grids:
        (key, values), = grids.items()
        scenarios = [_scenario_from_args(args, cfg, **{key: v}) for v in values]
    elif cfg.scenarios:
        scenarios = cfg.scenarios
    else:
        scenarios = [_scenario_from_args(args, cfg)]
    cfg.scenarios = scenarios
    rows = rate_sweep(scenarios, cfg.models, cfg.estimators, c, cfg.batches,
                      cfg.split_ratio, cfg.seed, cfg.mean_mode, jobs=args.jobs,
                      min_samples=args.min_samples)
    return _finish(rows, _out_path(args.output, "sweep.csv"), cfg.to_dict())


def cmd_report(args) -> int:
    for path in args.input:
        rows, config = io.read_results_csv(path)
        cols = list(dict.fromkeys(f"{r['model']}/{r['estimator']}" for r in rows))
        table = {}
        for r in rows:
            table.setdefault(r["scenario"], {})[f"{r['model']}/{r['estimator']}"] = r["rate"]
        print(f"# {path}")
        if config:
            print("# config: " + json.dumps(config, sort_keys=True))
        print("scenario".ljust(40) + "".join(c.rjust(12) for c in cols))
        for scenario, vals in table.items():
            cells = "".join(f"{vals.get(c, math.nan):12.4f}" for c in cols)
            print(scenario[:40].ljust(40) + cells)
    return 0


def cmd_selftest(args) -> int:
    """Small oracle suite: matched 2D-iidG MI and GMI against quadrature on AWGN."""
    c = build_qam(16)
    ok = True
    for snr in (6.0, 14.0):
        sc = ChannelScenario("awgn", snr, n=args.n, seed=args.seed)
        batches = simulate_batches(c, sc, 2)
        rows = evaluate_batches(batches, plan_evaluations(["2D-iidG", "GMI-2D"], ["MI", "GMI"]),
                                c, sc.label, seed=args.seed)
        truth = {"MI": true_rate_oracle(c, sc), "GMI": true_gmi_oracle(c, sc)}
        for r in rows:
            err = abs(r["rate"] - truth[r["estimator"]]) / 2
            passed = err < 0.02
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} awgn snr={snr:g} {r['model']}/{r['estimator']}: "
                  f"estimate {r['rate']:.4f} oracle {truth[r['estimator']]:.4f} "
                  f"bit/4D (|diff| per 2D {err:.4f} < 0.02)")
    return 0 if ok else 1


# -- parser -----------------------------------------------------------------

def _add_common(p, scenario=False):
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--constellation", type=int, help="QAM order (default 16)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="samples per batch")
    p.add_argument("--batches", type=int)
    if scenario:
        p.add_argument("--scenario", choices=SCENARIO_KINDS, default="awgn")
        p.add_argument("--snr", type=float, default=12.0, help="per-2D SNR in dB")
        p.add_argument("--gamma", type=float, default=0.0, help="nl_phase rotation, rad per unit energy")
        p.add_argument("--phase-std", type=float, default=0.0, help="phase noise / jitter std, rad")
        p.add_argument("--rho", type=float, default=0.0, help="corr_gauss correlation coefficient")
        p.add_argument("--spread", type=float, default=0.0, help="corr_gauss per-point variance spread")


def _add_estimation(p):
    p.add_argument("--models", help="comma-separated kinds or 'all'")
    p.add_argument("--estimators", help="comma-separated: mi,gmi")
    p.add_argument("--split-ratio", type=float)
    p.add_argument("--mean-mode", choices=("static", "adaptive"),
                   help="override the mean mode of every model kind")
    p.add_argument("--min-samples", type=int, help="minimum training samples per point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic batch files")
    _add_common(p, scenario=True)
    p.add_argument("--output", help="batch file; '-b<i>' is appended per batch")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit auxiliary channel models and write them as text")
    _add_common(p)
    _add_estimation(p)
    p.add_argument("--input", nargs="+")
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate", help="estimate rates from batch files")
    _add_common(p)
    _add_estimation(p)
    p.add_argument("--input", nargs="+", help="batch files, one per batch")
    p.add_argument("--output", help="result CSV")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="rate table over a grid of synthetic scenarios")
    _add_common(p, scenario=True)
    _add_estimation(p)
    p.add_argument("--snr-grid", help="start:step:stop or comma list")
    p.add_argument("--gamma-grid", help="start:step:stop or comma list")
    p.add_argument("--phase-std-grid", help="start:step:stop or comma list")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--output", help="result CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="print result CSVs as model-comparison tables")
    p.add_argument("--input", nargs="+", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the quick oracle suite")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"airate {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
