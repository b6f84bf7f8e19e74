"""Command line entry point: ``mlek run | gold | report``."""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from mlek.engine import RunResult, step_budget
from mlek.harness import ExperimentConfig, compute_gold_standard, emit_report
from mlek.harness.gold import GoldStandard
from mlek.harness.sweep import build_report
from mlek.problems import PROBLEMS, build_problem

log = logging.getLogger("mlek")


def _parse_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _params(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--param expects key=value, got {item!r}")
        out[key] = _parse_value(value)
    return out


def problem_for(config):
    params = dict(config.problem_params)
    if config.tau0 is not None:
        # routed through the problem parameters so the gold cache id sees it
        params["tau0"] = config.tau0
    return build_problem(config.problem, **params)


def gold_for(config, problem):
    steps = config.steps or problem.steps
    n = max([problem.gold_steps] + [step_budget(e, steps) for e in config.epsilon_sweep])
    return compute_gold_standard(problem, config.gold_seed, config.gold_particles,
                                 config.gold_replications, n)


def cmd_run(args):
    from mlek.harness.sweep import rmse_sweep

    config = ExperimentConfig.load(args.config)
    problem = problem_for(config)
    log.info("gold standard for %s", config.problem)
    gold = gold_for(config, problem)

    def progress(eps, L, J, N, runs):
        log.info("eps=%g L=%d J=%s N=%d done", eps, L, J, N)

    report, rows_runs = rmse_sweep(config, problem, gold, progress=progress)
    out = Path(args.out or config.output)
    out.mkdir(parents=True, exist_ok=True)
    cache = {
        "config": config.to_dict(),
        "gold": {"history": gold.history.tolist(), "metadata": gold.metadata},
        "rows": [
            {"epsilon": eps, "level": L, "particles": list(J), "steps": N,
             "runs": [r.to_dict() for r in runs]}
            for eps, L, J, N, runs in rows_runs
        ],
    }
    (out / "runs.json").write_text(json.dumps(cache, indent=1, default=str) + "\n")
    csv_path, _ = emit_report(report, out / "report.csv")
    slope = "n/a" if report.fit is None else f"{report.fit.slope:.4f}"
    print(f"{config.problem} {config.algorithm}: fitted slope {slope} -> {csv_path}")
    return 0


def load_cached_runs(directory):
    data = json.loads((Path(directory) / "runs.json").read_text())
    config = ExperimentConfig.from_flat(data["config"])
    hist = np.asarray(data["gold"]["history"], dtype=np.float64)
    gold = GoldStandard(hist, hist[None], data["gold"]["metadata"])
    rows_runs = [
        (row["epsilon"], row["level"], row["particles"], row["steps"],
         [RunResult.from_dict(r) for r in row["runs"]])
        for row in data["rows"]
    ]
    return config, gold, rows_runs


def cmd_report(args):
    config, gold, rows_runs = load_cached_runs(args.inp)
    report = build_report(config, gold, rows_runs)
    csv_path, _ = emit_report(report, args.out)
    print(f"report written to {csv_path}")
    return 0


def cmd_gold(args):
    problem = build_problem(args.problem, **_params(args.param))
    gold = compute_gold_standard(problem, args.seed, args.particles, args.replications, args.steps,
                                 use_cache=not args.no_cache)
    summary = dict(gold.metadata)
    summary["qoi"] = gold.history[-1].tolist()
    print(json.dumps(summary, indent=2, default=str))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mlek", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an RMSE sweep from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (defaults to the config's output)")
    run.set_defaults(func=cmd_run)

    gold = sub.add_parser("gold", help="compute or load a cached gold standard")
    gold.add_argument("--problem", required=True, choices=PROBLEMS)
    gold.add_argument("--seed", required=True, type=int)
    gold.add_argument("--particles", type=int, default=10_000)
    gold.add_argument("--replications", type=int, default=10)
    gold.add_argument("--steps", type=int, default=None)
    gold.add_argument("--param", action="append", metavar="KEY=VALUE",
                      help="problem parameter override, e.g. grid_offset=7")
    gold.add_argument("--no-cache", action="store_true")
    gold.set_defaults(func=cmd_gold)

    report = sub.add_parser("report", help="rebuild a report from cached runs")
    report.add_argument("--in", dest="inp", required=True)
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"mlek {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
