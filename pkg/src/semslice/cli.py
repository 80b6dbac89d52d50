"""Command-line entry point: ``semslice {train,eval,compare,plotdata,gradcheck}``.

Exit codes: 0 success, 1 usage error, 2 numerical divergence, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import nn
from .errors import DivergenceError
from .harness import (ExperimentConfig, ExportError, build_agent, compare, emit_plot_data, export,
                      import_log, load_checkpoint, load_config, run_experiment, save_checkpoint,
                      substream)
from .harness.io import PLOT_KINDS
from .harness.stats import METRICS

EXIT_OK, EXIT_USAGE, EXIT_DIVERGENCE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semslice", description="Bandwidth slicing simulator and learning agents.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train and evaluate one arm over several seeds")
    t.add_argument("config", help="config file, or a preset name (standard, urllc, embb, mmtc)")
    t.add_argument("--seeds", type=_seeds, help="comma-separated seeds (default: from config)")
    t.add_argument("--out", required=True, help="output run directory")
    t.add_argument("--agent", help="override agent_kind")
    t.add_argument("--episodes", type=int, help="override training episodes")
    t.add_argument("--quiet", action="store_true")

    e = sub.add_parser("eval", help="evaluate a checkpoint without further training")
    e.add_argument("checkpoint")
    e.add_argument("--config", help="config file (default: the echo stored in the checkpoint)")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="compare two run directories on one metric")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--metric", default="se", choices=METRICS)
    c.add_argument("--json", action="store_true", help="print the report as JSON")

    d = sub.add_parser("plotdata", help="write (episode, mean, std) series")
    d.add_argument("runs", nargs="+")
    d.add_argument("--kind", required=True, choices=sorted(PLOT_KINDS))
    d.add_argument("--out", required=True)

    g = sub.add_parser("gradcheck", help="finite-difference self-test of the network code")
    g.add_argument("--trials", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    return p


def _load_runs(run_dir) -> list:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ExportError(f"cannot read {run_dir}: not a directory")
    paths = sorted(run_dir.glob("seed_*.json"))
    if not paths:
        raise ExportError(f"cannot read {run_dir}: no seed_*.json logs")
    return [import_log(p) for p in paths]


def _write_run(log, out: Path, stem: str) -> None:
    export(log, "json", out / f"{stem}.json")
    export(log, "csv", out / f"{stem}_eval.csv", stream="eval")
    export(log, "csv", out / f"{stem}_train.csv", stream="train")


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.agent:
        cfg = cfg.with_agent(args.agent)
    if args.episodes is not None:
        cfg = replace(cfg, episodes=args.episodes)
    seeds = args.seeds or cfg.seeds
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create {out}: {exc}") from exc
    for seed in seeds:
        log = run_experiment(cfg, seed)
        _write_run(log, out, f"seed_{seed}")
        if log.agent.param_sets():
            save_checkpoint(out / f"seed_{seed}.ckpt", log.agent, log.config, cfg.episodes)
        if not args.quiet:
            agg = log.eval_aggregate
            print(f"seed {seed}: SE {agg['se']:.4f} bps/Hz, SmE {agg['sme']:.4f}, "
                  f"latency {agg['latency_ms']:.1f} ms, loss {agg['loss']:.4f} ({log.wall_clock:.1f} s)")
    return EXIT_OK


def cmd_eval(args) -> int:
    sets, meta = load_checkpoint(args.checkpoint)
    cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict(meta["config"])
    cfg = replace(cfg.with_agent(meta["agent_kind"]), episodes=0)
    agent = build_agent(cfg.resolved(), substream(args.seed, "agent"))
    agent.load_param_sets(sets)
    log = run_experiment(cfg, args.seed, agent=agent)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create {out}: {exc}") from exc
    _write_run(log, out, f"seed_{args.seed}")
    agg = log.eval_aggregate
    print(f"eval seed {args.seed}: SE {agg['se']:.4f} bps/Hz, SmE {agg['sme']:.4f}, "
          f"latency {agg['latency_ms']:.1f} ms, loss {agg['loss']:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    report = compare(_load_runs(args.run_a), _load_runs(args.run_b), args.metric)
    if args.json:
        print(json.dumps(report.__dict__))
    else:
        print(report.summary())
    return EXIT_OK


def cmd_plotdata(args) -> int:
    logs = [log for run in args.runs for log in _load_runs(run)]
    for path in emit_plot_data(logs, args.kind, args.out):
        print(path)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    acts = ["relu", "tanh", "logistic", "identity"]
    worst = 0.0
    for trial in range(args.trials):
        depth = int(rng.integers(1, 4))
        sizes = [int(v) for v in rng.integers(1, 7, size=depth + 1)]
        chosen = [acts[int(rng.integers(0, len(acts)))] for _ in range(depth)]
        if trial % 5 == 0 and sizes[-1] > 1:
            chosen[-1] = "softmax"
        params = nn.init_params(sizes, chosen, rng)
        # random biases keep the probe points away from relu kinks
        params = replace(params, biases=[rng.normal(0.0, 0.5, b.shape) for b in params.biases])
        x = rng.standard_normal((3, sizes[0]))
        err = nn.grad_check(params, x, seed=trial)
        worst = max(worst, err)
        status = "ok" if err < 1e-4 else "FAIL"
        print(f"{status} {sizes} {chosen} rel_err={err:.2e}")
    print(f"worst relative error {worst:.2e} over {args.trials} architectures")
    return EXIT_OK if worst < 1e-4 else EXIT_DIVERGENCE


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "compare": cmd_compare,
            "plotdata": cmd_plotdata, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"semslice: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"semslice: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, ExportError) as exc:
        print(f"semslice: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"semslice: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
