"""Log export/import, plot series and agent checkpoints."""
from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from .. import paramfile
from ..env import StepMetrics
from .runner import AGGREGATE_FIELDS, MetricsLog, aggregate

PER_SLICE = ("sme", "ssr", "latency_ms", "loss")
PLOT_KINDS = {"reward_vs_episode": "reward", "se_per_usecase": "se",
              "latency": "latency_ms", "packet_loss": "loss"}
_INT_FIELDS = {"arrived", "delivered", "dropped", "queued", "hi_arrived", "hi_dropped"}
_CORE = ("se", "reward", "sme", "ssr", "latency_ms", "loss", "rates")


class ExportError(OSError):
    pass


def _io_guard(path: Path, action: str):
    class _Guard:
        def __enter__(self):
            return self

        def __exit__(self, typ, exc, tb):
            if exc is not None and isinstance(exc, OSError) and not isinstance(exc, ExportError):
                raise ExportError(f"cannot {action} {path}: {exc.strerror or exc}") from exc
            return False
    return _Guard()


def csv_header(n_slices: int) -> list[str]:
    cols = ["slot", "reward", "se"]
    for key in PER_SLICE:
        cols += [f"{key}_{i}" for i in range(n_slices)]
    return cols


def write_csv(records: list[StepMetrics], n_slices: int, path) -> Path:
    """One row per slot; floats in shortest round-trip form."""
    path = Path(path)
    with _io_guard(path, "write"):
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(n_slices))
            for t, m in enumerate(records):
                row = [t, repr(float(m.reward)), repr(float(m.se))]
                for key in PER_SLICE:
                    row += [repr(float(v)) for v in getattr(m, key)]
                w.writerow(row)
    return path


def read_csv(path) -> list[StepMetrics]:
    path = Path(path)
    with _io_guard(path, "read"):
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    n = (len(rows[0]) - 3) // len(PER_SLICE)
    out = []
    for row in rows[1:]:
        vals = [float(v) for v in row[1:]]
        per = {k: np.array(vals[2 + j * n: 2 + (j + 1) * n]) for j, k in enumerate(PER_SLICE)}
        out.append(StepMetrics(se=vals[1], reward=vals[0], rates=np.zeros(0), **per))
    return out


def _records_to_columns(records: list[StepMetrics], full: bool) -> dict:
    names = [f.name for f in fields(StepMetrics)] if full else list(_CORE)
    cols = {}
    for name in names:
        vals = [getattr(m, name) for m in records]
        cols[name] = [v.tolist() if isinstance(v, np.ndarray) else v for v in vals]
    return cols


def _columns_to_records(cols: dict) -> list[StepMetrics]:
    if not cols:
        return []
    n = len(cols["se"])
    out = []
    for t in range(n):
        kw = {}
        for name, vals in cols.items():
            v = vals[t]
            if isinstance(v, list):
                v = np.array(v, dtype=np.int64 if name in _INT_FIELDS else
                             (bool if name == "degenerate" else float))
            kw[name] = v
        out.append(StepMetrics(**kw))
    return out


def log_to_dict(log: MetricsLog) -> dict:
    return {
        "config": log.config,
        "seed": log.seed,
        "reward_tag": log.reward_tag,
        "slots_per_episode": log.slots_per_episode,
        "wall_clock": log.wall_clock,
        "episode_aggregates": log.episode_aggregates,
        "eval_aggregate": log.eval_aggregate,
        "extras": log.extras,
        "train": _records_to_columns(log.train, full=False),
        "eval": _records_to_columns(log.eval, full=True),
    }


def log_from_dict(d: dict) -> MetricsLog:
    return MetricsLog(config=d["config"], seed=d["seed"], reward_tag=d["reward_tag"],
                      slots_per_episode=d["slots_per_episode"],
                      train=_columns_to_records(d["train"]), eval=_columns_to_records(d["eval"]),
                      episode_aggregates=d["episode_aggregates"], eval_aggregate=d["eval_aggregate"],
                      wall_clock=d["wall_clock"], extras=d.get("extras", {}))


def export(log: MetricsLog, fmt: str, path, stream: str = "eval") -> Path:
    """``csv`` writes one stream (eval by default); ``json`` writes the whole log."""
    path = Path(path)
    if fmt == "csv":
        return write_csv(getattr(log, stream), log.n_slices, path)
    if fmt == "json":
        with _io_guard(path, "write"):
            path.write_text(json.dumps(log_to_dict(log), separators=(",", ":")))
        return path
    raise ValueError(f"unknown export format {fmt!r}")


def import_log(path) -> MetricsLog:
    path = Path(path)
    with _io_guard(path, "read"):
        text = path.read_text()
    return log_from_dict(json.loads(text))


def recompute_aggregates(log: MetricsLog) -> tuple[list[dict], dict]:
    eps = len(log.train) // log.slots_per_episode
    return [aggregate(log.episode_stream(e)) for e in range(eps)], aggregate(log.eval)


# ---------------------------------------------------------------------------
# plot series

def plot_series(logs: list[MetricsLog], kind: str) -> np.ndarray:
    """``(episode, mean, std)`` rows across seeds of one per-episode aggregate."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    if not logs:
        raise ValueError("no logs given")
    counts = {log.n_slices for log in logs}
    if len(counts) > 1:
        raise ValueError(f"logs mix slice counts {sorted(counts)}")
    key = PLOT_KINDS[kind]
    n_ep = min(len(log.episode_aggregates) for log in logs)
    vals = np.array([[log.episode_aggregates[e][key] for e in range(n_ep)] for log in logs])
    vals = vals.reshape(len(logs), n_ep)
    return np.column_stack([np.arange(n_ep), vals.mean(axis=0), vals.std(axis=0)])


def emit_plot_data(logs: list[MetricsLog], kind: str, out_dir) -> list[Path]:
    """Write one ``<kind>[_<config name>].csv`` per use case found in ``logs``."""
    out_dir = Path(out_dir)
    groups: dict[str, list[MetricsLog]] = {}
    for log in logs:
        groups.setdefault(log.config["name"], []).append(log)
    counts = {log.n_slices for log in logs}
    if len(counts) > 1:
        raise ValueError(f"logs mix slice counts {sorted(counts)}")
    written = []
    with _io_guard(out_dir, "write into"):
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, group in sorted(groups.items()):
            series = plot_series(group, kind)
            path = out_dir / (f"{kind}.csv" if len(groups) == 1 else f"{kind}_{name}.csv")
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["episode", "mean", "std"])
                for x, m, s in series:
                    w.writerow([int(x), repr(float(m)), repr(float(s))])
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, agent, config: dict, episodes: int) -> Path:
    path = Path(path)
    meta = {"agent_kind": config["agent_kind"], "config": config, "episodes": episodes}
    with _io_guard(path, "write"):
        paramfile.save(path, agent.param_sets(), meta)
    return path


def load_checkpoint(path):
    path = Path(path)
    with _io_guard(path, "read"):
        return paramfile.load(path)


__all__ = ["AGGREGATE_FIELDS", "ExportError", "PLOT_KINDS", "csv_header", "emit_plot_data", "export",
           "import_log", "load_checkpoint", "log_from_dict", "log_to_dict", "plot_series", "read_csv",
           "recompute_aggregates", "save_checkpoint", "write_csv"]
