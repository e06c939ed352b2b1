"""Replicated runs, summaries, sweeps and their persisted outputs.

Outputs (all text, first line is a metadata header):

* ``trace_<k>.jsonl``: header object, then one JSON object per round with
  fields ``t, action, value, observed, regret, cumulative, phase``.
* ``summary.csv``: ``# {metadata}`` line, then one row per replication.
* ``aggregate.csv``: ``# {metadata}`` line, then ``statistic,value`` rows.
* ``sweep.csv``: ``# {metadata}`` line, then one row per (config, replication).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..algorithms import dg_repeated, run_dgetc, run_rgl
from ..env import GENERATOR_NAME, POLICY_KEY, RngStream, make_environment
from ..errors import ConfigError
from .config import ExperimentConfig
from .regret import PHASE_NAMES, RegretTrace, compute_regret

log = logging.getLogger(__name__)

TIMESTAMP_ENV = "DGETC_TIMESTAMP"
TRACE_FORMAT = "dgetc-trace/1"
TRACE_FIELDS = ("t", "action", "value", "observed", "regret", "cumulative", "phase")
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def timestamp() -> str:
    return os.environ.get(TIMESTAMP_ENV) or datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_metadata(cfg: ExperimentConfig, stream_id: Optional[int] = None) -> dict:
    meta = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "numpy": np.__version__,
        "code_version": __version__,
        "timestamp": timestamp(),
    }
    if stream_id is not None:
        meta["stream_id"] = stream_id
    return meta


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    total_regret: float
    exploration_rounds: int
    truncated: bool
    exploit_mean_regret: float
    taus: tuple[int, ...] = ()
    branches: tuple[str, ...] = ()


def run_replication(cfg: ExperimentConfig, k: int) -> RegretTrace:
    """One (environment, algorithm) pair on stream ``(cfg.seed, k)``."""
    f = cfg.build_function()
    stream = RngStream(cfg.seed, k)
    env = make_environment(f, cfg.noise, stream)
    policy = stream.child(POLICY_KEY)
    c, sigma = cfg.resolved_c(f), cfg.resolved_sigma()
    if cfg.algorithm == "dgetc":
        return run_dgetc(env, c, sigma, cfg.delta, cfg.T, rng=policy, opt_value=cfg.opt_value)
    if cfg.algorithm == "rgl":
        return run_rgl(env, c, sigma, cfg.T, rng=policy, opt_value=cfg.opt_value)
    best, _ = dg_repeated(f, cfg.repeats, policy)
    env.pull_many(np.tile(best.to_mask(), (cfg.T, 1)))
    members, values, observed = env.history()
    return compute_regret(members, f, cfg.opt_value, values=values, observed=observed)


def summarize_trace(k: int, trace: RegretTrace) -> ReplicationResult:
    return ReplicationResult(
        replication=k,
        total_regret=trace.total,
        exploration_rounds=trace.exploration_rounds,
        truncated=trace.truncated,
        exploit_mean_regret=trace.exploitation_mean_regret(),
        taus=tuple(r.tau for r in trace.commitments),
        branches=tuple(r.branch for r in trace.commitments),
    )


def write_trace(path, trace: RegretTrace, meta: dict) -> None:
    header = {
        "format": TRACE_FORMAT,
        "fields": list(TRACE_FIELDS),
        **meta,
        "opt_value": trace.opt_value,
        "truncated": trace.truncated,
        "commitments": [r.to_dict() for r in trace.commitments],
    }
    actions = ["".join(row) for row in np.where(trace.actions, "1", "0").tolist()]
    values, observed = trace.values.tolist(), trace.observed.tolist()
    regret, cumulative = trace.regret.tolist(), trace.cumulative.tolist()
    phases = [PHASE_NAMES[p] for p in trace.phase.tolist()]
    try:
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for t in range(trace.T):
                fh.write(
                    f'{{"t": {t + 1}, "action": "{actions[t]}", "value": {values[t]!r}, '
                    f'"observed": {observed[t]!r}, "regret": {regret[t]!r}, '
                    f'"cumulative": {cumulative[t]!r}, "phase": "{phases[t]}"}}\n'
                )
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc}") from exc


def read_trace(path) -> tuple[dict, list[dict]]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        records = [json.loads(line) for line in fh if line.strip()]
    return header, records


def _replicate(cfg: ExperimentConfig, k: int, out_dir: Optional[str]) -> ReplicationResult:
    trace = run_replication(cfg, k)
    if out_dir is not None and cfg.trace:
        write_trace(Path(out_dir) / f"trace_{k:04d}.jsonl", trace, run_metadata(cfg, k))
    return summarize_trace(k, trace)


@dataclass
class RunSummary:
    config: ExperimentConfig
    results: list[ReplicationResult] = field(default_factory=list)

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total_regret for r in self.results])

    def aggregates(self) -> dict:
        totals = self.totals
        n = totals.size
        std = float(totals.std(ddof=1)) if n > 1 else 0.0
        out = {
            "replications": n,
            "mean_regret": float(totals.mean()),
            "std_regret": std,
            "se_regret": std / math.sqrt(n),
            "mean_exploration_rounds": float(np.mean([r.exploration_rounds for r in self.results])),
            "truncated_fraction": float(np.mean([r.truncated for r in self.results])),
        }
        for q in QUANTILES:
            out[f"q{int(round(q * 100)):02d}_regret"] = float(np.quantile(totals, q))
        return out


def _write_csv(path, meta: dict, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(meta) + "\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_summary(out_dir, summary: RunSummary) -> None:
    out_dir = Path(out_dir)
    meta = run_metadata(summary.config)
    rows = [
        [
            r.replication,
            repr(r.total_regret),
            r.exploration_rounds,
            int(r.truncated),
            repr(r.exploit_mean_regret),
            ";".join(map(str, r.taus)),
            ";".join(r.branches),
        ]
        for r in summary.results
    ]
    _write_csv(
        out_dir / "summary.csv",
        meta,
        ["replication", "regret", "exploration_rounds", "truncated", "exploit_mean_regret", "tau", "branch"],
        rows,
    )
    _write_csv(out_dir / "aggregate.csv", meta, ["statistic", "value"], [[k, repr(v)] for k, v in summary.aggregates().items()])
    (out_dir / "config.json").write_text(json.dumps(summary.config.to_dict(), indent=2) + "\n")


def run_experiment(
    cfg: ExperimentConfig,
    out_dir=None,
    jobs: int = 1,
    stream_ids: Optional[list[int]] = None,
) -> RunSummary:
    """Run ``cfg.replications`` independent replications and optionally persist them.

    Replication ``k`` uses stream ``(cfg.seed, k)``; results are gathered in
    stream order whatever the completion order.
    """
    ids = list(range(cfg.replications)) if stream_ids is None else list(stream_ids)
    cfg.build_function()  # fail fast on bad descriptors
    target = None
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
        target = str(out_dir)
    if jobs > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate, [cfg] * len(ids), ids, [target] * len(ids)))
    else:
        results = [_replicate(cfg, k, target) for k in ids]
    summary = RunSummary(cfg, results)
    if out_dir is not None:
        write_summary(out_dir, summary)
    return summary


SWEEP_FIELDS = ["config_id", "name", "algorithm", "T", "replication", "regret", "exploration_rounds", "truncated", "status", "error"]


def sweep(configs: list, out_dir=None, jobs: int = 1) -> list[dict]:
    """Run every config; one row per (config, replication), failures recorded per cell."""
    rows = []
    for idx, cfg in enumerate(configs):
        cell_dir = None if out_dir is None else Path(out_dir) / f"cell_{idx:03d}"
        try:
            if not isinstance(cfg, ExperimentConfig):
                cfg = ExperimentConfig.from_dict(cfg)
            summary = run_experiment(cfg, cell_dir, jobs=jobs)
        except (ConfigError, ValueError, OSError, RuntimeError) as exc:
            log.warning("sweep cell %d failed: %s", idx, exc)
            name = cfg.name if isinstance(cfg, ExperimentConfig) else str(dict(cfg).get("name", ""))
            rows.append({k: "" for k in SWEEP_FIELDS} | {"config_id": idx, "name": name, "status": "error", "error": str(exc)})
            continue
        for r in summary.results:
            rows.append(
                {
                    "config_id": idx,
                    "name": cfg.name,
                    "algorithm": cfg.algorithm,
                    "T": cfg.T,
                    "replication": r.replication,
                    "regret": r.total_regret,
                    "exploration_rounds": r.exploration_rounds,
                    "truncated": int(r.truncated),
                    "status": "ok",
                    "error": "",
                }
            )
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        meta = {"cells": len(configs), "generator": GENERATOR_NAME, "numpy": np.__version__,
                "code_version": __version__, "timestamp": timestamp()}
        _write_csv(Path(out_dir) / "sweep.csv", meta, SWEEP_FIELDS, [[row[k] for k in SWEEP_FIELDS] for row in rows])
    return rows
