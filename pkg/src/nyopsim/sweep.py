"""Replicated sweeps over the forecast window and scenario, plus report writers."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import Scenario, SimConfig, SupplyChain
from .errors import ConfigInvalid, InsufficientReplications
from .metrics import METRIC_NAMES, AggregateReport, TierMetrics, aggregate, tier_metrics

__all__ = ["SweepSpec", "SweepResult", "cell_seed", "run_cell", "run_sweep", "emit", "FORMATS"]

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SweepSpec:
    t_values: tuple[int, ...] = tuple(range(5, 16))
    scenarios: tuple[str, ...] = ("baseline", "nyop")
    replications: int = 30
    base_seed: int = 0
    base: SimConfig = field(default_factory=lambda: SimConfig(horizon=1000, warmup=100))
    convention: str = "mixed"
    workers: int = 1
    # write a JSONL message trace for replication 0 of every cell into this directory
    trace_dir: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_values", tuple(int(t) for t in self.t_values))
        object.__setattr__(self, "scenarios", tuple(Scenario(s).value for s in self.scenarios))
        if not self.t_values:
            raise ConfigInvalid("t_values must not be empty")
        if not self.scenarios:
            raise ConfigInvalid("at least one scenario is required")
        if self.replications < 2:
            raise InsufficientReplications(
                f"need >= 2 replications for a standard deviation, got {self.replications}"
            )
        if self.convention not in ("mixed", "baseline"):
            raise ConfigInvalid(f"unknown change convention {self.convention!r}")

    def config(self, T: int, scenario: str, rep: int) -> SimConfig:
        return replace(
            self.base,
            window=T,
            scenario=Scenario(scenario),
            seed=cell_seed(self.base_seed, T),
            replication=rep,
        )


def cell_seed(base_seed: int, T: int) -> int:
    """64-bit demand seed for every replication of window ``T``.

    Deliberately independent of the scenario so baseline and NYOP runs of
    the same (T, replication) consume identical demand.
    """
    state = np.random.SeedSequence([base_seed, T]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    T: int
    rep: int
    metrics: tuple[TierMetrics, ...]


def run_cell(cfg: SimConfig, trace_path: Optional[str] = None) -> RunRecord:
    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8") as fh:
            log = SupplyChain(cfg, trace=fh).run()
    else:
        log = SupplyChain(cfg).run()
    return RunRecord(cfg.scenario.value, cfg.window, cfg.replication, tuple(tier_metrics(log)))


def _run_job(job: tuple[SimConfig, Optional[str]]) -> RunRecord:
    return run_cell(*job)


@dataclass
class SweepResult:
    spec: SweepSpec
    report: AggregateReport
    records: list[RunRecord]

    @property
    def n_runs(self) -> int:
        return len(self.records)


def run_sweep(spec: SweepSpec) -> SweepResult:
    jobs = []
    for T in spec.t_values:
        for rep in range(spec.replications):
            for scenario in spec.scenarios:
                cfg = spec.config(T, scenario, rep)
                trace = None
                if spec.trace_dir is not None and rep == 0:
                    os.makedirs(spec.trace_dir, exist_ok=True)
                    trace = os.path.join(spec.trace_dir, f"trace_T{T}_{scenario}.jsonl")
                jobs.append((cfg, trace))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_job, jobs, chunksize=4))
    else:
        records = [_run_job(job) for job in jobs]
    records.sort(key=lambda r: (r.scenario, r.T, r.rep))
    flat = ((r.scenario, r.T, r.rep, tm) for r in records for tm in r.metrics)
    return SweepResult(spec, aggregate(flat, convention=spec.convention), records)


# -- writers -----------------------------------------------------------------

_LABELS = {"baseline": "without_nyop", "nyop": "with_nyop"}


def _f4(x: float) -> str:
    return f"{x:.4f}"


def _f2(x: float) -> str:
    return f"{x:.2f}"


def summary_rows(report: AggregateReport, k: int) -> list[list[str]]:
    """Table rows for tier ``k``: one block per metric, each closed by a Mean of Change row."""
    paired = report.paired()
    header = ["metric", "T"]
    for s in report.scenarios:
        header += [f"{_LABELS[s]}_mean", f"{_LABELS[s]}_sd"]
    if paired:
        header += ["change_mean_pct", "change_sd_pct"]
    rows = [header]
    for metric in METRIC_NAMES:
        for T in report.t_values:
            row = [metric, str(T)]
            for s in report.scenarios:
                c = report.cell(s, metric, k, T)
                row += [_f4(c.mean), _f4(c.sd)]
            if paired:
                row += [_f2(v) for v in report.change(metric, k, T)]
            rows.append(row)
        if paired:
            footer = [metric, "Mean of Change"] + [""] * (2 * len(report.scenarios))
            footer += [_f2(v) for v in report.mean_change(metric, k)]
            rows.append(footer)
    return rows


def curve_rows(report: AggregateReport, metric: str) -> list[list[str]]:
    rows = [["k", "scenario", "T", "mean", "sd"]]
    for k in report.tiers:
        for s in report.scenarios:
            for T in report.t_values:
                c = report.cell(s, metric, k, T)
                rows.append([str(k), s, str(T), _f4(c.mean), _f4(c.sd)])
    return rows


def replication_rows(records: Sequence[RunRecord]) -> list[list[str]]:
    rows = [["scenario", "T", "rep", "k", "bwe", "fr_empirical", "fr_analytic"]]
    for r in records:
        for tm in r.metrics:
            rows.append([r.scenario, str(r.T), str(r.rep), str(tm.k),
                         _f4(tm.bwe), _f4(tm.fr_empirical), _f4(tm.fr_analytic)])
    return rows


def _csv_text(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    return buf.getvalue()


def report_dict(result: SweepResult) -> dict:
    report = result.report
    out: dict = {"spec": _spec_dict(result.spec), "scenarios": {}, "changes": {}}
    for (scenario, metric, k, T), c in report.cells.items():
        node = out["scenarios"].setdefault(scenario, {}).setdefault(f"k{k}", {}).setdefault(str(T), {})
        node[metric] = {"mean": c.mean, "sd": c.sd, "n": c.n}
    if report.paired():
        for metric in METRIC_NAMES:
            for k in report.tiers:
                node = out["changes"].setdefault(metric, {}).setdefault(f"k{k}", {})
                for T in report.t_values:
                    m, s = report.change(metric, k, T)
                    node[str(T)] = {"mean_pct": m, "sd_pct": s}
                m, s = report.mean_change(metric, k)
                node["mean_of_change"] = {"mean_pct": m, "sd_pct": s}
    out["replications"] = [
        {"scenario": r.scenario, "T": r.T, "rep": r.rep, "metrics": [asdict(tm) for tm in r.metrics]}
        for r in result.records
    ]
    return out


def _spec_dict(spec: SweepSpec) -> dict:
    d = asdict(spec)
    d["base"]["scenario"] = spec.base.scenario.value
    return d


def emit(result: SweepResult, out_dir: str | os.PathLike, fmt: str = "csv") -> list[Path]:
    """Write the sweep outputs; returns the paths written.

    csv: summary_k<k>.csv per tier, bwe_curve.csv, fr_curve.csv and
    replications.csv. json: a single report.json.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    # render everything before touching the filesystem so failures leave no partial output
    files: dict[str, str] = {}
    if fmt == "csv":
        for k in result.report.tiers:
            files[f"summary_k{k}.csv"] = _csv_text(summary_rows(result.report, k))
        files["bwe_curve.csv"] = _csv_text(curve_rows(result.report, "bwe"))
        files["fr_curve.csv"] = _csv_text(curve_rows(result.report, "fr_empirical"))
        files["replications.csv"] = _csv_text(replication_rows(result.records))
    else:
        files["report.json"] = json.dumps(report_dict(result), indent=2, sort_keys=True) + "\n"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        path = out / name
        path.write_text(files[name], encoding="utf-8", newline="")
        written.append(path)
    return written
