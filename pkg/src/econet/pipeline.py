"""End-to-end orchestration: ingest -> slice -> graph -> metrics -> export."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from array import array
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import export
from .config import PipelineConfig
from .graph import CUMULATIVE, EcosystemGraph, FileAuthorIndex, FileFilterReport, build_graph
from .ingest import (
    CommitRecord,
    LanguageConfig,
    ingest_stream,
    load_alias_map,
    load_fork_map,
    parse_commit_line,
    read_lines,
)
from .metrics import UNION, NetworkMetrics, network_metrics, node_metrics
from .slicing import SlicePlan, SliceSpec, plan_slices

log = logging.getLogger(__name__)

ALL_LANGUAGES = "all"


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class SliceResult:
    index: int
    spec: SliceSpec
    network: NetworkMetrics
    file_filter: FileFilterReport
    seconds: float


@dataclass
class LanguageReport:
    language: str
    status: str = "ok"
    error: str | None = None
    stage: str | None = None
    ingest: dict = field(default_factory=dict)
    plan: SlicePlan | None = None
    slices: list[SliceResult] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def conserved(self) -> bool:
        if self.plan is None:
            return True
        emitted = self.ingest.get("records_emitted", 0)
        return sum(s.commit_count for s in self.plan.slices) == emitted == self.plan.total_commits

    def as_dict(self) -> dict:
        return {
            "language": self.language,
            "status": self.status,
            "stage": self.stage,
            "error": self.error,
            "ingest": self.ingest,
            "slice_count": len(self.plan) if self.plan else 0,
            "shortfall": bool(self.plan and self.plan.shortfall),
            "commits_conserved": self.conserved(),
            "warnings": self.warnings,
            "slices": [
                {
                    "index": r.index,
                    "start": r.spec.start_time,
                    "end": r.spec.end_time,
                    "commit_count": r.spec.commit_count,
                    "author_count": r.network.author_count,
                    "project_count": r.network.project_count,
                    "file_filter": r.file_filter.as_dict(),
                    "seconds": round(r.seconds, 3),
                }
                for r in self.slices
            ],
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
        }


@dataclass
class RunReport:
    languages: list[LanguageReport]
    seconds: float = 0.0

    @property
    def exit_code(self) -> int:
        return 1 if any(r.status == "aborted" for r in self.languages) else 0

    def to_json(self) -> str:
        doc = {"seconds": round(self.seconds, 3), "languages": [r.as_dict() for r in self.languages]}
        return json.dumps(doc, indent=2) + "\n"


def sorted_commits(cfg: PipelineConfig, lang: LanguageConfig | None, dest) -> tuple[np.ndarray, dict]:
    """Ingest one language into a sorted TSV at ``dest``; return its timestamps and stats."""
    aliases = load_alias_map(cfg.aliases) if cfg.aliases else None
    forks = load_fork_map(cfg.forks) if cfg.forks else None
    stream, stats = ingest_stream(
        read_lines(cfg.commits),
        aliases,
        forks,
        lang,
        cfg.collection_date,
        epoch_min=cfg.epoch_min,
        memory_budget=cfg.memory_budget,
        tmpdir=cfg.tmpdir,
    )
    ts = array("q")
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        for rec in stream:
            ts.append(rec.timestamp)
            fh.write(rec.to_line())
            fh.write("\n")
    if not stats.consistent():
        raise RuntimeError(f"ingest counters do not add up: {stats}")
    return np.frombuffer(ts, dtype=np.int64) if len(ts) else np.zeros(0, np.int64), stats.as_dict()


def read_sorted(path) -> Iterator[CommitRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            yield parse_commit_line(line, lineno)


def slice_graphs(records, plan: SlicePlan, mode: str, q: float) -> Iterator[tuple[SliceSpec, EcosystemGraph, FileFilterReport]]:
    """Group a sorted record stream by slice and build each slice's graph.

    The stream must be exactly the one the plan was computed from.
    """
    it = iter(records)
    index = FileAuthorIndex()
    for spec in plan.slices:
        if mode != CUMULATIVE:
            index = FileAuthorIndex()
        for _ in range(spec.commit_count):
            rec = next(it, None)
            if rec is None:
                raise RuntimeError("commit stream shorter than the slice plan")
            if not spec.contains(rec.timestamp):
                raise RuntimeError(f"record at {rec.timestamp} outside slice {spec.index}")
            index.add(rec)
        graph, report = build_graph(index, None, spec.index, mode, q)
        yield spec, graph, report
    if next(it, None) is not None:
        raise RuntimeError("commit stream longer than the slice plan")


def process_slice(
    graph: EcosystemGraph,
    spec: SliceSpec,
    file_filter: FileFilterReport,
    root,
    language: str,
    pivots: int | None,
    seed: int,
    edges: str,
) -> SliceResult:
    """Metrics and all per-slice exports for one graph."""
    t0 = time.perf_counter()
    layout = export.DatasetLayout(root, language).ensure()
    stage = "metrics"
    try:
        net = network_metrics(graph)
        m = graph.node_count if edges == UNION else len(graph.authors)
        k = None if pivots is None or m == 0 else min(pivots, m)
        nodes = node_metrics(graph, k, seed + spec.index, edges)
        stage = "export"
        export.export_graph_csv(graph, layout.graph_stem(spec.index))
        export.export_nodes_tsv(nodes, layout.nodes_tsv(spec.index))
        export.export_network_json(net, spec, file_filter, layout.network_json(spec.index))
    except Exception as exc:
        raise StageError(stage, exc) from exc
    return SliceResult(spec.index, spec, net, file_filter, time.perf_counter() - t0)


def run_language(cfg: PipelineConfig, lang: LanguageConfig | None) -> LanguageReport:
    name = lang.language_name if lang else ALL_LANGUAGES
    report = LanguageReport(name)
    t_start = time.perf_counter()
    stage = "ingest"
    tmp = tempfile.NamedTemporaryFile(prefix=f"econet-{name}-", suffix=".tsv", dir=cfg.tmpdir, delete=False)
    tmp.close()
    try:
        ts, report.ingest = sorted_commits(cfg, lang, tmp.name)
        report.timings["ingest"] = time.perf_counter() - t_start
        emitted = len(ts)
        if emitted == 0:
            report.status = "empty"
            report.warnings.append("no commits left after filtering; nothing written")
            log.warning("%s: %s", name, report.warnings[-1])
            return report
        if lang is not None and emitted < lang.min_ecosystem_commits:
            report.status = "skipped"
            report.warnings.append(
                f"{emitted} commits is below the ecosystem threshold of {lang.min_ecosystem_commits}"
            )
            log.warning("%s: %s", name, report.warnings[-1])
            return report

        stage = "slicing"
        t0 = time.perf_counter()
        plan = plan_slices(ts, cfg.n_target, cfg.min_span)
        report.plan = plan
        report.warnings.extend(plan.warnings)
        report.timings["slicing"] = time.perf_counter() - t0

        stage = "graph"
        t0 = time.perf_counter()
        args = (cfg.out, name, cfg.pivots, cfg.seed, cfg.betweenness_edges)
        graphs = slice_graphs(read_sorted(tmp.name), plan, cfg.mode, cfg.percentile_q)
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                futures = [pool.submit(process_slice, g, s, f, *args) for s, g, f in graphs]
                report.slices = [fut.result() for fut in futures]
        else:
            report.slices = [process_slice(g, s, f, *args) for s, g, f in graphs]
        report.timings["graph_metrics_export"] = time.perf_counter() - t0

        stage = "export"
        layout = export.DatasetLayout(cfg.out, name).ensure()
        export.export_components_json([r.network.component_sizes for r in report.slices], layout.components_json)
        if not report.conserved():
            raise RuntimeError("slice commit counts do not match ingested commits")
    except StageError as exc:
        report.status, report.stage, report.error = "aborted", exc.stage, str(exc)
        log.error("%s aborted: %s", name, exc)
    except Exception as exc:
        report.status, report.stage, report.error = "aborted", stage, f"[{stage}] {type(exc).__name__}: {exc}"
        log.error("%s aborted: %s", name, report.error)
    finally:
        os.unlink(tmp.name)
        report.timings["total"] = time.perf_counter() - t_start
    return report


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    cfg.validate()
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    langs = cfg.languages or [None]
    reports = [run_language(cfg, lang) for lang in langs]
    return RunReport(reports, time.perf_counter() - t0)
