"""Command-line entry point: ``econet <subcommand> ...``.

Exit codes: 0 success, 1 when any language run aborted, 2 on configuration
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path

from . import export
from .config import KEYS, ConfigError, PipelineConfig, read_config_file
from .graph import MODES, WINDOWED, FileFilterReport
from .ingest import IngestError, parse_collection_date
from .metrics import COLLABORATION, UNION, network_metrics, node_metrics
from .pipeline import ALL_LANGUAGES, process_slice, read_sorted, run_pipeline, slice_graphs, sorted_commits
from .slicing import SlicePlan, plan_slices
from .synth import SynthSpec, generate_synthetic

log = logging.getLogger("econet")


def _ingest_flags(p: argparse.ArgumentParser, required_commits=True):
    p.add_argument("--commits", type=Path, required=required_commits, help="commit log TSV")
    p.add_argument("--aliases", type=Path, help="author alias map TSV")
    p.add_argument("--forks", type=Path, help="fork map TSV")
    p.add_argument("--lang-config", type=Path, action="append", dest="lang_config",
                   help="language config file (repeatable)")
    p.add_argument("--collection-date", help="ISO 8601; later commits are dropped")
    p.add_argument("--tmpdir", type=Path)
    p.add_argument("--memory-budget", type=int, help="bytes held in memory before spilling sorted runs")


def _slice_flags(p):
    p.add_argument("--n", type=int, help="target slice count (default 30)")
    p.add_argument("--min-span-days", type=float, help="minimum slice span in days (default 183)")


def _metric_flags(p):
    p.add_argument("--pivots", type=int, help="betweenness pivot count (default min(n, max(100, n/100)))")
    p.add_argument("--seed", type=int)
    p.add_argument("--betweenness-edges", choices=(UNION, COLLABORATION))


def _flag_values(args) -> dict[str, str]:
    """Collect the flags that map onto config keys, as raw strings."""
    values = {}
    for key in KEYS:
        v = getattr(args, key, None)
        if v is None:
            continue
        if key == "lang_config":
            v = ",".join(str(p) for p in v)
        values[key] = str(v)
    return values


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg.apply(read_config_file(args.config))
    cfg.apply(_flag_values(args))
    return cfg


def cmd_generate(args) -> int:
    kw = {}
    for name in ("authors", "projects", "skew", "growth", "files_per_commit", "files_per_project", "seed",
                 "extension", "alias_rate", "fork_rate"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    if args.count is not None:
        kw["commits"] = args.count
    if args.start:
        kw["start"] = parse_collection_date(args.start)
    if args.end:
        kw["end"] = parse_collection_date(args.end)
    spec = SynthSpec(**kw)
    generate_synthetic(spec, args.out, args.aliases_out, args.forks_out)
    log.info("wrote %d commits to %s", spec.commits, args.out)
    return 0


def _languages(cfg: PipelineConfig):
    return cfg.languages or [None]


def _sorted_for(cfg, lang, tmpdir):
    name = lang.language_name if lang else ALL_LANGUAGES
    dest = Path(tmpdir) / f"{name}.sorted.tsv"
    ts, stats = sorted_commits(cfg, lang, dest)
    return name, dest, ts, stats


def cmd_plan_slices(args) -> int:
    cfg = _config(args)
    cfg.out = cfg.out or Path(".")
    cfg.validate()
    langs = _languages(cfg)
    if len(langs) > 1:
        raise ConfigError("plan-slices takes at most one --lang-config")
    with tempfile.TemporaryDirectory(dir=cfg.tmpdir) as tmp:
        _, _, ts, stats = _sorted_for(cfg, langs[0], tmp)
    if len(ts) == 0:
        log.error("no commits left after filtering")
        return 1
    plan = plan_slices(ts, cfg.n_target, cfg.min_span)
    text = plan.to_json()
    if args.out_file:
        Path(args.out_file).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_build(args) -> int:
    cfg = _config(args)
    cfg.validate()
    status = 0
    for lang in _languages(cfg):
        with tempfile.TemporaryDirectory(dir=cfg.tmpdir) as tmp:
            name, sorted_path, ts, stats = _sorted_for(cfg, lang, tmp)
            if len(ts) == 0:
                log.warning("%s: no commits left after filtering", name)
                continue
            if args.plan:
                plan = SlicePlan.from_json(Path(args.plan).read_text(encoding="utf-8"))
                if plan.total_commits != len(ts):
                    log.error("%s: plan covers %d commits, stream has %d", name, plan.total_commits, len(ts))
                    status = 1
                    continue
            else:
                plan = plan_slices(ts, cfg.n_target, cfg.min_span)
            layout = export.DatasetLayout(cfg.out, name).ensure()
            filters = []
            for spec, graph, freport in slice_graphs(read_sorted(sorted_path), plan, cfg.mode, cfg.percentile_q):
                export.export_graph_csv(graph, layout.graph_stem(spec.index))
                filters.append(freport.as_dict())
            doc = {"mode": cfg.mode, "ingest": stats, "plan": json.loads(plan.to_json()), "file_filters": filters}
            (layout.dir / "build.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return status


def cmd_metrics(args) -> int:
    g = export.read_graph_csv(args.graph)
    if args.nodes_out:
        rows = node_metrics(g, args.pivots, args.seed or 0, args.betweenness_edges or UNION, exact=args.exact)
        export.export_nodes_tsv(rows, args.nodes_out)
    sys.stdout.write(json.dumps(export.metrics_fields(network_metrics(g)), indent=2) + "\n")
    return 0


def cmd_export(args) -> int:
    layout = export.DatasetLayout(args.root, args.language)
    build = json.loads((layout.dir / "build.json").read_text(encoding="utf-8"))
    plan = SlicePlan.from_json(json.dumps(build["plan"]))
    sizes = []
    for spec, ff in zip(plan.slices, build["file_filters"]):
        g = export.read_graph_csv(layout.graph_stem(spec.index), spec.index, build.get("mode", WINDOWED))
        freport = FileFilterReport(**ff)
        res = process_slice(g, spec, freport, args.root, args.language, args.pivots, args.seed or 0,
                            args.betweenness_edges or UNION)
        sizes.append(res.network.component_sizes)
    export.export_components_json(sizes, layout.components_json)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    report = run_pipeline(cfg)
    report_path = args.report or Path(str(Path(cfg.out)).rstrip("/") + ".report.json")
    Path(report_path).write_text(report.to_json(), encoding="utf-8")
    for lr in report.languages:
        log.info("%s: %s, %d slices", lr.language, lr.status, len(lr.slices))
        for w in lr.warnings:
            log.warning("%s: %s", lr.language, w)
    if args.figures:
        from .report import render_report

        for lr in report.languages:
            if lr.status == "ok":
                render_report(cfg.out, lr.language)
    return report.exit_code


def cmd_report(args) -> int:
    from .report import render_report

    langs = [args.language] if args.language else sorted(
        p.name for p in Path(args.root).iterdir() if p.is_dir()
    )
    for lang in langs:
        for path in render_report(args.root, lang, args.out_dir):
            log.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic commit log")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--commits", dest="count", type=int)
    p.add_argument("--authors", type=int)
    p.add_argument("--projects", type=int)
    p.add_argument("--start", help="ISO 8601 start of the time range")
    p.add_argument("--end", help="ISO 8601 end of the time range")
    p.add_argument("--skew", type=float, help="project popularity exponent")
    p.add_argument("--growth", type=float, help="exponential growth rate of commit activity (0 = uniform)")
    p.add_argument("--files-per-commit", type=float)
    p.add_argument("--files-per-project", type=int)
    p.add_argument("--extension")
    p.add_argument("--alias-rate", type=float)
    p.add_argument("--fork-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--aliases-out", type=Path)
    p.add_argument("--forks-out", type=Path)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("plan-slices", help="compute the slice plan of a commit log")
    _ingest_flags(p)
    _slice_flags(p)
    p.add_argument("--out", dest="out_file", type=Path, help="plan JSON (default: stdout)")
    p.set_defaults(func=cmd_plan_slices)

    p = sub.add_parser("build", help="build per-slice graphs and write them as CSV")
    _ingest_flags(p)
    _slice_flags(p)
    p.add_argument("--config", type=Path)
    p.add_argument("--plan", type=Path, help="reuse a plan from plan-slices")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--percentile-q", type=float)
    p.add_argument("--out", type=Path, help="dataset root")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("metrics", help="metrics of one exported graph")
    p.add_argument("--graph", type=Path, required=True, help="graph CSV stem (without .nodes.csv)")
    p.add_argument("--nodes-out", type=Path, help="also write the per-node TSV here")
    p.add_argument("--exact", action="store_true", help="exact betweenness (small graphs only)")
    _metric_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export", help="metrics and dataset files for built graphs")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--language", required=True)
    _metric_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("pipeline", help="run every stage for every language")
    p.add_argument("--config", type=Path)
    _ingest_flags(p, required_commits=False)
    _slice_flags(p)
    _metric_flags(p)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--percentile-q", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", type=Path, help="dataset root")
    p.add_argument("--report", type=Path, help="run report JSON (default: <out>.report.json)")
    p.add_argument("--figures", action="store_true", help="also render report figures")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="summary table and figures for a dataset")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("--language")
    p.add_argument("--out-dir", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, IngestError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
