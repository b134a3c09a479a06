"""Dataset files: per-node TSV, per-network JSON, component sizes, graph CSVs.

Layout under ``<root>/<language>/``::

    slice_NN.nodes.csv  slice_NN.edges.csv
    nodes_NN.tsv        network_NN.json
    components.json
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .graph import WINDOWED, EcosystemGraph, FileFilterReport
from .metrics import AUTHOR, PROJECT, NetworkMetrics, NodeMetrics
from .slicing import SliceSpec

TSV_HEADER = ("node_id", "node_type", "contribution_degree", "collaboration_degree", "betweenness", "clustering")
CONTRIBUTED_TO = "CONTRIBUTED_TO"
COLLABORATED = "COLLABORATED"


class ExportError(Exception):
    pass


def format_real(x: float) -> str:
    """Shortest decimal that round-trips to ``x``; integral values without ``.0``."""
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def stem(index: int) -> str:
    return f"{index:02d}"


class DatasetLayout:
    def __init__(self, root, language: str):
        self.root = Path(root)
        self.language = language
        self.dir = self.root / language

    def graph_stem(self, i: int) -> Path:
        return self.dir / f"slice_{stem(i)}"

    def nodes_tsv(self, i: int) -> Path:
        return self.dir / f"nodes_{stem(i)}.tsv"

    def network_json(self, i: int) -> Path:
        return self.dir / f"network_{stem(i)}.json"

    @property
    def components_json(self) -> Path:
        return self.dir / "components.json"

    def ensure(self) -> "DatasetLayout":
        self.dir.mkdir(parents=True, exist_ok=True)
        return self


def _open_w(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc


def export_nodes_tsv(rows: Iterable[NodeMetrics], path) -> None:
    rows = sorted(rows, key=lambda r: (r.node_id, r.node_kind))
    with _open_w(path) as fh:
        fh.write("\t".join(TSV_HEADER) + "\n")
        for r in rows:
            fh.write(
                "\t".join(
                    (
                        r.node_id,
                        r.node_kind,
                        str(r.contribution_degree),
                        "" if r.collaboration_degree is None else str(r.collaboration_degree),
                        format_real(r.betweenness),
                        "" if r.clustering is None else format_real(r.clustering),
                    )
                )
                + "\n"
            )


def read_nodes_tsv(path) -> list[NodeMetrics]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != TSV_HEADER:
            raise ExportError(f"{path}: unexpected header {header}")
        for line in fh:
            nid, kind, cd, kd, btw, clus = line.rstrip("\n").split("\t")
            rows.append(
                NodeMetrics(nid, kind, int(cd), int(kd) if kd else None, float(btw), float(clus) if clus else None)
            )
    return rows


def metrics_fields(m: NetworkMetrics) -> dict:
    return {
        "author_count": m.author_count,
        "project_count": m.project_count,
        "contribution_count": m.contribution_count,
        "collaboration_count": m.collaboration_count,
        "contribution_density": m.contribution_density,
        "collaboration_density": m.collaboration_density,
        "component_count": len(m.component_sizes),
        "largest_component_size": m.largest_component_size,
        "largest_component_fraction": m.largest_component_fraction,
        "component_sizes": list(m.component_sizes),
    }


def network_document(m: NetworkMetrics, s: SliceSpec, f: FileFilterReport) -> dict:
    doc = {
        "slice_index": s.index,
        "start": s.start_time,
        "end": s.end_time,
        "final": s.final,
        "commit_count": s.commit_count,
    }
    doc.update(metrics_fields(m))
    doc["file_filter"] = f.as_dict()
    return doc


def dumps_network(m: NetworkMetrics, s: SliceSpec, f: FileFilterReport) -> str:
    # one key per line; nested values stay on their key's line
    doc = network_document(m, s, f)
    lines = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def loads_network(text: str) -> tuple[NetworkMetrics, SliceSpec, FileFilterReport]:
    d = json.loads(text)
    m = NetworkMetrics(
        author_count=d["author_count"],
        project_count=d["project_count"],
        collaboration_count=d["collaboration_count"],
        contribution_count=d["contribution_count"],
        component_sizes=tuple(d["component_sizes"]),
        largest_component_fraction=float(d["largest_component_fraction"]),
        collaboration_density=float(d["collaboration_density"]),
        contribution_density=float(d["contribution_density"]),
    )
    s = SliceSpec(d["slice_index"], d["start"], d["end"], d["commit_count"], d.get("final", False))
    ff = d["file_filter"]
    f = FileFilterReport(
        float(ff["percentile_q"]), ff["threshold_author_count"], ff["files_total"], ff["files_discarded"]
    )
    return m, s, f


def export_network_json(m: NetworkMetrics, s: SliceSpec, f: FileFilterReport, path) -> None:
    with _open_w(path) as fh:
        fh.write(dumps_network(m, s, f))


def read_network_json(path):
    return loads_network(Path(path).read_text(encoding="utf-8"))


def export_components_json(sizes: Sequence[Sequence[int]], path) -> None:
    doc = [sorted((int(x) for x in s), reverse=True) for s in sizes]
    with _open_w(path) as fh:
        fh.write(json.dumps(doc, separators=(",", ":")) + "\n")


def export_graph_csv(g: EcosystemGraph, path_stem) -> tuple[Path, Path]:
    path_stem = Path(path_stem)
    nodes_path = path_stem.with_name(path_stem.name + ".nodes.csv")
    edges_path = path_stem.with_name(path_stem.name + ".edges.csv")
    nodes = sorted([(a, AUTHOR) for a in g.authors] + [(p, PROJECT) for p in g.projects])
    edges = sorted(
        [(COLLABORATED, *sorted(e)) for e in g.collaboration_edges]
        + [(CONTRIBUTED_TO, *sorted(e)) for e in g.contribution_edges]
    )
    with _open_w(nodes_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("node_id", "node_type"))
        w.writerows(nodes)
    with _open_w(edges_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "target", "edge_type"))
        w.writerows((s, t, kind) for kind, s, t in edges)
    return nodes_path, edges_path


def read_graph_csv(path_stem, slice_index: int = 0, mode: str = WINDOWED) -> EcosystemGraph:
    """Rebuild a graph from :func:`export_graph_csv` output."""
    path_stem = Path(path_stem)
    authors, projects = set(), set()
    with open(path_stem.with_name(path_stem.name + ".nodes.csv"), encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        if next(r, None) != ["node_id", "node_type"]:
            raise ExportError(f"{path_stem}.nodes.csv: bad header")
        for nid, kind in r:
            if kind == AUTHOR:
                authors.add(nid)
            elif kind == PROJECT:
                projects.add(nid)
            else:
                raise ExportError(f"{path_stem}.nodes.csv: unknown node type {kind!r}")
    contrib, collab = set(), set()
    with open(path_stem.with_name(path_stem.name + ".edges.csv"), encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        if next(r, None) != ["source", "target", "edge_type"]:
            raise ExportError(f"{path_stem}.edges.csv: bad header")
        for s, t, kind in r:
            if kind == COLLABORATED:
                collab.add((s, t) if s < t else (t, s))
            elif kind == CONTRIBUTED_TO:
                # endpoints are stored in id order; node types tell them apart
                if s in authors and t in projects and not (t in authors and s in projects):
                    contrib.add((s, t))
                elif t in authors and s in projects and not (s in authors and t in projects):
                    contrib.add((t, s))
                else:
                    raise ExportError(f"cannot orient contribution edge {s},{t}")
            else:
                raise ExportError(f"{path_stem}.edges.csv: unknown edge type {kind!r}")
    return EcosystemGraph(frozenset(authors), frozenset(projects), frozenset(contrib), frozenset(collab), slice_index, mode)
