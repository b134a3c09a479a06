import json

import numpy as np
import pytest

from econet.export import (
    TSV_HEADER,
    DatasetLayout,
    ExportError,
    dumps_network,
    export_components_json,
    export_graph_csv,
    export_network_json,
    export_nodes_tsv,
    format_real,
    loads_network,
    read_graph_csv,
    read_network_json,
    read_nodes_tsv,
)
from econet.graph import CUMULATIVE, EcosystemGraph, FileFilterReport
from econet.metrics import network_metrics, node_metrics
from econet.slicing import SliceSpec
from oracles import random_graph

ONE_THIRD = EcosystemGraph(
    frozenset("abcd"),
    frozenset({"P"}),
    frozenset({("a", "P"), ("b", "P"), ("c", "P"), ("d", "P")}),
    frozenset({("a", "b"), ("a", "c"), ("a", "d"), ("b", "c")}),
)
SPEC = SliceSpec(3, 1000, 2000, 42)
FF = FileFilterReport(0.9999, 5, 100, 1)


@pytest.mark.parametrize(
    "x, s", [(6.0, "6"), (0.0, "0"), (1 / 3, "0.3333333333333333"), (1.5, "1.5"), (1e-20, "1e-20")]
)
def test_format_real(x, s):
    assert format_real(x) == s
    assert float(s) == x


def test_layout_paths(tmp_path):
    lay = DatasetLayout(tmp_path, "rust")
    assert lay.nodes_tsv(3).name == "nodes_03.tsv"
    assert lay.network_json(12).name == "network_12.json"
    assert lay.graph_stem(0).name == "slice_00"
    assert lay.components_json == tmp_path / "rust" / "components.json"


def test_nodes_tsv_format(tmp_path):
    path = tmp_path / "n.tsv"
    rows = node_metrics(ONE_THIRD, exact=True)
    export_nodes_tsv(rows, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split("\t") == list(TSV_HEADER)
    by_id = {ln.split("\t")[0]: ln.split("\t") for ln in lines[1:]}
    assert by_id["a"][5] == "0.3333333333333333"
    assert by_id["P"] == ["P", "project", "4", "", by_id["P"][4], ""]
    assert read_nodes_tsv(path) == rows


def test_nodes_tsv_star_center_verbatim(tmp_path):
    star = EcosystemGraph(frozenset("abcd"), frozenset({"P"}), frozenset((x, "P") for x in "abcd"), frozenset())
    path = tmp_path / "n.tsv"
    export_nodes_tsv(node_metrics(star, exact=True), path)
    assert "P\tproject\t4\t\t6\t\n" in path.read_text(encoding="utf-8")


def test_empty_slice_tsv_header_only(tmp_path):
    path = tmp_path / "n.tsv"
    export_nodes_tsv([], path)
    assert path.read_text(encoding="utf-8") == "\t".join(TSV_HEADER) + "\n"
    assert read_nodes_tsv(path) == []


def test_tsv_bad_header(tmp_path):
    path = tmp_path / "n.tsv"
    path.write_text("x\ty\n", encoding="utf-8")
    with pytest.raises(ExportError):
        read_nodes_tsv(path)


def test_network_json_roundtrip_and_key_order(tmp_path):
    m = network_metrics(ONE_THIRD)
    text = dumps_network(m, SPEC, FF)
    keys = list(json.loads(text))
    assert keys[:5] == ["slice_index", "start", "end", "final", "commit_count"]
    assert keys[-1] == "file_filter"
    assert text.count("\n") == len(keys) + 2
    assert loads_network(text) == (m, SPEC, FF)
    assert dumps_network(*loads_network(text)) == text
    path = tmp_path / "n.json"
    export_network_json(m, SPEC, FF, path)
    assert read_network_json(path) == (m, SPEC, FF)


def test_network_json_verbatim_values():
    full = EcosystemGraph(frozenset("abc"), frozenset(), frozenset(), frozenset({("a", "b"), ("a", "c"), ("b", "c")}))
    doc = json.loads(dumps_network(network_metrics(full), SPEC, FF))
    assert doc["collaboration_density"] == 1.0
    assert doc["contribution_density"] == 0.0
    assert doc["component_sizes"] == [3]


def test_components_json(tmp_path):
    path = tmp_path / "c.json"
    export_components_json([[3, 4]], path)
    assert json.loads(path.read_text()) == [[4, 3]]
    sizes = [[i + 1] if i % 2 else [] for i in range(30)]
    export_components_json(sizes, path)
    doc = json.loads(path.read_text())
    assert len(doc) == 30 and doc[0] == [] and doc[1] == [2]


def test_graph_csv_roundtrip(tmp_path):
    nodes, edges = export_graph_csv(ONE_THIRD, tmp_path / "slice_00")
    assert nodes.name == "slice_00.nodes.csv" and edges.name == "slice_00.edges.csv"
    text = edges.read_text(encoding="utf-8").splitlines()
    assert text[0] == "source,target,edge_type"
    assert "P,a,CONTRIBUTED_TO" in text and "a,b,COLLABORATED" in text
    back = read_graph_csv(tmp_path / "slice_00", 0)
    assert back == ONE_THIRD
    assert read_graph_csv(tmp_path / "slice_00", 4, CUMULATIVE).mode == CUMULATIVE


def test_graph_csv_bytes_stable(tmp_path):
    g = random_graph(np.random.default_rng(2), 60)
    export_graph_csv(g, tmp_path / "a")
    export_graph_csv(read_graph_csv(tmp_path / "a"), tmp_path / "b")
    for suffix in (".nodes.csv", ".edges.csv"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()


def test_graph_csv_rejects_unknown_types(tmp_path):
    export_graph_csv(ONE_THIRD, tmp_path / "s")
    p = tmp_path / "s.edges.csv"
    p.write_text(p.read_text() + "a,b,FRIENDS\n")
    with pytest.raises(ExportError):
        read_graph_csv(tmp_path / "s")


def test_unwritable_target(tmp_path):
    with pytest.raises(ExportError):
        export_nodes_tsv([], tmp_path / "missing" / "n.tsv")


def test_empty_slice_network_json():
    doc = json.loads(dumps_network(network_metrics(EcosystemGraph.empty()), SPEC, FileFilterReport(0.9999, 0, 0, 0)))
    assert doc["author_count"] == doc["project_count"] == doc["collaboration_count"] == 0
    assert doc["contribution_density"] == doc["collaboration_density"] == 0
    assert doc["component_sizes"] == [] and doc["largest_component_size"] == 0
