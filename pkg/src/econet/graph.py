"""Per-slice author/project graphs.

Nodes are MD5 ids of canonical names. A contribution edge joins an author
to a project it committed to; a collaboration edge joins two authors who
touched the same file of the same project, unless that file has more
authors than the ``q``-quantile of all files in the range.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

import numpy as np

from .ingest import CommitRecord, node_id

WINDOWED = "windowed"
CUMULATIVE = "cumulative"
MODES = (WINDOWED, CUMULATIVE)
DEFAULT_PERCENTILE_Q = 0.9999


@dataclass(frozen=True)
class EcosystemGraph:
    authors: frozenset[str]
    projects: frozenset[str]
    # (author_id, project_id)
    contribution_edges: frozenset[tuple[str, str]]
    # (a, b) with a < b
    collaboration_edges: frozenset[tuple[str, str]]
    slice_index: int = 0
    mode: str = WINDOWED

    @property
    def node_count(self) -> int:
        return len(self.authors) + len(self.projects)

    def is_valid(self) -> bool:
        for a, p in self.contribution_edges:
            if a not in self.authors or p not in self.projects:
                return False
        for a, b in self.collaboration_edges:
            if not a < b or a not in self.authors or b not in self.authors:
                return False
        touched_a = {a for a, _ in self.contribution_edges}
        touched_a.update(x for e in self.collaboration_edges for x in e)
        touched_p = {p for _, p in self.contribution_edges}
        return touched_a == set(self.authors) and touched_p == set(self.projects)

    @classmethod
    def empty(cls, slice_index: int = 0, mode: str = WINDOWED) -> "EcosystemGraph":
        return cls(frozenset(), frozenset(), frozenset(), frozenset(), slice_index, mode)


@dataclass(frozen=True)
class FileFilterReport:
    percentile_q: float
    threshold_author_count: int
    files_total: int
    files_discarded: int

    def as_dict(self) -> dict:
        return {
            "percentile_q": self.percentile_q,
            "threshold_author_count": self.threshold_author_count,
            "files_total": self.files_total,
            "files_discarded": self.files_discarded,
        }


@dataclass
class FileAuthorIndex:
    """(project_key, path) -> author node ids, plus the contribution pairs seen."""

    files: dict[tuple[str, str], set[str]] = field(default_factory=lambda: defaultdict(set))
    contributions: set[tuple[str, str]] = field(default_factory=set)
    commit_count: int = 0
    _ids: dict[str, str] = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.files)

    def __getitem__(self, key):
        return self.files[key]

    def _id(self, name: str) -> str:
        nid = self._ids.get(name)
        if nid is None:
            nid = self._ids[name] = node_id(name)
        return nid

    def add(self, rec: CommitRecord) -> None:
        author = self._id(rec.author_key)
        project = rec.project_key
        self.contributions.add((author, self._id(project)))
        for path in rec.files:
            self.files[(project, path)].add(author)
        self.commit_count += 1

    def update(self, records: Iterable[CommitRecord]) -> "FileAuthorIndex":
        for rec in records:
            self.add(rec)
        return self

    def author_counts(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self.files.values()), dtype=np.int64, count=len(self.files))


def build_file_index(records: Iterable[CommitRecord]) -> FileAuthorIndex:
    return FileAuthorIndex().update(records)


def nearest_rank(q) -> Fraction:
    return Fraction(str(q)) if isinstance(q, float) else Fraction(q)


def percentile_threshold(index: FileAuthorIndex | Iterable[int], q: float = DEFAULT_PERCENTILE_Q) -> int:
    """Nearest-rank ``q``-quantile of per-file author counts.

    ``q`` is converted through its decimal repr so that e.g. 0.9999 * 100000
    gives exactly rank 99990 rather than a float just above it.
    """
    if isinstance(index, FileAuthorIndex):
        counts = index.author_counts()
    else:
        counts = np.asarray(list(index), dtype=np.int64)
    n = len(counts)
    if n == 0:
        raise ValueError("percentile of an empty file index")
    qf = nearest_rank(q)
    if not 0 < qf <= 1:
        raise ValueError(f"q must be in (0, 1], got {q}")
    rank = math.ceil(qf * n)
    return int(np.partition(counts, rank - 1)[rank - 1])


def build_graph(
    index: FileAuthorIndex,
    threshold: int | None = None,
    slice_index: int = 0,
    mode: str = WINDOWED,
    q: float = DEFAULT_PERCENTILE_Q,
) -> tuple[EcosystemGraph, FileFilterReport]:
    """Materialize the graph for the commits accumulated in ``index``.

    ``threshold=None`` computes it from ``q``. Files whose author count is
    strictly greater than the threshold produce no collaboration edges.
    """
    if mode not in MODES:
        raise ValueError(f"unknown graph mode {mode!r}")
    if not index.files:
        return EcosystemGraph.empty(slice_index, mode), FileFilterReport(q, 0, 0, 0)
    if threshold is None:
        threshold = percentile_threshold(index, q)

    collab: set[tuple[str, str]] = set()
    discarded = 0
    for authors in index.files.values():
        k = len(authors)
        if k > threshold:
            discarded += 1
            continue
        if k < 2:
            continue
        collab.update(combinations(sorted(authors), 2))

    contributions = frozenset(index.contributions)
    graph = EcosystemGraph(
        authors=frozenset(a for a, _ in contributions),
        projects=frozenset(p for _, p in contributions),
        contribution_edges=contributions,
        collaboration_edges=frozenset(collab),
        slice_index=slice_index,
        mode=mode,
    )
    return graph, FileFilterReport(q, int(threshold), len(index.files), discarded)


def graph_from_records(
    records: Iterable[CommitRecord],
    slice_index: int = 0,
    mode: str = WINDOWED,
    q: float = DEFAULT_PERCENTILE_Q,
) -> tuple[EcosystemGraph, FileFilterReport]:
    return build_graph(build_file_index(records), None, slice_index, mode, q)
