"""Deterministic synthetic commit logs in the ingest TSV format."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SynthSpec:
    authors: int = 1000
    projects: int = 300
    commits: int = 10_000
    start: int = 1_104_537_600  # 2005-01-01
    end: int = 1_609_459_200  # 2021-01-01
    # project popularity ~ rank ** -skew
    skew: float = 1.1
    # 0 = uniform in time; > 0 = density proportional to exp(growth * x) over [0, 1]
    growth: float = 0.0
    files_per_commit: float = 2.0
    files_per_project: int = 40
    team_size: float = 8.0
    outsider_rate: float = 0.05
    extension: str = "rs"
    other_extension: str = "md"
    other_file_rate: float = 0.15
    alias_rate: float = 0.0
    fork_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("authors", "projects", "commits", "files_per_project"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.end <= self.start:
            raise ValueError("end must be after start")
        if self.files_per_commit < 1:
            raise ValueError("files_per_commit must be >= 1")


def author_name(i: int) -> str:
    return f"dev{i:06d} <dev{i:06d}@example.org>"


def alias_name(i: int) -> str:
    return f"dev{i:06d} <dev{i:06d}@laptop.local>"


def project_name(p: int) -> str:
    return f"org{p % 97:02d}_repo{p:06d}"


def fork_name(p: int) -> str:
    return f"forker{p % 13:02d}_repo{p:06d}"


def commit_timestamps(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    u = rng.random(spec.commits)
    if spec.growth > 0:
        x = np.log1p(u * np.expm1(spec.growth)) / spec.growth
    else:
        x = u
    span = spec.end - spec.start
    return spec.start + np.minimum((x * span).astype(np.int64), span)


@dataclass
class _Draws:
    project: np.ndarray
    author: np.ndarray
    ts: np.ndarray
    n_files: np.ndarray
    file_idx: np.ndarray
    other: np.ndarray
    use_alias: np.ndarray
    use_fork: np.ndarray
    ids: str


def _draw(spec: SynthSpec) -> _Draws:
    rng = np.random.default_rng(spec.seed)
    C, A, P = spec.commits, spec.authors, spec.projects

    weights = (np.arange(1, P + 1, dtype=np.float64)) ** -spec.skew
    weights /= weights.sum()
    project = rng.choice(P, size=C, p=weights)

    # each project draws most commits from a contiguous "team" of authors
    team_base = rng.integers(0, A, size=P)
    offset = rng.geometric(1.0 / max(spec.team_size, 1.0), size=C) - 1
    author = (team_base[project] + offset) % A
    outsider = rng.random(C) < spec.outsider_rate
    author[outsider] = rng.integers(0, A, size=int(outsider.sum()))

    ts = commit_timestamps(rng, spec)
    n_files = 1 + rng.poisson(spec.files_per_commit - 1.0, size=C)
    total_files = int(n_files.sum())
    file_idx = (spec.files_per_project * rng.random(total_files) ** 2).astype(np.int64)
    other = rng.random(total_files) < spec.other_file_rate
    use_alias = rng.random(C) < spec.alias_rate
    use_fork = rng.random(C) < spec.fork_rate
    ids = rng.bytes(20 * C).hex()
    return _Draws(project, author, ts, n_files, file_idx, other, use_alias, use_fork, ids)


def generate_lines(spec: SynthSpec):
    """Yield commit-log lines without the trailing newline."""
    d = _draw(spec)
    pos = 0
    for i in range(spec.commits):
        a = int(d.author[i])
        p = int(d.project[i])
        aname = alias_name(a) if d.use_alias[i] else author_name(a)
        pname = fork_name(p) if d.use_fork[i] else project_name(p)
        k = int(d.n_files[i])
        paths = []
        for j in range(pos, pos + k):
            f = int(d.file_idx[j])
            if d.other[j]:
                path = f"docs/note{f:03d}.{spec.other_extension}"
            else:
                path = f"src/mod{f:03d}.{spec.extension}"
            if path not in paths:
                paths.append(path)
        pos += k
        yield f"{d.ids[40 * i:40 * i + 40]}\t{aname}\t{pname}\t{int(d.ts[i])}\t{';'.join(paths)}"


def identity_maps(spec: SynthSpec) -> tuple[dict[str, str], dict[str, str]]:
    """Alias and fork maps covering every alternate identity the log uses."""
    d = _draw(spec)
    aliases = {alias_name(int(a)): author_name(int(a)) for a in np.unique(d.author[d.use_alias])}
    forks = {fork_name(int(p)): project_name(int(p)) for p in np.unique(d.project[d.use_fork])}
    return aliases, forks


def generate_synthetic(spec: SynthSpec, path, aliases_path=None, forks_path=None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in generate_lines(spec):
            fh.write(line)
            fh.write("\n")
    if aliases_path is not None or forks_path is not None:
        aliases, forks = identity_maps(spec)
        for target, mapping in ((aliases_path, aliases), (forks_path, forks)):
            if target is not None:
                with open(target, "w", encoding="utf-8", newline="\n") as fh:
                    for raw in sorted(mapping):
                        fh.write(f"{raw}\t{mapping[raw]}\n")
    return path
