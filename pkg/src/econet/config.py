"""Pipeline configuration: key=value files overlaid by command-line flags."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .graph import DEFAULT_PERCENTILE_Q, MODES, WINDOWED
from .ingest import (
    DEFAULT_MEMORY_BUDGET,
    EPOCH_MIN_DEFAULT,
    IngestError,
    LanguageConfig,
    load_language_config,
    parse_collection_date,
)
from .metrics import COLLABORATION, UNION
from .slicing import DAY, DEFAULT_MIN_SPAN, DEFAULT_N


class ConfigError(Exception):
    pass


# config-file key -> (attribute, converter)
KEYS = {
    "commits": ("commits", Path),
    "aliases": ("aliases", Path),
    "forks": ("forks", Path),
    "lang_config": ("lang_configs", lambda v: [Path(p.strip()) for p in v.split(",") if p.strip()]),
    "collection_date": ("collection_date", parse_collection_date),
    "epoch_min": ("epoch_min", int),
    "n": ("n_target", int),
    "min_span_days": ("min_span", lambda v: round(float(v) * DAY)),
    "percentile_q": ("percentile_q", float),
    "pivots": ("pivots", int),
    "seed": ("seed", int),
    "mode": ("mode", str),
    "betweenness_edges": ("betweenness_edges", str),
    "memory_budget": ("memory_budget", int),
    "tmpdir": ("tmpdir", Path),
    "out": ("out", Path),
    "jobs": ("jobs", int),
}


@dataclass
class PipelineConfig:
    commits: Path | None = None
    aliases: Path | None = None
    forks: Path | None = None
    lang_configs: list[Path] = field(default_factory=list)
    languages: list[LanguageConfig] = field(default_factory=list)
    collection_date: int | None = None
    epoch_min: int = EPOCH_MIN_DEFAULT
    n_target: int = DEFAULT_N
    min_span: int = DEFAULT_MIN_SPAN
    percentile_q: float = DEFAULT_PERCENTILE_Q
    pivots: int | None = None
    seed: int = 0
    mode: str = WINDOWED
    betweenness_edges: str = UNION
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    tmpdir: Path | None = None
    out: Path | None = None
    jobs: int = 1

    def apply(self, values: dict) -> "PipelineConfig":
        """Set fields from raw string values keyed by config-file key."""
        for key, raw in values.items():
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            attr, conv = KEYS[key]
            try:
                setattr(self, attr, conv(raw))
            except (ValueError, IngestError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        return self

    def validate(self) -> "PipelineConfig":
        if self.commits is None:
            raise ConfigError("no commit log given")
        if self.out is None:
            raise ConfigError("no output root given")
        for label, p in (("commit log", self.commits), ("alias map", self.aliases), ("fork map", self.forks)):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{label} not found: {p}")
        for p in self.lang_configs:
            if not Path(p).is_file():
                raise ConfigError(f"language config not found: {p}")
        if not self.languages:
            try:
                self.languages = [load_language_config(p) for p in self.lang_configs]
            except IngestError as exc:
                raise ConfigError(str(exc)) from None
        names = [lc.language_name for lc in self.languages]
        if len(names) != len(set(names)):
            raise ConfigError("duplicate language names")
        if not 0 < self.percentile_q <= 1:
            raise ConfigError("percentile_q must be in (0, 1]")
        if self.n_target < 1:
            raise ConfigError("n must be >= 1")
        if self.min_span < 0:
            raise ConfigError("min_span_days must be >= 0")
        if self.pivots is not None and self.pivots < 1:
            raise ConfigError("pivots must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.betweenness_edges not in (UNION, COLLABORATION):
            raise ConfigError("betweenness_edges must be 'union' or 'collaboration'")
        if self.memory_budget < 1:
            raise ConfigError("memory_budget must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.collection_date is not None and self.collection_date <= self.epoch_min:
            raise ConfigError("collection date must be later than epoch_min")
        return self


def read_config_file(path) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values
