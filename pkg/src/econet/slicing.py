"""Commit-count balanced temporal slicing.

A slice is closed once the cumulative commit count reaches its quota
``ceil((i + 1) * total / n)``, but never before it spans ``min_span``
seconds. Slices are half-open ``[start, end)`` except the final one, which
is closed and always ends at the last commit.

Cut points are observed commit timestamps (or ``start + min_span``), so a
slice never splits commits that share a timestamp and never comes out
empty.
"""

from __future__ import annotations

import bisect
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

DAY = 86400
DEFAULT_N = 30
DEFAULT_MIN_SPAN = 183 * DAY  # "6 months", fixed length


class SlicingError(ValueError):
    pass


@dataclass(frozen=True)
class SliceSpec:
    index: int
    start_time: int
    end_time: int
    commit_count: int
    final: bool = False

    def contains(self, t: int) -> bool:
        if self.final:
            return self.start_time <= t <= self.end_time
        return self.start_time <= t < self.end_time


@dataclass(frozen=True)
class SlicePlan:
    n_target: int
    min_span: int
    slices: tuple[SliceSpec, ...]
    total_commits: int
    warnings: tuple[str, ...] = field(default=())

    @property
    def shortfall(self) -> bool:
        return len(self.slices) < self.n_target

    def __len__(self):
        return len(self.slices)

    def to_json(self) -> str:
        doc = {
            "n_target": self.n_target,
            "min_span_seconds": self.min_span,
            "total_commits": self.total_commits,
            "slices": [
                {"index": s.index, "start": s.start_time, "end": s.end_time, "commit_count": s.commit_count}
                for s in self.slices
            ],
            "shortfall": self.shortfall,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SlicePlan":
        doc = json.loads(text)
        raw = doc["slices"]
        slices = tuple(
            SliceSpec(s["index"], s["start"], s["end"], s["commit_count"], final=(i == len(raw) - 1))
            for i, s in enumerate(raw)
        )
        total = doc.get("total_commits", sum(s.commit_count for s in slices))
        warnings = (_shortfall_message(len(slices), doc["n_target"]),) if doc.get("shortfall") else ()
        return cls(doc["n_target"], doc["min_span_seconds"], slices, total, warnings)


def _shortfall_message(got: int, wanted: int) -> str:
    return f"timeline exhausted after {got} of {wanted} slices (minimum span too long for this history)"


def plan_slices(sorted_timestamps: Sequence[int], n_target: int = DEFAULT_N, min_span: int = DEFAULT_MIN_SPAN) -> SlicePlan:
    ts = np.asarray(sorted_timestamps, dtype=np.int64)
    total = len(ts)
    if total == 0:
        raise SlicingError("cannot slice an empty commit stream")
    if n_target < 1:
        raise SlicingError("n_target must be >= 1")
    if min_span < 0:
        raise SlicingError("min_span must be >= 0")
    if total > 1 and np.any(ts[1:] < ts[:-1]):
        raise SlicingError("timestamps must be non-decreasing")

    last = int(ts[-1])
    slices: list[SliceSpec] = []
    start = int(ts[0])
    lo = 0  # index of the first commit in the current slice
    for i in range(n_target):
        end = None
        if i < n_target - 1:
            quota = -((-(i + 1) * total) // n_target)
            # earliest observed time after `start` with >= quota commits strictly before it
            pos = max(quota, lo + 1)
            if pos < total:
                pos = int(np.searchsorted(ts, ts[pos - 1], side="right"))
            if pos < total:
                end = max(int(ts[pos]), start + min_span)
                if end > last:
                    end = None
        if end is None:
            slices.append(SliceSpec(i, start, last, total - lo, final=True))
            break
        hi = int(np.searchsorted(ts, end, side="left"))
        slices.append(SliceSpec(i, start, end, hi - lo))
        start, lo = end, hi

    warnings: tuple[str, ...] = ()
    if len(slices) < n_target:
        msg = _shortfall_message(len(slices), n_target)
        log.warning(msg)
        warnings = (msg,)
    return SlicePlan(n_target, min_span, tuple(slices), total, warnings)


def assign_slice(timestamp: int, plan: SlicePlan) -> int:
    slices = plan.slices
    if timestamp < slices[0].start_time or timestamp > slices[-1].end_time:
        raise SlicingError(f"timestamp {timestamp} outside plan coverage")
    starts = [s.start_time for s in slices]
    return bisect.bisect_right(starts, timestamp) - 1


def cumulative_range(plan: SlicePlan, i: int) -> tuple[int, int]:
    if not 0 <= i < len(plan.slices):
        raise SlicingError(f"slice index {i} out of range")
    return plan.slices[0].start_time, plan.slices[i].end_time
