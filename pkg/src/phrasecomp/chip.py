"""Idiom/matched-phrase construction from a syntactic n-gram index.

Each idiom is matched to same-pattern phrases with the nearest log frequency,
mirroring how controlled non-idiomatic counterparts are selected.
"""

import logging
import math
from dataclasses import dataclass, field

from .errors import EmptyIndex, EmptyMatch, NotFound

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NgramEntry:
    surface: str
    pattern: str
    count: int


@dataclass
class MatchResult:
    idiom: str
    pattern: str
    log_freq: float
    matches: list  # (surface, delta_log_freq, log_freq) ascending by delta


@dataclass
class NgramIndex:
    by_pattern: dict = field(default_factory=dict)
    by_surface: dict = field(default_factory=dict)

    def __len__(self):
        return sum(len(v) for v in self.by_pattern.values())

    def total_count(self, surface):
        entries = self.by_surface.get(surface)
        if not entries:
            return None
        return sum(e.count for e in entries)


def load_index(path):
    """Load a `surface TAB pattern TAB count` TSV; malformed rows are skipped."""
    index = NgramIndex()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                log.warning("%s:%d: expected 3 columns, skipping", path, lineno)
                continue
            surface, pattern, raw_count = fields
            try:
                count = int(raw_count)
                if count < 1:
                    raise ValueError
            except ValueError:
                log.warning("%s:%d: bad count %r, skipping", path, lineno, raw_count)
                continue
            entry = NgramEntry(surface=surface, pattern=pattern, count=count)
            index.by_pattern.setdefault(pattern, []).append(entry)
            index.by_surface.setdefault(surface, []).append(entry)
    if len(index) == 0:
        raise EmptyIndex(f"no usable rows in {path}")
    return index


def dominant_pattern(surface, index):
    """The highest-count pattern for a surface; ties break lexicographically."""
    entries = index.by_surface.get(surface)
    if not entries:
        raise NotFound(f"surface {surface!r} not in index")
    return min(entries, key=lambda e: (-e.count, e.pattern)).pattern


def match_idiom(idiom_surface, index, k=3, exclusions=()):
    """Top-k same-pattern phrases nearest in log10 frequency to the idiom."""
    pattern = dominant_pattern(idiom_surface, index)
    idiom_count = next(
        e.count for e in index.by_surface[idiom_surface] if e.pattern == pattern
    )
    idiom_log = math.log10(idiom_count)
    excluded = set(exclusions) | {idiom_surface}
    candidates = [e for e in index.by_pattern[pattern] if e.surface not in excluded]
    if not candidates:
        raise EmptyMatch(f"no other entry shares pattern {pattern!r}")
    ranked = sorted(
        candidates, key=lambda e: (abs(math.log10(e.count) - idiom_log), e.surface)
    )
    matches = [
        (e.surface, abs(math.log10(e.count) - idiom_log), math.log10(e.count))
        for e in ranked[:k]
    ]
    return MatchResult(idiom=idiom_surface, pattern=pattern, log_freq=idiom_log, matches=matches)
