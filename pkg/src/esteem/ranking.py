"""Tie-aware rankings and the comparative analyses built on them."""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .corpus import AuthorKey, AuthorMetadata, RefKey
from .metrics import CitationHistogram, CountKind, CountTable


class RankEntry(NamedTuple):
    author: AuthorKey
    count: float
    rank: int


@dataclass(frozen=True)
class Ranking:
    """Entries sorted by count descending, then author.

    Ranks follow competition ranking (1, 1, 3): one plus the number of
    strictly larger counts.  The author tiebreak only fixes display order.
    """

    scope: str
    kind: CountKind
    entries: tuple[RankEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ranks(self) -> dict[AuthorKey, int]:
        return {e.author: e.rank for e in self.entries}

    def counts(self) -> dict[AuthorKey, float]:
        return {e.author: e.count for e in self.entries}


def rank(table: CountTable) -> Ranking:
    ordered = sorted(table.counts.items(), key=lambda item: (-item[1], item[0]))
    entries = []
    prev_count, prev_rank = None, 0
    for i, (author, count) in enumerate(ordered, start=1):
        r = prev_rank if count == prev_count else i
        entries.append(RankEntry(author, count, r))
        prev_count, prev_rank = count, r
    return Ranking(table.scope, table.kind, tuple(entries))


def top_n(ranking: Ranking, n: int) -> set[AuthorKey]:
    """Authors ranked n or better; ties can push the cohort past n members."""
    return {e.author for e in ranking.entries if e.rank <= n}


@dataclass(frozen=True)
class PersistenceMatrix:
    """Top-n retention between phase pairs (i, j) with i before j.

    ``cells[(i, j)] = (retained, base)`` where base is the size of phase i's
    cohort and retained the number of those authors still in phase j's.
    """

    n: int
    kind: CountKind | None = None
    cells: dict[tuple[str, str], tuple[int, int]] = field(default_factory=dict)
    cohort_sizes: dict[str, int] = field(default_factory=dict)

    def retained(self, i: str, j: str) -> int:
        return self.cells[(i, j)][0]

    def base(self, i: str, j: str) -> int:
        return self.cells[(i, j)][1]


def persistence(rankings: Sequence[Ranking], n: int) -> PersistenceMatrix:
    kinds = {r.kind for r in rankings}
    if len(kinds) > 1:
        raise ValueError(f"rankings mix count kinds: {sorted(map(str, kinds))}")
    cohorts = [(r.scope, top_n(r, n)) for r in rankings]
    cells = {}
    for a, (label_i, cohort_i) in enumerate(cohorts):
        for label_j, cohort_j in cohorts[a + 1 :]:
            cells[(label_i, label_j)] = (len(cohort_i & cohort_j), len(cohort_i))
    return PersistenceMatrix(
        n,
        next(iter(kinds)) if kinds else None,
        cells,
        {label: len(c) for label, c in cohorts},
    )


class QuadrantLabel(str, Enum):
    HIGH_POP_HIGH_PRES = "HighPop-HighPres"
    HIGH_POP_LOW_PRES = "HighPop-LowPres"
    LOW_POP_HIGH_PRES = "LowPop-HighPres"
    LOW_POP_LOW_PRES = "LowPop-LowPres"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def of(cls, high_pop: bool, high_pres: bool) -> QuadrantLabel:
        if high_pop:
            return cls.HIGH_POP_HIGH_PRES if high_pres else cls.HIGH_POP_LOW_PRES
        return cls.LOW_POP_HIGH_PRES if high_pres else cls.LOW_POP_LOW_PRES


def quadrants(pop: Ranking, pres: Ranking, cutoff: int = 40) -> dict[AuthorKey, QuadrantLabel]:
    """Classify every author of either ranking as High/Low on each axis.

    High means a rank of ``cutoff`` or better; an author missing from a
    ranking is Low on that axis.
    """
    pop_ranks, pres_ranks = pop.ranks(), pres.ranks()
    labels = {}
    for author in sorted(pop_ranks.keys() | pres_ranks.keys()):
        high_pop = pop_ranks.get(author, cutoff + 1) <= cutoff
        high_pres = pres_ranks.get(author, cutoff + 1) <= cutoff
        labels[author] = QuadrantLabel.of(high_pop, high_pres)
    return labels


def _ranked_keys(counts: Mapping[RefKey, int], n: int) -> list[tuple[RefKey, int, int]]:
    """Competition-ranked items with rank <= n."""
    if not counts:
        return []
    # rank <= n exactly when count >= the n-th largest count
    floor = heapq.nlargest(n, counts.values())[-1]
    ordered = sorted(
        ((k, c) for k, c in counts.items() if c >= floor),
        key=lambda kv: (-kv[1], kv[0].sort_key()),
    )
    out = []
    prev_count, prev_rank = None, 0
    for i, (key, count) in enumerate(ordered, start=1):
        r = prev_rank if count == prev_count else i
        out.append((key, count, r))
        prev_count, prev_rank = count, r
    return out


def top_publications(hist: CitationHistogram | Mapping[RefKey, int], n: int = 10) -> list[tuple[RefKey, int]]:
    """Most cited items, ties at the cutoff included.

    Pass the slice histogram for the popularity view or a histogram over
    core references for the prestige view.
    """
    counts = hist.counts if isinstance(hist, CitationHistogram) else hist
    return [(key, count) for key, count, _ in _ranked_keys(counts, n)]


def ranked_publications(hist: CitationHistogram, n: int = 10) -> list[tuple[int, RefKey, int]]:
    """Like :func:`top_publications` but keeps the competition rank."""
    return [(r, key, count) for key, count, r in _ranked_keys(hist.counts, n)]


def key_publications(pooled: CitationHistogram | Mapping[RefKey, int], k: int = 40) -> set[RefKey]:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts = pooled.counts if isinstance(pooled, CitationHistogram) else pooled
    return {key for key, c in counts.items() if c >= k}


@dataclass(frozen=True)
class TimelineHistogram:
    """Key publications binned by years since the author's Ph.D."""

    bin_width: int
    bins: dict[int, int] = field(default_factory=dict)
    unknown: int = 0

    @property
    def total(self) -> int:
        return sum(self.bins.values())


def career_timeline(keys: Iterable[RefKey], meta: AuthorMetadata | None, bin_width: int = 5) -> TimelineHistogram:
    if bin_width < 1:
        raise ValueError(f"bin_width must be >= 1, got {bin_width}")
    bins: dict[int, int] = {}
    unknown = 0
    for key in keys:
        phd = meta.phd_year(key.author) if meta is not None else None
        if phd is None:
            unknown += 1
            continue
        start = bin_width * ((key.year - phd) // bin_width)
        bins[start] = bins.get(start, 0) + 1
    return TimelineHistogram(bin_width, dict(sorted(bins.items())), unknown)
