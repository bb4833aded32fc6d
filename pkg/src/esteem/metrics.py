"""Popularity and prestige counts for one period slice.

Popularity counts every citation an author receives inside the slice.
Prestige counts only citations made by highly cited papers:

1. tally how often each cited item is cited in the slice and pick a count
   threshold whose selected set covers about ``target_share`` of the slice;
2. match the selected items back to slice papers on first author, year,
   volume and beginning page;
3. pool the reference lists of the matched papers (the core references);
4. count authors over the core references.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from itertools import chain
from typing import NamedTuple

from .corpus import AuthorKey, CitedRef, PaperRecord, RefKey
from .errors import EmptyHistogram, UnknownPaperId
from .periods import PeriodSlice


class CountKind(str, Enum):
    POPULARITY = "popularity"
    PRESTIGE = "prestige"
    WEIGHTED = "weighted"

    def __str__(self) -> str:
        return self.value


class ShareBasis(str, Enum):
    DISTINCT_ITEMS = "distinct-items"
    CITATION_VOLUME = "citation-volume"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CountTable:
    """Author -> count for one period.  Authors with a zero count are absent."""

    scope: str
    kind: CountKind
    counts: dict[AuthorKey, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "counts", {a: c for a, c in self.counts.items() if c != 0})

    def __getitem__(self, author: str) -> float:
        return self.counts.get(author, 0)

    def __len__(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    @property
    def total(self) -> float:
        return sum(self.counts.values())

    @property
    def integral(self) -> bool:
        return self.kind is not CountKind.WEIGHTED


@dataclass(frozen=True)
class CitationHistogram:
    scope: str
    counts: dict[RefKey, int] = field(default_factory=dict)

    @property
    def total_citations(self) -> int:
        return sum(self.counts.values())

    @property
    def distinct_items(self) -> int:
        return len(self.counts)

    @property
    def max_count(self) -> int:
        return max(self.counts.values(), default=0)


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: int
    achieved_share: float
    target_share: float
    basis: ShareBasis


@dataclass(frozen=True)
class CoreRefSet:
    scope: str
    matched_paper_ids: frozenset[str] = frozenset()
    refs: tuple[CitedRef, ...] = ()

    def __len__(self) -> int:
        return len(self.refs)


class EsteemResult(NamedTuple):
    popularity: CountTable
    prestige: CountTable
    threshold: ThresholdChoice | None
    core: CoreRefSet


# ---------------------------------------------------------------------------


def _author_counts(refs: Iterable[CitedRef]) -> dict[AuthorKey, int]:
    return dict(Counter(ref.key.author for ref in refs))


def _slice_refs(slice_: PeriodSlice) -> Iterable[CitedRef]:
    return chain.from_iterable(paper.refs for paper in slice_.papers)


def popularity_counts(slice_: PeriodSlice) -> CountTable:
    """One count per reference occurrence, credited to the cited first author."""
    return CountTable(slice_.label, CountKind.POPULARITY, _author_counts(_slice_refs(slice_)))


def citation_histogram(slice_: PeriodSlice) -> CitationHistogram:
    return CitationHistogram(slice_.label, dict(Counter(ref.key for ref in _slice_refs(slice_))))


def reference_histogram(refs: Iterable[CitedRef], scope: str) -> CitationHistogram:
    """Histogram over an arbitrary reference multiset, e.g. core references."""
    return CitationHistogram(scope, dict(Counter(ref.key for ref in refs)))


def pool_histograms(hists: Iterable[CitationHistogram], scope: str = "ALL") -> CitationHistogram:
    pooled: Counter[RefKey] = Counter()
    for h in hists:
        pooled.update(h.counts)
    return CitationHistogram(scope, dict(pooled))


def _parse_basis(basis: ShareBasis | str) -> ShareBasis:
    return basis if isinstance(basis, ShareBasis) else ShareBasis(basis)


def share_at(hist: CitationHistogram, t: int, basis: ShareBasis | str) -> float:
    """Share of the histogram selected by ``count >= t``."""
    basis = _parse_basis(basis)
    if not hist.counts:
        return 0.0
    if basis is ShareBasis.DISTINCT_ITEMS:
        return sum(1 for c in hist.counts.values() if c >= t) / hist.distinct_items
    return sum(c for c in hist.counts.values() if c >= t) / hist.total_citations


def select_threshold(
    hist: CitationHistogram,
    target_share: float = 0.2,
    basis: ShareBasis | str = ShareBasis.DISTINCT_ITEMS,
) -> ThresholdChoice:
    """Pick the count threshold whose selected share is closest to the target.

    Candidates are t = 1 .. max_count + 1; ties go to the smaller t.
    """
    basis = _parse_basis(basis)
    if not 0 < target_share <= 1:
        raise ValueError(f"target_share must be in (0, 1], got {target_share}")
    if not hist.counts:
        raise EmptyHistogram(f"period {hist.scope}: no cited references")

    freq = Counter(hist.counts.values())
    top = max(freq)
    denom = hist.distinct_items if basis is ShareBasis.DISTINCT_ITEMS else hist.total_citations
    # selected mass for count >= t, built from the top down
    selected = [0] * (top + 2)
    for t in range(top, 0, -1):
        n = freq.get(t, 0)
        selected[t] = selected[t + 1] + (n if basis is ShareBasis.DISTINCT_ITEMS else n * t)

    best_t, best_share, best_gap = 0, 0.0, float("inf")
    for t in range(1, top + 2):
        share = selected[t] / denom
        gap = abs(share - target_share)
        if gap < best_gap:
            best_t, best_share, best_gap = t, share, gap
    return ThresholdChoice(best_t, best_share, target_share, basis)


def highly_cited_set(hist: CitationHistogram, choice: ThresholdChoice | int) -> set[RefKey]:
    t = choice if isinstance(choice, int) else choice.threshold
    return {key for key, c in hist.counts.items() if c >= t}


def match_to_corpus(keys: Iterable[RefKey], slice_: PeriodSlice) -> set[str]:
    """Ids of slice papers whose (author, year, volume, page) equals some key.

    Keys or papers lacking volume or page never match.
    """
    index: dict[tuple, list[str]] = {}
    for paper in slice_.papers:
        mk = paper.match_key()
        if mk is not None:
            index.setdefault(mk, []).append(paper.id)
    matched: set[str] = set()
    for key in keys:
        if key.volume is None or key.page is None:
            continue
        ids = index.get((key.author, key.year, key.volume, key.page))
        if ids:
            matched.update(ids)
    return matched


def core_references(matched: Iterable[str], slice_: PeriodSlice) -> CoreRefSet:
    matched = frozenset(matched)
    known = {p.id for p in slice_.papers}
    unknown = matched - known
    if unknown:
        raise UnknownPaperId(f"period {slice_.label}: unknown paper ids {sorted(unknown)}")
    refs: list[CitedRef] = []
    for paper in slice_.papers:
        if paper.id in matched:
            refs.extend(paper.refs)
    return CoreRefSet(slice_.label, matched, tuple(refs))


def prestige_counts(core: CoreRefSet) -> CountTable:
    return CountTable(core.scope, CountKind.PRESTIGE, _author_counts(core.refs))


def without_self_citations(slice_: PeriodSlice) -> PeriodSlice:
    """Copy of the slice with references to the citing paper's own first author removed."""

    def strip(paper: PaperRecord) -> PaperRecord:
        refs = tuple(r for r in paper.refs if r.key.author != paper.author)
        if len(refs) == len(paper.refs):
            return paper
        return PaperRecord(paper.id, paper.author, paper.year, paper.source, paper.volume, paper.page, refs)

    return PeriodSlice(slice_.label, tuple(strip(p) for p in slice_.papers), slice_.start_year, slice_.end_year)


def compute_esteem(
    slice_: PeriodSlice,
    target_share: float = 0.2,
    basis: ShareBasis | str = ShareBasis.DISTINCT_ITEMS,
    threshold_override: int | None = None,
    hist: CitationHistogram | None = None,
) -> EsteemResult:
    """Run threshold selection, matching, core collection and both counts.

    ``hist`` may be passed when the caller already tallied the slice.
    An empty slice yields empty tables and no threshold.
    """
    basis = _parse_basis(basis)
    if threshold_override is not None and threshold_override < 1:
        raise ValueError(f"threshold override must be >= 1, got {threshold_override}")
    popularity = popularity_counts(slice_)
    if not slice_.papers:
        return EsteemResult(
            popularity,
            CountTable(slice_.label, CountKind.PRESTIGE, {}),
            None,
            CoreRefSet(slice_.label),
        )
    if hist is None:
        hist = citation_histogram(slice_)
    if threshold_override is None:
        choice = select_threshold(hist, target_share, basis)
    else:
        choice = ThresholdChoice(
            threshold_override, share_at(hist, threshold_override, basis), target_share, basis
        )
    matched = match_to_corpus(highly_cited_set(hist, choice), slice_)
    core = core_references(matched, slice_)
    return EsteemResult(popularity, prestige_counts(core), choice, core)
