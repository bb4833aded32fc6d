"""Phase partitioning by citing-paper publication year."""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

from .corpus import Corpus, PaperRecord
from .errors import InvalidSpec


class Period(NamedTuple):
    """One phase with inclusive year bounds."""

    label: str
    start_year: int
    end_year: int

    def covers(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year


@dataclass(frozen=True)
class PeriodSpec:
    periods: tuple[Period, ...]

    def __iter__(self):
        return iter(self.periods)

    def __len__(self) -> int:
        return len(self.periods)

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.periods]

    @classmethod
    def of(cls, periods: Iterable[tuple[str, int, int]]) -> PeriodSpec:
        return cls(tuple(Period(str(label), int(start), int(end)) for label, start, end in periods))


@dataclass(frozen=True)
class PeriodSlice:
    label: str
    papers: tuple[PaperRecord, ...] = ()
    start_year: int | None = None
    end_year: int | None = None

    def __len__(self) -> int:
        return len(self.papers)


@dataclass(frozen=True)
class Partition:
    slices: tuple[PeriodSlice, ...]
    leftover: int

    def __iter__(self):
        return iter(self.slices)

    def __getitem__(self, label: str) -> PeriodSlice:
        for s in self.slices:
            if s.label == label:
                return s
        raise KeyError(label)


def default_periods() -> PeriodSpec:
    return PeriodSpec.of(
        [
            ("P1", 1956, 1980),
            ("P2", 1981, 1990),
            ("P3", 1991, 2000),
            ("P4", 2001, 2008),
        ]
    )


def validate_spec(spec: PeriodSpec) -> None:
    if not spec.periods:
        raise InvalidSpec("at least one period is required")
    labels = set()
    prev_end = None
    for p in spec.periods:
        if not p.label:
            raise InvalidSpec("period labels must be non-empty")
        if p.label in labels:
            raise InvalidSpec(f"duplicate period label {p.label!r}")
        labels.add(p.label)
        if p.start_year > p.end_year:
            raise InvalidSpec(f"period {p.label}: start {p.start_year} after end {p.end_year}")
        if prev_end is not None and p.start_year <= prev_end:
            raise InvalidSpec(f"period {p.label} overlaps or precedes the previous period")
        prev_end = p.end_year


_PERIOD_ARG = re.compile(r"\s*([^:]+?)\s*:\s*(\d{1,4})\s*-\s*(\d{1,4})\s*")


def parse_period(text: str) -> Period:
    """Parse a ``LABEL:START-END`` command-line value."""
    m = _PERIOD_ARG.fullmatch(text)
    if not m:
        raise InvalidSpec(f"period must look like LABEL:START-END, got {text!r}")
    return Period(m.group(1), int(m.group(2)), int(m.group(3)))


def partition(corpus: Corpus | Sequence[PaperRecord], spec: PeriodSpec) -> Partition:
    """Assign each paper to the period containing its year.

    Papers outside every period are dropped and counted in ``leftover``.
    Within-slice order follows the input order.
    """
    validate_spec(spec)
    papers = corpus.papers if isinstance(corpus, Corpus) else tuple(corpus)
    buckets: list[list[PaperRecord]] = [[] for _ in spec.periods]
    # year -> slice index; periods are sorted and disjoint
    lookup: dict[int, int] = {}
    leftover = 0
    for paper in papers:
        idx = lookup.get(paper.year)
        if idx is None:
            idx = next((i for i, p in enumerate(spec.periods) if p.covers(paper.year)), -1)
            lookup[paper.year] = idx
        if idx < 0:
            leftover += 1
        else:
            buckets[idx].append(paper)
    slices = tuple(
        PeriodSlice(p.label, tuple(bucket), p.start_year, p.end_year)
        for p, bucket in zip(spec.periods, buckets)
    )
    return Partition(slices, leftover)
