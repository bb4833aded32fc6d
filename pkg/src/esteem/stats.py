"""Spearman rank correlation and impact-factor weighted counts."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import AuthorKey, IfTable
from .errors import DegenerateInput
from .metrics import CountKind, CountTable
from .periods import PeriodSlice

DEFAULT_PERMUTATIONS = 10_000


class Universe(str, Enum):
    BOTH = "both"
    EITHER = "either"
    POPULARITY_SUPPORT = "popularity-support"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    p_value: float | None = None
    universe: Universe = Universe.EITHER


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Descending ranks (largest value = 1) with ties sharing their mean rank."""
    values = np.asarray(values, dtype=float)
    n = values.size
    order = np.argsort(-values, kind="mergesort")
    sorted_vals = values[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], n]
    mean_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.repeat(mean_rank, ends - starts)
    return ranks


def universe_authors(a: CountTable, b: CountTable, universe: Universe) -> list[AuthorKey]:
    if universe is Universe.BOTH:
        authors = a.counts.keys() & b.counts.keys()
    elif universe is Universe.EITHER:
        authors = a.counts.keys() | b.counts.keys()
    else:
        authors = a.counts.keys()
    return sorted(authors)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("rank vector is constant; rho is undefined")
    rho = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def _mode_offsets(v: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    values, counts = np.unique(v, return_counts=True)
    mode = values[np.argmax(counts)]
    support = np.flatnonzero(v != mode)
    return int(counts.max()), support, v[support] - mode


def permutation_p_value(
    x: np.ndarray, y: np.ndarray, rho: float, permutations: int = DEFAULT_PERMUTATIONS, seed: int | None = 0
) -> float:
    """Two-sided p-value of rho under random relabelling; (1 + hits) / (1 + permutations).

    Writing the permuted vector as its modal value plus offsets d, the
    statistic sum(xc * v[perm]) reduces to sum(d * xc[sample]) where sample
    is an ordered draw without replacement of len(d) positions (the modal
    term vanishes because xc sums to zero).  Only the offsets are drawn, so
    heavily tied vectors such as sparse prestige counts are cheap.
    """
    rng = np.random.default_rng(seed)
    xc = x - x.mean()
    yc = y - y.mean()
    scale = math.sqrt(float(xc @ xc) * float(yc @ yc))
    # relabelling either vector gives the same null; pick the one with the biggest tie block
    mode_x, _, _ = _mode_offsets(xc)
    mode_y, support, offsets = _mode_offsets(yc)
    if mode_x > mode_y:
        xc, yc = yc, xc
        _, support, offsets = _mode_offsets(yc)
    n, m = xc.size, support.size
    # guards against float noise on exactly tied statistics
    cutoff = abs(rho) * scale - 1e-9 * scale
    hits = 0
    for _ in range(permutations):
        sample = rng.choice(n, m, replace=False)
        if abs(float(offsets @ xc[sample])) >= cutoff:
            hits += 1
    return (1 + hits) / (1 + permutations)


def spearman(
    a: CountTable,
    b: CountTable,
    universe: Universe | str = Universe.EITHER,
    permutations: int = 0,
    seed: int | None = 0,
) -> CorrelationResult:
    """Spearman's rho between two count tables over an author universe.

    Authors absent from a table count as 0.  Ties get average ranks.  With
    ``permutations > 0`` a seeded two-sided permutation p-value is attached.
    """
    universe = Universe(universe)
    authors = universe_authors(a, b, universe)
    n = len(authors)
    if n < 2:
        raise DegenerateInput(f"need at least 2 authors, got {n}")
    x = average_ranks(np.array([a[au] for au in authors], dtype=float))
    y = average_ranks(np.array([b[au] for au in authors], dtype=float))
    rho = _pearson(x, y)
    p = permutation_p_value(x, y, rho, permutations, seed) if permutations > 0 else None
    return CorrelationResult(rho, n, p, universe)


def _citation_weights(slice_: PeriodSlice, ifs: IfTable, missing: float):
    for paper in slice_.papers:
        if paper.refs:
            weight = ifs.get(paper.source)
            yield paper, (missing if weight is None else weight), weight is not None


def if_weighted_counts(slice_: PeriodSlice, ifs: IfTable, missing: float = 0.0) -> CountTable:
    """Citation counts where each citation weighs the citing journal's impact factor.

    Citing papers whose source has no impact factor contribute ``missing``.
    """
    # count per (weight, author) first so a uniform weight c gives exactly c * count
    refs_by_weight: dict[float, list] = defaultdict(list)
    for paper, weight, _ in _citation_weights(slice_, ifs, missing):
        refs_by_weight[weight].extend(paper.refs)
    totals: dict[AuthorKey, float] = defaultdict(float)
    for weight in sorted(refs_by_weight):
        tally = Counter(ref.key.author for ref in refs_by_weight[weight])
        for author, count in sorted(tally.items()):
            totals[author] += weight * count
    return CountTable(slice_.label, CountKind.WEIGHTED, dict(totals))


def if_coverage(slice_: PeriodSlice, ifs: IfTable) -> float:
    """Fraction of the slice's citations made by papers with a known impact factor."""
    known = total = 0
    for paper, _, has_if in _citation_weights(slice_, ifs, 0.0):
        total += len(paper.refs)
        known += len(paper.refs) if has_if else 0
    return known / total if total else 0.0
