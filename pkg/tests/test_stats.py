from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esteem.corpus import CitedRef, IfTable, PaperRecord, RefKey
from esteem.errors import DegenerateInput
from esteem.metrics import CountKind, CountTable, compute_esteem, popularity_counts
from esteem.periods import PeriodSlice
from esteem.ranking import rank
from esteem.stats import (
    Universe,
    average_ranks,
    if_coverage,
    if_weighted_counts,
    permutation_p_value,
    spearman,
    universe_authors,
)

from . import oracles


def table(counts, kind=CountKind.POPULARITY):
    return CountTable("X", kind, counts)


def test_identical_tables():
    t = table({"A": 3, "B": 2, "C": 1, "D": 1})
    assert spearman(t, t).rho == 1.0


def test_reversal():
    assert spearman(table({"A": 1, "B": 2, "C": 3}), table({"A": 3, "B": 2, "C": 1})).rho == -1.0


def test_f1_pop_vs_prestige(f1_p2):
    result = compute_esteem(f1_p2, 0.5)
    res = spearman(result.popularity, result.prestige, "either")
    assert abs(res.rho - 0.5) <= 1e-12
    assert res.n == 3 and res.universe is Universe.EITHER


def test_universes():
    a, b = table({"A": 2, "B": 1, "C": 3}), table({"A": 1, "D": 1})
    assert universe_authors(a, b, Universe.BOTH) == ["A"]
    assert universe_authors(a, b, Universe.EITHER) == ["A", "B", "C", "D"]
    assert universe_authors(a, b, Universe.POPULARITY_SUPPORT) == ["A", "B", "C"]


def test_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        spearman(table({"A": 1}), table({"A": 1}))
    with pytest.raises(DegenerateInput):
        spearman(table({"A": 1, "B": 1}), table({"A": 2, "B": 1}))


def test_average_ranks_ties():
    assert average_ranks(np.array([5, 3, 3, 1])).tolist() == [1.0, 2.5, 2.5, 4.0]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=30))
def test_average_ranks_oracle(values):
    assert average_ranks(np.array(values, dtype=float)).tolist() == oracles.average_ranks(values)


tables = st.dictionaries(st.sampled_from("ABCDEFGHIJKL"), st.integers(1, 8), max_size=12)


def _both_defined(a, b, universe):
    try:
        return spearman(table(a), table(b), universe)
    except DegenerateInput:
        return None


@given(tables, tables, st.sampled_from(["both", "either", "popularity-support"]))
@settings(max_examples=300)
def test_matches_oracle(a, b, universe):
    res = _both_defined(a, b, universe)
    if res is None:
        return
    assert abs(res.rho - oracles.spearman_rho(a, b, universe)) <= 1e-12


@given(tables, tables)
def test_symmetry(a, b):
    res = _both_defined(a, b, "either")
    if res is not None:
        assert res.rho == spearman(table(b), table(a), "either").rho


@given(tables, tables)
def test_monotone_transform_invariance(a, b):
    res = _both_defined(a, b, "both")
    if res is None:
        return
    squashed = {k: math.log(v) * 7 + 100 for k, v in a.items()}
    assert spearman(table(squashed), table(b), "both").rho == res.rho


def test_p_value_bounds_and_determinism():
    a = table({k: i + 1 for i, k in enumerate("ABCDEFGH")})
    b = table({k: (i * 3) % 8 + 1 for i, k in enumerate("ABCDEFGH")})
    r1 = spearman(a, b, permutations=500, seed=7)
    r2 = spearman(a, b, permutations=500, seed=7)
    assert r1.p_value == r2.p_value
    assert 1 / 501 <= r1.p_value <= 1.0
    assert spearman(a, a, permutations=500).p_value < 0.01


@pytest.mark.parametrize(
    "x, y",
    [
        ([1, 2, 3, 4, 5, 6], [2, 1, 4, 3, 6, 5]),
        ([1, 2, 3, 4, 5, 6], [3, 3, 1, 1, 2, 2]),
        ([1, 1, 1, 1, 2, 3], [1, 1, 1, 2, 2, 1]),
        ([5, 4, 3, 2, 1, 0, 0], [0, 0, 0, 0, 1, 0, 2]),
    ],
)
def test_permutation_p_matches_exact_enumeration(x, y):
    xr = average_ranks(np.array(x, dtype=float))
    yr = average_ranks(np.array(y, dtype=float))
    rho = oracles.pearson(xr.tolist(), yr.tolist())
    exact = oracles.exact_permutation_p(xr.tolist(), yr.tolist())
    n = 20_000
    p = permutation_p_value(xr, yr, rho, n, seed=3)
    # (1 + hits) / (1 + n) estimates the exact share with binomial noise
    sd = math.sqrt(max(exact * (1 - exact), 1e-4) / n)
    assert abs(p - exact) <= 5 * sd + 1 / n


F1_IFS = IfTable({"JDOC": 2.0, "IPM": 1.0})


def test_if_weighted_f1(f1_p2):
    assert if_weighted_counts(f1_p2, F1_IFS).counts == {"DOE A": 3.0, "ROE B": 3.0, "SALTON G": 2.0}
    assert if_coverage(f1_p2, F1_IFS) == 1.0


def test_if_weighted_missing(f1_p2):
    ifs = IfTable({"JDOC": 2.0})
    assert if_weighted_counts(f1_p2, ifs).counts == {"DOE A": 2.0, "ROE B": 2.0, "SALTON G": 2.0}
    assert if_weighted_counts(f1_p2, ifs, missing=0.5).counts == {"DOE A": 2.5, "ROE B": 2.5, "SALTON G": 2.0}
    assert if_coverage(f1_p2, ifs) == 0.6
    assert if_weighted_counts(f1_p2, IfTable()).counts == {}
    assert if_weighted_counts(PeriodSlice("X"), F1_IFS).counts == {}


@given(
    st.lists(
        st.tuples(st.sampled_from(["J1", "J2"]), st.lists(st.sampled_from("ABCDE"), max_size=6)),
        max_size=10,
    ),
    st.sampled_from([0.1, 0.3, 1.7, 2.0, 3.141]),
)
def test_uniform_if_preserves_ranks(papers, c):
    slice_ = PeriodSlice(
        "X",
        tuple(
            PaperRecord(str(i), "Q", 1990, src, refs=tuple(CitedRef(RefKey(a, 1980, "Z")) for a in refs))
            for i, (src, refs) in enumerate(papers)
        ),
    )
    weighted = if_weighted_counts(slice_, IfTable({"J1": c, "J2": c}))
    pop = popularity_counts(slice_)
    assert rank(weighted).ranks() == rank(pop).ranks()
    assert weighted.counts == {a: c * n for a, n in pop.counts.items()}
