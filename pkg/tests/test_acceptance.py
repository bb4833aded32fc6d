"""Exit criteria, one test per criterion; the summary prints a PASS/FAIL line for each."""

from __future__ import annotations

import hashlib
import math
import random
import time
from collections import Counter
from pathlib import Path

import pytest

from esteem.corpus import CitedRef, IfTable, PaperRecord, RefKey, format_corpus, parse_corpus
from esteem.fixtures import f1_corpus, f1_text
from esteem.metrics import (
    CitationHistogram,
    CountKind,
    CountTable,
    compute_esteem,
    popularity_counts,
    select_threshold,
    without_self_citations,
)
from esteem.periods import PeriodSlice, default_periods, partition
from esteem.ranking import persistence, rank, top_n
from esteem.report import RunConfig, run_pipeline
from esteem.stats import if_weighted_counts, spearman
from esteem.synth import SOURCES, SynthParams, generate_synthetic, synthesize

from . import oracles

acceptance = pytest.mark.acceptance

P2_POPULARITY = b"period,rank,author,count\nP2,1,DOE A,2\nP2,1,ROE B,2\nP2,3,SALTON G,1\n"
P2_PRESTIGE = b"period,rank,author,count\nP2,1,ROE B,1\n"


@acceptance("AC1", "F1 end-to-end, byte-exact CSVs, < 1 s")
def test_ac1_f1_end_to_end(tmp_path):
    corpus_path = tmp_path / "f1.txt"
    corpus_path.write_text(f1_text())
    out = tmp_path / "report"
    start = time.perf_counter()
    bundle = run_pipeline(RunConfig(str(corpus_path), target_share=0.5, share_basis="distinct-items", output_dir=str(out)))
    elapsed = time.perf_counter() - start

    result = bundle.esteem["P2"]
    assert result.popularity.counts == {"DOE A": 2, "ROE B": 2, "SALTON G": 1}
    assert result.threshold.threshold == 2
    assert result.threshold.achieved_share == 2 / 3
    assert len(result.core.matched_paper_ids) == 1
    assert len(result.core) == 1
    assert result.prestige.counts == {"ROE B": 1}

    assert (out / "popularity_P2.csv").read_bytes() == P2_POPULARITY
    assert (out / "prestige_P2.csv").read_bytes() == P2_PRESTIGE
    assert "P2,2,0.6666666666666666,0.5,distinct-items,1,1" in (out / "thresholds.csv").read_text().splitlines()
    assert "ROE B,1,1," in (out / "scatter.csv").read_text().splitlines()
    assert elapsed < 1.0, f"took {elapsed:.3f}s"


def _synthetic_cases(n_cases: int, seed: int):
    rnd = random.Random(seed)
    for i in range(n_cases):
        size = 5000 if i % 50 == 0 else int(math.exp(rnd.uniform(math.log(5), math.log(5000))))
        params = SynthParams(
            seed=rnd.getrandbits(63),
            n_papers=size,
            n_authors=rnd.choice([5, 30, 200, 1000]),
            year_start=rnd.choice([1956, 1975, 1985]),
            year_end=rnd.choice([1990, 2000, 2008]),
            zipf_s=rnd.choice([0.0, 0.5, 1.0, 1.5, 2.5]),
            refs_min=0,
            refs_max=rnd.choice([1, 3, 20, 40]),
            p_in=rnd.choice([0.0, 0.05, 0.3, 0.7, 1.0]),
        )
        options = {
            "target_share": rnd.choice([0.05, 0.2, 0.5, 1.0]),
            "basis": rnd.choice(["distinct-items", "citation-volume"]),
            "exclude_self": rnd.random() < 0.3,
        }
        yield params, options


@pytest.fixture(scope="module")
def synthetic_runs():
    """(params, slice, esteem result) for 1,000 corpora across all default periods."""
    runs = []
    for params, options in _synthetic_cases(1000, seed=20240601):
        for s in partition(synthesize(params), default_periods()):
            if options["exclude_self"]:
                s = without_self_citations(s)
            if not any(p.refs for p in s.papers):
                continue
            result = compute_esteem(s, options["target_share"], options["basis"])
            runs.append((params, s, result))
    return runs


@acceptance("AC2", "dominance: prestige <= popularity on 1,000 synthetic corpora")
def test_ac2_dominance(synthetic_runs):
    corpora = {params for params, _, _ in synthetic_runs}
    assert len(corpora) == 1000
    assert max(p.n_papers for p in corpora) == 5000
    assert any(len(r.core) for _, _, r in synthetic_runs)
    violations = [
        (s.label, author)
        for _, s, result in synthetic_runs
        for author, c in result.prestige.counts.items()
        if c > result.popularity[author]
    ]
    assert violations == []


@acceptance("AC3", "conservation of popularity and prestige totals")
def test_ac3_conservation(synthetic_runs):
    for _, s, result in synthetic_runs:
        assert result.popularity.total == sum(len(p.refs) for p in s.papers)
        matched = [p for p in s.papers if p.id in result.core.matched_paper_ids]
        assert len(result.core) == sum(len(p.refs) for p in matched)
        assert result.prestige.total == len(result.core)


@acceptance("AC4", "threshold selection equals exhaustive scan (500 histograms, both bases)")
def test_ac4_threshold_oracle():
    rnd = random.Random(4)
    ties_seen = 0
    for i in range(500):
        n = rnd.randint(1, 60)
        top = rnd.choice([1, 3, 10, 100])
        counts = [rnd.randint(1, top) for _ in range(n)]
        hist = CitationHistogram("X", {RefKey(f"A{j}", 1990, "J"): c for j, c in enumerate(counts)})
        # grid targets hit exact ties between neighbouring candidates
        target = rnd.choice([rnd.uniform(0.001, 1.0), rnd.randint(1, 8) / 8])
        for basis in ("distinct-items", "citation-volume"):
            choice = select_threshold(hist, target, basis)
            assert (choice.threshold, choice.achieved_share) == oracles.threshold_scan(counts, target, basis)
            gaps = Counter(abs(share - target) for share in {c / n for c in range(n + 1)})
            ties_seen += any(v > 1 for v in gaps.values())
    assert ties_seen


@acceptance("AC5", "competition ranks equal oracle (500 tables); top_n tie inflation")
def test_ac5_ranking_oracle():
    rnd = random.Random(5)
    for _ in range(500):
        counts = {f"AU{j:03d}": rnd.randint(1, rnd.choice([2, 5, 50])) for j in range(rnd.randint(0, 80))}
        ranking = rank(CountTable("X", CountKind.POPULARITY, counts))
        expected = oracles.competition_ranks(counts)
        assert ranking.ranks() == expected
        n = rnd.randint(1, 20)
        assert top_n(ranking, n) == {a for a, r in expected.items() if r <= n}
    for k in (2, 3, 7):
        tied = {f"T{j}": 9 for j in range(k)} | {"LOW": 1}
        assert top_n(rank(CountTable("X", CountKind.POPULARITY, tied)), 1) == {f"T{j}" for j in range(k)}


@acceptance("AC6", "Spearman exact cases and oracle agreement within 1e-12")
def test_ac6_spearman():
    def t(counts):
        return CountTable("X", CountKind.POPULARITY, counts)

    same = t({"A": 4, "B": 2, "C": 2, "D": 1})
    assert spearman(same, same).rho == 1.0
    assert spearman(t({"A": 1, "B": 2, "C": 3}), t({"A": 3, "B": 2, "C": 1})).rho == -1.0
    p2 = partition(f1_corpus(), default_periods())["P2"]
    f1 = compute_esteem(p2, 0.5)
    assert abs(spearman(f1.popularity, f1.prestige, "either").rho - 0.5) <= 1e-12

    rnd = random.Random(6)
    checked = 0
    universes = ["both", "either", "popularity-support"]
    while checked < 500:
        pool = [f"AU{j}" for j in range(rnd.randint(2, 40))]
        a = {k: rnd.randint(1, 6) for k in rnd.sample(pool, rnd.randint(1, len(pool)))}
        b = {k: rnd.randint(1, 6) for k in rnd.sample(pool, rnd.randint(1, len(pool)))}
        universe = universes[checked % 3]
        try:
            got = spearman(t(a), t(b), universe).rho
        except Exception:
            continue
        assert abs(got - oracles.spearman_rho(a, b, universe)) <= 1e-12
        # strictly increasing transforms keep every rank, so rho is unchanged bit for bit
        a2 = {k: v**3 + 10 for k, v in a.items()}
        b2 = {k: math.sqrt(v) for k, v in b.items()}
        assert spearman(t(a2), t(b2), universe).rho == got
        checked += 1


def _random_corpus(rnd: random.Random) -> PeriodSlice:
    authors = [f"AU{j}" for j in range(rnd.randint(1, 25))]
    papers = []
    for i in range(rnd.randint(1, 60)):
        refs = tuple(
            CitedRef(RefKey(rnd.choice(authors), rnd.randint(1950, 1989), "X")) for _ in range(rnd.randint(0, 12))
        )
        papers.append(PaperRecord(str(i), rnd.choice(authors), 1985, rnd.choice(SOURCES), refs=refs))
    return PeriodSlice("P2", tuple(papers))


@acceptance("AC7", "IF weighting: uniform IF keeps popularity ranks; F1 weighted counts")
def test_ac7_if_weighting():
    rnd = random.Random(7)
    for _ in range(100):
        s = _random_corpus(rnd)
        c = rnd.choice([0.25, 0.7, 1.0, 2.5, 13.9])
        weighted = if_weighted_counts(s, IfTable({src: c for src in SOURCES}))
        assert rank(weighted).ranks() == rank(popularity_counts(s)).ranks()
    p2 = partition(f1_corpus(), default_periods())["P2"]
    weighted = if_weighted_counts(p2, IfTable({"JDOC": 2.0, "IPM": 1.0}))
    assert weighted.counts == {"DOE A": 3.0, "ROE B": 3.0, "SALTON G": 2.0}


@acceptance("AC8", "persistence matrix equals hand-enumerated overlaps")
def test_ac8_persistence():
    phases = {
        "P1": {"A": 9, "B": 8, "C": 7, "D": 1},
        "P2": {"A": 5, "C": 5, "E": 5, "B": 1},  # three-way tie at rank 1
        "P3": {"F": 4, "G": 3, "A": 2},
        "P4": {"A": 6, "B": 6, "C": 6, "F": 6},
    }
    rankings = [rank(CountTable(label, CountKind.POPULARITY, c)) for label, c in phases.items()]
    # top-3 cohorts: P1 {A,B,C}; P2 {A,C,E}; P3 {F,G,A}; P4 {A,B,C,F}
    matrix = persistence(rankings, 3)
    assert matrix.cohort_sizes == {"P1": 3, "P2": 3, "P3": 3, "P4": 4}
    assert matrix.cells == {
        ("P1", "P2"): (2, 3),
        ("P1", "P3"): (1, 3),
        ("P1", "P4"): (3, 3),
        ("P2", "P3"): (1, 3),
        ("P2", "P4"): (2, 3),
        ("P3", "P4"): (2, 3),
    }
    same = persistence([rank(CountTable(p, CountKind.POPULARITY, phases["P4"])) for p in phases], 2)
    assert all(retained == base == 4 for retained, base in same.cells.values())


def _digest(directory: Path) -> dict[str, str]:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


@acceptance("AC9", "identical config and seed give byte-identical output directories")
def test_ac9_determinism(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text(generate_synthetic(SynthParams(seed=99, n_papers=1500, year_start=1975, year_end=2005)))
    ifs = tmp_path / "if.csv"
    ifs.write_text("SOURCE,IF\n" + "".join(f"{s},{1 + i * 0.37}\n" for i, s in enumerate(SOURCES[:-1])))
    meta = tmp_path / "meta.csv"
    meta.write_text("AUTHOR,PHD_YEAR,GENDER,AFFILIATION\n" + "".join(f"AUTHOR{k:05d} {chr(65 + k % 26)},{1940 + k % 40},,\n" for k in range(0, 200, 3)))

    def run(out):
        config = RunConfig(
            str(corpus), if_path=str(ifs), metadata_path=str(meta), permutations=2000, seed=5, key_pub_k=5, output_dir=str(out)
        )
        run_pipeline(config)
        return _digest(out)

    first, second = run(tmp_path / "a"), run(tmp_path / "b")
    assert len(first) > 10
    assert first == second


@acceptance("AC10", "generate -> parse -> regenerate round trip on 100 SynthParams")
def test_ac10_round_trip():
    rnd = random.Random(10)
    for _ in range(100):
        y0 = rnd.randint(1800, 2090)
        lo = rnd.randint(0, 10)
        params = SynthParams(
            seed=rnd.getrandbits(64),
            n_papers=rnd.randint(0, 400),
            n_authors=rnd.randint(1, 500),
            year_start=y0,
            year_end=rnd.randint(y0, 2100),
            zipf_s=rnd.uniform(0, 3),
            refs_min=lo,
            refs_max=lo + rnd.randint(0, 30),
            p_in=rnd.random(),
        )
        text = generate_synthetic(params)
        parsed = parse_corpus(text)
        assert parsed.warnings == ()
        assert list(parsed.papers) == synthesize(params)
        assert format_corpus(parsed.papers) == text


@pytest.mark.slow
@acceptance("AC11", "100,000-paper corpus through the full pipeline in < 60 s")
def test_ac11_scale(tmp_path):
    corpus = tmp_path / "big.txt"
    corpus.write_text(generate_synthetic(SynthParams(seed=11, n_papers=100_000, n_authors=5000, year_start=1956, year_end=2008, refs_max=40)))
    ifs = tmp_path / "if.csv"
    ifs.write_text("SOURCE,IF\n" + "".join(f"{s},{1 + i}\n" for i, s in enumerate(SOURCES)))
    start = time.perf_counter()
    bundle = run_pipeline(RunConfig(str(corpus), if_path=str(ifs), output_dir=str(tmp_path / "out")))
    elapsed = time.perf_counter() - start
    assert bundle.manifest["corpus"]["papers"] == 100_000
    print(f"scale run: {elapsed:.1f}s")
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
