"""Pipeline orchestration and CSV/JSON report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field, fields
from functools import singledispatch
from pathlib import Path
from typing import Any

from . import __version__
from .corpus import (
    AuthorKey,
    AuthorMetadata,
    Corpus,
    IfTable,
    RefKey,
    dedup_papers,
    load_author_metadata,
    load_if_table,
    read_corpus,
)
from .errors import ConfigInvalid, DegenerateInput, EmptyHistogram, InvalidSpec
from .metrics import (
    CountKind,
    CoreRefSet,
    CountTable,
    EsteemResult,
    ShareBasis,
    ThresholdChoice,
    citation_histogram,
    compute_esteem,
    pool_histograms,
    popularity_counts,
    reference_histogram,
    without_self_citations,
)
from .periods import PeriodSpec, default_periods, partition, validate_spec
from .ranking import (
    PersistenceMatrix,
    QuadrantLabel,
    Ranking,
    TimelineHistogram,
    career_timeline,
    key_publications,
    persistence,
    quadrants,
    rank,
    ranked_publications,
)
from .stats import (
    DEFAULT_PERMUTATIONS,
    CorrelationResult,
    Universe,
    if_coverage,
    if_weighted_counts,
    spearman,
    universe_authors,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    corpus_path: str
    periods: PeriodSpec = field(default_factory=default_periods)
    target_share: float = 0.20
    share_basis: ShareBasis = ShareBasis.DISTINCT_ITEMS
    thresholds: dict[str, int] = field(default_factory=dict)
    top_n: int = 40
    quadrant_cutoff: int = 40
    key_pub_k: int = 40
    bin_width: int = 5
    top_pubs: int = 10
    if_path: str | None = None
    metadata_path: str | None = None
    universe: Universe = Universe.EITHER
    permutations: int = DEFAULT_PERMUTATIONS
    seed: int = 0
    missing_if: float = 0.0
    exclude_self_citations: bool = False
    dedup: bool = False
    scatter_period: str | None = None
    # not part of the analysis, so left out of the manifest
    output_dir: str | None = None

    def validate(self) -> None:
        if not (isinstance(self.target_share, (int, float)) and 0 < self.target_share <= 1):
            raise ConfigInvalid(f"target_share must be in (0, 1], got {self.target_share}")
        for name in ("top_n", "quadrant_cutoff", "key_pub_k", "bin_width", "top_pubs"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.permutations < 0:
            raise ConfigInvalid("permutations must be >= 0")
        if not math.isfinite(self.missing_if) or self.missing_if < 0:
            raise ConfigInvalid("missing_if must be a finite value >= 0")
        try:
            validate_spec(self.periods)
            self.share_basis = ShareBasis(self.share_basis)
            self.universe = Universe(self.universe)
        except (InvalidSpec, ValueError) as exc:
            raise ConfigInvalid(str(exc)) from exc
        labels = set(self.periods.labels)
        for label, t in self.thresholds.items():
            if label not in labels:
                raise ConfigInvalid(f"threshold override for unknown period {label!r}")
            if t < 1:
                raise ConfigInvalid(f"threshold override for {label} must be >= 1")
        if self.scatter_period is not None and self.scatter_period not in labels:
            raise ConfigInvalid(f"unknown scatter period {self.scatter_period!r}")

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            if f.name == "output_dir":
                continue
            value = getattr(self, f.name)
            if f.name == "periods":
                value = [list(p) for p in value.periods]
            elif isinstance(value, (ShareBasis, Universe)):
                value = value.value
            elif isinstance(value, dict):
                value = dict(sorted(value.items()))
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any], **overrides) -> RunConfig:
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        if "periods" in data:
            data["periods"] = PeriodSpec.of(data["periods"])
        data.update(overrides)
        return cls(**data)

    @classmethod
    def from_manifest(cls, path: str | Path, **overrides) -> RunConfig:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        return cls.from_dict(manifest["config"], **overrides)


# ---------------------------------------------------------------------------
# report tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdRow:
    period: str
    choice: ThresholdChoice | None
    matched_papers: int
    core_refs: int
    basis: ShareBasis
    target_share: float


@dataclass(frozen=True)
class ThresholdTable:
    rows: tuple[ThresholdRow, ...] = ()


@dataclass(frozen=True)
class QuadrantRow:
    period: str
    author: AuthorKey
    pop_rank: int | None
    pres_rank: int | None
    quadrant: QuadrantLabel


@dataclass(frozen=True)
class QuadrantTable:
    rows: tuple[QuadrantRow, ...] = ()


@dataclass(frozen=True)
class CorrelationRow:
    period: str
    pair: str
    result: CorrelationResult | None
    n: int
    universe: Universe


@dataclass(frozen=True)
class CorrelationTable:
    rows: tuple[CorrelationRow, ...] = ()


@dataclass(frozen=True)
class PublicationRow:
    period: str
    basis: str
    rank: int
    key: RefKey
    count: int


@dataclass(frozen=True)
class PublicationTable:
    rows: tuple[PublicationRow, ...] = ()


@dataclass(frozen=True)
class ScatterRow:
    author: AuthorKey
    prestige_rank: int | None
    popularity_rank: int | None
    if_rank: int | None


@dataclass(frozen=True)
class ScatterTable:
    period: str | None = None
    rows: tuple[ScatterRow, ...] = ()


@dataclass
class ReportBundle:
    periods: list[str]
    esteem: dict[str, EsteemResult]
    popularity: dict[str, Ranking]
    prestige: dict[str, Ranking]
    weighted: dict[str, Ranking]
    thresholds: ThresholdTable
    persistence: dict[str, PersistenceMatrix]
    quadrants: QuadrantTable
    correlations: CorrelationTable
    top_publications: PublicationTable
    key_publications: frozenset[RefKey]
    timeline: TimelineHistogram | None
    scatter: ScatterTable
    manifest: dict[str, Any]
    notices: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(
    config: RunConfig,
    corpus: Corpus | None = None,
    ifs: IfTable | None = None,
    meta: AuthorMetadata | None = None,
) -> ReportBundle:
    """Run the full analysis and, when ``config.output_dir`` is set, write it out.

    Pre-loaded ``corpus``/``ifs``/``meta`` skip reading the corresponding paths.
    """
    config.validate()
    inputs: dict[str, Any] = {}
    if corpus is None:
        corpus = read_corpus(config.corpus_path)
        inputs["corpus"] = {"path": str(config.corpus_path), "sha256": file_digest(config.corpus_path)}
    if ifs is None and config.if_path:
        with open(config.if_path, encoding="utf-8") as fh:
            ifs = load_if_table(fh)
        inputs["if_table"] = {"path": str(config.if_path), "sha256": file_digest(config.if_path)}
    if meta is None and config.metadata_path:
        with open(config.metadata_path, encoding="utf-8") as fh:
            meta = load_author_metadata(fh)
        inputs["metadata"] = {"path": str(config.metadata_path), "sha256": file_digest(config.metadata_path)}

    notices: list[str] = []
    if config.dedup:
        before = len(corpus)
        corpus = dedup_papers(corpus)
        notices.append(f"dedup removed {before - len(corpus)} duplicate papers")

    parts = partition(corpus, config.periods)
    slices = list(parts.slices)
    if config.exclude_self_citations:
        slices = [without_self_citations(s) for s in slices]
    labels = [s.label for s in slices]

    esteem: dict[str, EsteemResult] = {}
    hists = {}
    popularity, prestige, weighted = {}, {}, {}
    threshold_rows = []
    for s in slices:
        hist = citation_histogram(s)
        hists[s.label] = hist
        try:
            result = compute_esteem(
                s, config.target_share, config.share_basis, config.thresholds.get(s.label), hist=hist
            )
        except EmptyHistogram:
            notices.append(f"{s.label}: papers present but no cited references; prestige skipped")
            result = EsteemResult(
                popularity_counts(s), CountTable(s.label, CountKind.PRESTIGE), None, CoreRefSet(s.label)
            )
        esteem[s.label] = result
        popularity[s.label] = rank(result.popularity)
        prestige[s.label] = rank(result.prestige)
        threshold_rows.append(
            ThresholdRow(
                s.label,
                result.threshold,
                len(result.core.matched_paper_ids),
                len(result.core),
                config.share_basis,
                config.target_share,
            )
        )

    coverage = {}
    weighted_counts: dict[str, CountTable] = {}
    if ifs is not None:
        for s in slices:
            weighted_counts[s.label] = if_weighted_counts(s, ifs, config.missing_if)
            weighted[s.label] = rank(weighted_counts[s.label])
            coverage[s.label] = if_coverage(s, ifs)
    else:
        notices.append("no impact-factor table: weighted counts and IF correlations skipped")

    persist = {
        "popularity": persistence([popularity[l] for l in labels], config.top_n),
        "prestige": persistence([prestige[l] for l in labels], config.top_n),
    }

    quad_rows = []
    for label in labels:
        pop_ranks, pres_ranks = popularity[label].ranks(), prestige[label].ranks()
        for author, q in quadrants(popularity[label], prestige[label], config.quadrant_cutoff).items():
            quad_rows.append(QuadrantRow(label, author, pop_ranks.get(author), pres_ranks.get(author), q))

    corr_rows = []
    for label in labels:
        pairs = [("prestige-popularity", esteem[label].prestige, esteem[label].popularity)]
        if ifs is not None:
            w = weighted_counts[label]
            pairs += [
                ("prestige-impact_factor", esteem[label].prestige, w),
                ("popularity-impact_factor", esteem[label].popularity, w),
            ]
        for pair, a, b in pairs:
            corr_rows.append(_correlate(label, pair, a, b, config))

    pub_rows = []
    for label in labels:
        core_hist = reference_histogram(esteem[label].core.refs, label)
        for basis, hist in (("popularity", hists[label]), ("prestige", core_hist)):
            for r, key, count in ranked_publications(hist, config.top_pubs):
                pub_rows.append(PublicationRow(label, basis, r, key, count))

    keys = key_publications(pool_histograms(hists.values()), config.key_pub_k)
    timeline = None
    if meta is not None:
        timeline = career_timeline(keys, meta, config.bin_width)
    else:
        notices.append("no author metadata: career timeline skipped")

    scatter = _scatter(config, labels, popularity, prestige, weighted)

    manifest = {
        "tool": "esteem",
        "version": __version__,
        "config": config.to_dict(),
        "inputs": inputs,
        "corpus": {
            "papers": len(corpus),
            "references": corpus.n_refs,
            "skipped_records": corpus.skipped_records,
            "leftover_papers": parts.leftover,
            "warnings": [[w.line, w.message] for w in corpus.warnings],
        },
        "if_coverage": coverage,
        "key_publications": len(keys),
        "timeline_unknown": None if timeline is None else timeline.unknown,
        "notices": notices,
    }
    for note in notices:
        logger.info(note)

    bundle = ReportBundle(
        periods=labels,
        esteem=esteem,
        popularity=popularity,
        prestige=prestige,
        weighted=weighted,
        thresholds=ThresholdTable(tuple(threshold_rows)),
        persistence=persist,
        quadrants=QuadrantTable(tuple(quad_rows)),
        correlations=CorrelationTable(tuple(corr_rows)),
        top_publications=PublicationTable(tuple(pub_rows)),
        key_publications=frozenset(keys),
        timeline=timeline,
        scatter=scatter,
        manifest=manifest,
        notices=notices,
    )
    if config.output_dir is not None:
        write_bundle(bundle, config.output_dir)
    return bundle


def _correlate(label: str, pair: str, a: CountTable, b: CountTable, config: RunConfig) -> CorrelationRow:
    n = len(universe_authors(a, b, config.universe))
    try:
        result = spearman(a, b, config.universe, config.permutations, config.seed)
    except DegenerateInput:
        result = None
    return CorrelationRow(label, pair, result, n, config.universe)


def _scatter(config, labels, popularity, prestige, weighted) -> ScatterTable:
    period = config.scatter_period
    if period is None:
        period = next((l for l in reversed(labels) if len(popularity[l])), None)
    if period is None:
        return ScatterTable()
    pop = popularity[period].ranks()
    pres = prestige[period].ranks()
    wt = weighted[period].ranks() if period in weighted else {}
    far = float("inf")
    authors = sorted(
        pop.keys() | pres.keys() | wt.keys(),
        key=lambda a: (pres.get(a, far), pop.get(a, far), wt.get(a, far), a),
    )
    rows = tuple(ScatterRow(a, pres.get(a), pop.get(a), wt.get(a)) for a in authors)
    return ScatterTable(period, rows)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

RANKING_HEADER = ("period", "rank", "author", "count")
THRESHOLD_HEADER = ("period", "threshold", "achieved_share", "target_share", "basis", "matched_papers", "core_refs")
PERSISTENCE_HEADER = ("from_phase", "to_phase", "retained", "base")
QUADRANT_HEADER = ("period", "author", "pop_rank", "pres_rank", "quadrant")
CORRELATION_HEADER = ("period", "pair", "rho", "n", "p_value", "universe")
PUBLICATION_HEADER = ("period", "basis", "rank", "author", "year", "source", "volume", "page", "count")
TIMELINE_HEADER = ("bin_start", "count")
SCATTER_HEADER = ("author", "prestige_rank", "popularity_rank", "if_rank")


def fmt(value: Any) -> str:
    """Cell text: empty for None, integers bare, other floats via repr."""
    if value is None:
        return ""
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return repr(value)
    return str(value)


def fmt_share(value: float) -> str:
    return repr(float(value))


@singledispatch
def table_rows(table) -> tuple[tuple[str, ...], list[tuple]]:
    raise TypeError(f"no CSV layout for {type(table).__name__}")


@table_rows.register
def _(table: Ranking):
    if table.kind is CountKind.WEIGHTED:
        rows = [(table.scope, e.rank, e.author, fmt_share(e.count)) for e in table.entries]
    else:
        rows = [(table.scope, e.rank, e.author, fmt(e.count)) for e in table.entries]
    return RANKING_HEADER, rows


@table_rows.register
def _(table: ThresholdTable):
    rows = []
    for r in table.rows:
        c = r.choice
        rows.append(
            (
                r.period,
                "" if c is None else c.threshold,
                "" if c is None else fmt_share(c.achieved_share),
                fmt_share(r.target_share if c is None else c.target_share),
                str(r.basis if c is None else c.basis),
                r.matched_papers,
                r.core_refs,
            )
        )
    return THRESHOLD_HEADER, rows


@table_rows.register
def _(table: PersistenceMatrix):
    return PERSISTENCE_HEADER, [(i, j, ret, base) for (i, j), (ret, base) in table.cells.items()]


@table_rows.register
def _(table: QuadrantTable):
    return QUADRANT_HEADER, [(r.period, r.author, fmt(r.pop_rank), fmt(r.pres_rank), str(r.quadrant)) for r in table.rows]


@table_rows.register
def _(table: CorrelationTable):
    rows = []
    for r in table.rows:
        res = r.result
        rows.append(
            (
                r.period,
                r.pair,
                "" if res is None else repr(res.rho),
                r.n,
                "" if res is None or res.p_value is None else repr(res.p_value),
                str(r.universe),
            )
        )
    return CORRELATION_HEADER, rows


@table_rows.register
def _(table: PublicationTable):
    rows = [
        (r.period, r.basis, r.rank, r.key.author, r.key.year, r.key.source, fmt(r.key.volume), fmt(r.key.page), r.count)
        for r in table.rows
    ]
    return PUBLICATION_HEADER, rows


@table_rows.register
def _(table: TimelineHistogram):
    return TIMELINE_HEADER, sorted(table.bins.items())


@table_rows.register
def _(table: ScatterTable):
    return SCATTER_HEADER, [
        (r.author, fmt(r.prestige_rank), fmt(r.popularity_rank), fmt(r.if_rank)) for r in table.rows
    ]


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def emit_csv(table) -> bytes:
    """Render any report table as UTF-8 CSV with its fixed header."""
    header, rows = table_rows(table)
    return csv_bytes(header, rows)


_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]")


def _safe(label: str) -> str:
    return _UNSAFE.sub("_", label)


def emit_plot_data(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write ``scatter.csv`` and ``timeline.csv`` for external plotting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timeline = bundle.timeline if bundle.timeline is not None else TimelineHistogram(0)
    written = []
    for name, table in (("scatter.csv", bundle.scatter), ("timeline.csv", timeline)):
        path = out / name
        path.write_bytes(emit_csv(table))
        written.append(path)
    return written


def manifest_bytes(manifest: dict[str, Any]) -> bytes:
    return (json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def bundle_files(bundle: ReportBundle) -> dict[str, bytes]:
    """File name -> content for every table in the bundle, in write order."""
    files: dict[str, bytes] = {}
    for label in bundle.periods:
        files[f"popularity_{_safe(label)}.csv"] = emit_csv(bundle.popularity[label])
        files[f"prestige_{_safe(label)}.csv"] = emit_csv(bundle.prestige[label])
        if label in bundle.weighted:
            files[f"weighted_{_safe(label)}.csv"] = emit_csv(bundle.weighted[label])
    files["thresholds.csv"] = emit_csv(bundle.thresholds)
    for kind, matrix in bundle.persistence.items():
        files[f"persistence_{kind}.csv"] = emit_csv(matrix)
    files["quadrants.csv"] = emit_csv(bundle.quadrants)
    files["correlations.csv"] = emit_csv(bundle.correlations)
    files["top_publications.csv"] = emit_csv(bundle.top_publications)
    files["manifest.json"] = manifest_bytes(bundle.manifest)
    return files


def write_bundle(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in bundle_files(bundle).items():
        path = out / name
        path.write_bytes(data)
        written.append(path)
    written += emit_plot_data(bundle, out)
    return written


def read_ranking_csv(source) -> dict[str, CountTable]:
    """Load a ``period,rank,author,count`` CSV back into per-period count tables."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_ranking_csv(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != RANKING_HEADER:
        raise ConfigInvalid(f"expected ranking header {','.join(RANKING_HEADER)!r}")
    tables: dict[str, dict[AuthorKey, float]] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != len(RANKING_HEADER):
            raise ConfigInvalid(f"line {reader.line_num}: expected 4 cells, got {len(row)}")
        period, _, author, count = row
        try:
            value = float(count)
        except ValueError:
            raise ConfigInvalid(f"line {reader.line_num}: bad count {count!r}") from None
        tables.setdefault(period, {})[AuthorKey(author)] = value
    return {p: CountTable(p, CountKind.WEIGHTED, c) for p, c in tables.items()}


__all__ = [
    "ReportBundle",
    "RunConfig",
    "bundle_files",
    "emit_csv",
    "emit_plot_data",
    "read_ranking_csv",
    "run_pipeline",
    "write_bundle",
]
