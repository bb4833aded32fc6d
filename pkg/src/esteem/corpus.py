"""Tagged citation-record ingest.

The corpus file is a sequence of blank-line separated records.  Each line is a
two-letter tag, one space, and a value::

    ID 17
    AU SALTON G
    PY 1983
    SO INTRO MODERN INFORMA
    VL 1
    BP 1
    CR ROBERTSON SE, 1976, J AM SOC INFORM SCI, V27, P129

Only AU, PY and SO are required.  CR repeats, one cited reference per line.
Lines indented with whitespace continue the previous tag, which lets
Web of Science style multi-line CR blocks through unchanged.
"""

from __future__ import annotations

import csv
import gc
import io
import logging
import math
import re
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple, NewType, TextIO

from .errors import EmptyAuthor, MalformedIfRow, MalformedMetadataRow, MalformedReference

logger = logging.getLogger(__name__)

AuthorKey = NewType("AuthorKey", str)

YEAR_MIN = 1800
YEAR_MAX = 2100

KNOWN_TAGS = frozenset({"ID", "AU", "PY", "SO", "VL", "BP", "CR"})

_TAG = re.compile(r"[A-Z][A-Z0-9]")


class RefKey(NamedTuple):
    """Identity of a cited item: first author, year, source, volume, page."""

    author: AuthorKey
    year: int
    source: str
    volume: int | None = None
    page: int | None = None

    def sort_key(self) -> tuple:
        # absent volume/page sort before any number
        return (
            self.author,
            self.year,
            self.source,
            -1 if self.volume is None else self.volume,
            -1 if self.page is None else self.page,
        )


@dataclass(frozen=True, slots=True)
class CitedRef:
    key: RefKey
    raw: str = field(default="", compare=False)


@dataclass(frozen=True, slots=True)
class PaperRecord:
    id: str
    author: AuthorKey
    year: int
    source: str
    volume: int | None = None
    page: int | None = None
    refs: tuple[CitedRef, ...] = ()

    def match_key(self) -> tuple[AuthorKey, int, int, int] | None:
        """(author, year, volume, page), or None when volume or page is absent."""
        if self.volume is None or self.page is None:
            return None
        return (self.author, self.year, self.volume, self.page)

    def dedup_key(self) -> tuple:
        return (self.author, self.year, self.source, self.volume, self.page)


class ParseWarning(NamedTuple):
    line: int
    message: str


SKIP_PREFIX = "skipped record"


@dataclass(frozen=True)
class Corpus:
    papers: tuple[PaperRecord, ...] = ()
    warnings: tuple[ParseWarning, ...] = ()

    def __len__(self) -> int:
        return len(self.papers)

    @property
    def skipped_records(self) -> int:
        return sum(1 for w in self.warnings if w.message.startswith(SKIP_PREFIX))

    @property
    def n_refs(self) -> int:
        return sum(len(p.refs) for p in self.papers)


@dataclass(frozen=True)
class IfTable:
    entries: dict[str, float] = field(default_factory=dict)
    warnings: tuple[ParseWarning, ...] = ()

    def get(self, source: str) -> float | None:
        return self.entries.get(source)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class AuthorInfo:
    phd_year: int | None = None
    gender: str | None = None
    affiliation: str | None = None


@dataclass(frozen=True)
class AuthorMetadata:
    entries: dict[AuthorKey, AuthorInfo] = field(default_factory=dict)
    warnings: tuple[ParseWarning, ...] = ()

    def phd_year(self, author: AuthorKey) -> int | None:
        info = self.entries.get(author)
        return None if info is None else info.phd_year

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1 << 16)
def normalize_author(raw: str) -> AuthorKey:
    """Canonical author key: ``"Salton, G."`` -> ``"SALTON G"``.

    Text before the first comma is the surname and the remainder the
    initials; without a comma the token order is kept.
    """
    text = raw.strip()
    if not text:
        raise EmptyAuthor("empty author name")
    if "," in text:
        surname, _, rest = text.partition(",")
        text = surname + " " + rest
    text = " ".join(text.replace(",", " ").replace(".", "").split()).upper()
    if not text:
        raise EmptyAuthor(f"author name {raw!r} has no letters")
    return AuthorKey(text)


def canonical_source(raw: str) -> str:
    return " ".join(raw.split()).upper()


def _positive_int(text: str) -> int | None:
    text = text.strip()
    if not (text.isascii() and text.isdigit()):
        return None
    value = int(text)
    return value if value >= 1 else None


def _parse_year(text: str) -> int | None:
    text = text.strip()
    if len(text) != 4 or not (text.isascii() and text.isdigit()):
        return None
    year = int(text)
    return year if YEAR_MIN <= year <= YEAR_MAX else None


@lru_cache(maxsize=1 << 20)
def parse_reference(line: str) -> CitedRef:
    """Parse one CR value: ``author, year, source[, V<n>][, P<n>]``.

    V/P prefixes are case-insensitive and may come in either order; bare
    integers in the fourth and fifth segments are read as volume and page.
    Unrecognised trailing segments (DOIs and the like) are ignored.
    """
    segments = line.split(",")
    try:
        author = normalize_author(segments[0])
    except EmptyAuthor as exc:
        raise MalformedReference(f"reference without author: {line!r}") from exc
    if len(segments) < 2:
        raise MalformedReference(f"reference without year: {line!r}")
    year = _parse_year(segments[1])
    if year is None:
        raise MalformedReference(f"bad year {segments[1].strip()!r} in reference {line!r}")
    source = canonical_source(segments[2]) if len(segments) > 2 else ""

    volume = page = None
    for pos, seg in enumerate(segments[3:], start=3):
        seg = seg.strip()
        head = seg[:1]
        if head in ("V", "v", "P", "p") and len(seg) > 1:
            value = _positive_int(seg[1:])
            if value is None and not seg[1:].strip().isdigit():
                continue  # not a V/P segment, e.g. "PROC"
            if head in ("V", "v"):
                volume = volume if volume is not None else value
            else:
                page = page if page is not None else value
        elif seg.isascii() and seg.isdigit():
            if pos == 3 and volume is None:
                volume = _positive_int(seg)
            elif pos == 4 and page is None:
                page = _positive_int(seg)
    return CitedRef(RefKey(author, year, source, volume, page), line)


def format_reference(key: RefKey) -> str:
    parts = [key.author, str(key.year), key.source]
    if key.volume is not None:
        parts.append(f"V{key.volume}")
    if key.page is not None:
        parts.append(f"P{key.page}")
    return ", ".join(parts)


# ---------------------------------------------------------------------------
# corpus parsing
# ---------------------------------------------------------------------------


def _read_lines(source: TextIO | Iterable[str] | str) -> list[str]:
    if isinstance(source, str):
        return source.splitlines()
    if hasattr(source, "read"):
        return source.read().splitlines()
    return [line.rstrip("\r\n") for line in source]


@contextmanager
def _gc_paused() -> Iterator[None]:
    # parsing allocates millions of acyclic objects; cyclic GC passes over
    # them cost about a quarter of the parse time at 100k papers
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def parse_corpus(source: TextIO | Iterable[str] | str) -> Corpus:
    """Parse a tagged corpus into a :class:`Corpus`.

    ``source`` is an open text stream, any iterable of lines, or the full
    text as a string.  Bad content never raises: broken records are skipped
    and malformed CR lines dropped, each with a :class:`ParseWarning`.
    """
    with _gc_paused():
        return _parse_lines(_read_lines(source))


def _parse_lines(lines: list[str]) -> Corpus:
    papers: list[PaperRecord] = []
    warnings: list[ParseWarning] = []
    seen_ids: set[str] = set()

    ordinal = 0
    start = None
    for i, line in enumerate(lines):
        blank = not line or line.isspace()
        if blank and start is not None:
            ordinal += 1
            paper = _parse_record(lines, start, i, ordinal, seen_ids, warnings)
            if paper is not None:
                seen_ids.add(paper.id)
                papers.append(paper)
            start = None
        elif not blank and start is None:
            start = i
    if start is not None:
        ordinal += 1
        paper = _parse_record(lines, start, len(lines), ordinal, seen_ids, warnings)
        if paper is not None:
            papers.append(paper)

    if warnings:
        logger.info("parsed %d papers with %d warnings", len(papers), len(warnings))
    return Corpus(tuple(papers), tuple(warnings))


def _parse_record(
    lines: list[str],
    begin: int,
    end: int,
    ordinal: int,
    seen_ids: set[str],
    warnings: list[ParseWarning],
) -> PaperRecord | None:
    """Parse lines[begin:end] (0-based) as one record; line numbers are 1-based."""
    fields: dict[str, tuple[int, str]] = {}
    crs: list[tuple[int, str]] = []
    last_tag = None
    start = begin + 1

    for idx in range(begin, end):
        line = lines[idx]
        tag = line[:2]
        if tag == "CR" and line[2:3] == " ":
            last_tag = "CR"
            crs.append((idx + 1, line[3:].strip()))
            continue
        lineno = idx + 1
        if line[0].isspace():
            value = line.strip()
            if last_tag == "CR":
                crs.append((lineno, value))
            elif last_tag is None:
                warnings.append(ParseWarning(lineno, f"continuation line without a tag: {value!r}"))
            continue
        if not _TAG.fullmatch(tag) or (len(line) > 2 and line[2] != " "):
            warnings.append(ParseWarning(lineno, f"unparseable line: {line!r}"))
            last_tag = None
            continue
        value = line[3:].strip()
        last_tag = tag
        if tag == "CR":
            continue  # bare "CR" with no value
        elif tag not in KNOWN_TAGS:
            warnings.append(ParseWarning(lineno, f"ignored unknown tag {tag}"))
        elif tag in fields:
            warnings.append(ParseWarning(lineno, f"duplicate {tag} field ignored"))
        else:
            fields[tag] = (lineno, value)

    def skip(lineno: int, why: str) -> None:
        warnings.append(ParseWarning(lineno, f"{SKIP_PREFIX} {ordinal}: {why}"))

    for tag in ("AU", "PY", "SO"):
        if tag not in fields or not fields[tag][1]:
            skip(fields.get(tag, (start, ""))[0], f"missing {tag}")
            return None

    au_line, au = fields["AU"]
    try:
        author = normalize_author(au)
    except EmptyAuthor:
        skip(au_line, f"unusable AU {au!r}")
        return None
    py_line, py = fields["PY"]
    year = _parse_year(py)
    if year is None:
        skip(py_line, f"invalid PY {py!r}")
        return None
    so_line, so = fields["SO"]
    source = canonical_source(so)

    if "ID" in fields and fields["ID"][1]:
        id_line, paper_id = fields["ID"]
    else:
        id_line, paper_id = start, str(ordinal)
    if paper_id in seen_ids:
        skip(id_line, f"duplicate id {paper_id!r}")
        return None

    numbers: dict[str, int | None] = {}
    for tag in ("VL", "BP"):
        numbers[tag] = None
        if tag in fields and fields[tag][1]:
            lineno, text = fields[tag]
            numbers[tag] = _positive_int(text)
            if numbers[tag] is None:
                warnings.append(ParseWarning(lineno, f"non-numeric {tag} {text!r} treated as absent"))

    refs = []
    for lineno, value in crs:
        if not value:
            continue
        try:
            refs.append(parse_reference(value))
        except MalformedReference as exc:
            warnings.append(ParseWarning(lineno, f"dropped reference: {exc}"))

    return PaperRecord(
        id=paper_id,
        author=author,
        year=year,
        source=source,
        volume=numbers["VL"],
        page=numbers["BP"],
        refs=tuple(refs),
    )


def read_corpus(path: str | Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def format_corpus(papers: Iterable[PaperRecord], include_ids: bool = True) -> str:
    """Serialize papers back into the tagged format (inverse of parse_corpus)."""
    out: list[str] = []
    for paper in papers:
        if out:
            out.append("")
        if include_ids:
            out.append(f"ID {paper.id}")
        out.append(f"AU {paper.author}")
        out.append(f"PY {paper.year}")
        out.append(f"SO {paper.source}")
        if paper.volume is not None:
            out.append(f"VL {paper.volume}")
        if paper.page is not None:
            out.append(f"BP {paper.page}")
        out.extend(f"CR {format_reference(ref.key)}" for ref in paper.refs)
    return "\n".join(out) + "\n" if out else ""


def dedup_papers(corpus: Corpus) -> Corpus:
    """Drop repeated (author, year, source, volume, page) records, keeping the first."""
    seen: set[tuple] = set()
    kept = []
    for paper in corpus.papers:
        key = paper.dedup_key()
        if key not in seen:
            seen.add(key)
            kept.append(paper)
    return Corpus(tuple(kept), corpus.warnings)


# ---------------------------------------------------------------------------
# auxiliary tables
# ---------------------------------------------------------------------------


def _csv_rows(source: TextIO | str, header: list[str], error: type[Exception]):
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    first = next(reader, None)
    if first is None:
        return
    if [cell.strip().upper() for cell in first] != header:
        raise error(f"line 1: expected header {','.join(header)!r}, got {','.join(first)!r}")
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise error(f"line {reader.line_num}: expected {len(header)} cells, got {len(row)}")
        yield reader.line_num, [cell.strip() for cell in row]


def load_if_table(source: TextIO | str) -> IfTable:
    """Read a ``SOURCE,IF`` CSV.  Repeated sources keep the last value."""
    entries: dict[str, float] = {}
    warnings: list[ParseWarning] = []
    for lineno, (name, value) in _csv_rows(source, ["SOURCE", "IF"], MalformedIfRow):
        try:
            impact = float(value)
        except ValueError:
            raise MalformedIfRow(f"line {lineno}: non-numeric impact factor {value!r}") from None
        if not math.isfinite(impact) or impact < 0:
            raise MalformedIfRow(f"line {lineno}: impact factor must be a finite value >= 0, got {value!r}")
        key = canonical_source(name)
        if key in entries:
            warnings.append(ParseWarning(lineno, f"duplicate source {key!r}; last value wins"))
        entries[key] = impact
    return IfTable(entries, tuple(warnings))


def load_author_metadata(source: TextIO | str) -> AuthorMetadata:
    header = ["AUTHOR", "PHD_YEAR", "GENDER", "AFFILIATION"]
    entries: dict[AuthorKey, AuthorInfo] = {}
    warnings: list[ParseWarning] = []
    for lineno, (name, phd, gender, affiliation) in _csv_rows(source, header, MalformedMetadataRow):
        try:
            author = normalize_author(name)
        except EmptyAuthor:
            raise MalformedMetadataRow(f"line {lineno}: empty AUTHOR") from None
        phd_year = None
        if phd:
            phd_year = _parse_year(phd)
            if phd_year is None:
                raise MalformedMetadataRow(f"line {lineno}: bad PHD_YEAR {phd!r}")
        if len(gender) > 1:
            raise MalformedMetadataRow(f"line {lineno}: GENDER must be a single character, got {gender!r}")
        if author in entries:
            warnings.append(ParseWarning(lineno, f"duplicate author {author!r}; last row wins"))
        entries[author] = AuthorInfo(phd_year, gender or None, affiliation or None)
    return AuthorMetadata(entries, tuple(warnings))
