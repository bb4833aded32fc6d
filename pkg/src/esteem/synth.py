"""Seeded synthetic corpora with Zipf-skewed authorship.

Each generated paper cites, with probability ``p_in``, an earlier generated
paper (so prestige matching has something to find) and otherwise an
out-of-corpus work.  Out-of-corpus works always carry volumes of 1000 or
more while corpus papers stay below 1000, so the two never collide.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .corpus import AuthorKey, CitedRef, PaperRecord, RefKey, format_corpus, format_reference
from .errors import ConfigInvalid

SOURCES = (
    "J DOC",
    "INFORM PROCESS MANAG",
    "J AM SOC INFORM SCI",
    "J INF SCI",
    "INFORM RETRIEVAL",
    "SIGIR FORUM",
    "ANNU REV INFORM SCI",
)
WORKS_PER_AUTHOR = 25
_IN_CORPUS_MAX_VOLUME = 999


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    n_papers: int = 1000
    n_authors: int = 200
    year_start: int = 1981
    year_end: int = 1990
    zipf_s: float = 1.0
    refs_min: int = 0
    refs_max: int = 20
    p_in: float = 0.3

    def validate(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid(f"seed must fit in 64 bits, got {self.seed}")
        if self.n_papers < 0:
            raise ConfigInvalid("n_papers must be >= 0")
        if self.n_authors < 1:
            raise ConfigInvalid("n_authors must be >= 1")
        if not 1800 <= self.year_start <= self.year_end <= 2100:
            raise ConfigInvalid(f"bad year range {self.year_start}-{self.year_end}")
        if not self.zipf_s >= 0:
            raise ConfigInvalid("zipf_s must be >= 0")
        if not 0 <= self.refs_min <= self.refs_max:
            raise ConfigInvalid(f"bad refs range {self.refs_min}-{self.refs_max}")
        if not 0.0 <= self.p_in <= 1.0:
            raise ConfigInvalid("p_in must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def author_name(k: int) -> AuthorKey:
    return AuthorKey(f"AUTHOR{k:05d} {chr(65 + k % 26)}")


def zipf_weights(n: int, s: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=float) ** -s
    return w / w.sum()


def _draw(rng: np.random.Generator, cdf: np.ndarray, size: int) -> np.ndarray:
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, cdf.size - 1)


def _external_key(author: int, work: int, params: SynthParams) -> RefKey:
    mix = author * 31 + work * 17
    year = max(1800, params.year_start - 1 - mix % 50)
    source = SOURCES[(author + work) % len(SOURCES)]
    if work % 5 == 4:
        # a book-like item: no volume or page
        return RefKey(author_name(author), year, source)
    volume = _IN_CORPUS_MAX_VOLUME + 1 + (author * 7 + work) % 9000
    page = 1 + (author * 13 + work * 101) % 1500
    return RefKey(author_name(author), year, source, volume, page)


def synthesize(params: SynthParams) -> list[PaperRecord]:
    """Generate papers in year order; identical params give identical output."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    n = params.n_papers
    author_cdf = np.cumsum(zipf_weights(params.n_authors, params.zipf_s))
    work_cdf = np.cumsum(zipf_weights(WORKS_PER_AUTHOR, 1.0))

    years = np.sort(rng.integers(params.year_start, params.year_end + 1, size=n))
    authors = _draw(rng, author_cdf, n)
    sources = rng.integers(0, len(SOURCES), size=n)
    volumes = rng.integers(1, _IN_CORPUS_MAX_VOLUME + 1, size=n)
    pages = rng.integers(1, 2000, size=n)
    n_refs = rng.integers(params.refs_min, params.refs_max + 1, size=n)

    total = int(n_refs.sum())
    citing = np.repeat(np.arange(n), n_refs)
    in_corpus = (rng.random(total) < params.p_in) & (citing > 0)
    earlier = np.floor(rng.random(total) * citing).astype(np.int64)
    ext_authors = _draw(rng, author_cdf, total)
    ext_works = _draw(rng, work_cdf, total)

    papers: list[PaperRecord] = []
    own_refs: list[CitedRef] = []
    external: dict[tuple[int, int], CitedRef] = {}
    pos = 0
    for i in range(n):
        refs = []
        for r in range(pos, pos + int(n_refs[i])):
            if in_corpus[r]:
                refs.append(own_refs[earlier[r]])
            else:
                ak = (int(ext_authors[r]), int(ext_works[r]))
                ref = external.get(ak)
                if ref is None:
                    key = _external_key(*ak, params)
                    ref = external[ak] = CitedRef(key, format_reference(key))
                refs.append(ref)
        pos += int(n_refs[i])
        paper = PaperRecord(
            id=f"S{i + 1:06d}",
            author=author_name(int(authors[i])),
            year=int(years[i]),
            source=SOURCES[sources[i]],
            volume=int(volumes[i]),
            page=int(pages[i]),
            refs=tuple(refs),
        )
        key = RefKey(paper.author, paper.year, paper.source, paper.volume, paper.page)
        own_refs.append(CitedRef(key, format_reference(key)))
        papers.append(paper)
    return papers


def generate_synthetic(params: SynthParams) -> str:
    """Synthetic corpus as tagged-format text."""
    return format_corpus(synthesize(params))
