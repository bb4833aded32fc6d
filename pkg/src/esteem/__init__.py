"""Popularity and prestige measures of scholarly esteem from citation records."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    AuthorKey,
    AuthorMetadata,
    CitedRef,
    Corpus,
    IfTable,
    PaperRecord,
    RefKey,
    load_author_metadata,
    load_if_table,
    normalize_author,
    parse_corpus,
    parse_reference,
    read_corpus,
)
from .metrics import (  # noqa: E402
    CountKind,
    CountTable,
    ShareBasis,
    citation_histogram,
    compute_esteem,
    popularity_counts,
    prestige_counts,
    select_threshold,
)
from .periods import PeriodSpec, default_periods, partition  # noqa: E402
from .ranking import persistence, quadrants, rank, top_n  # noqa: E402
from .stats import Universe, if_weighted_counts, spearman  # noqa: E402
