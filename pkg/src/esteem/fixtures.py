"""Bundled example corpora."""

from __future__ import annotations

from importlib import resources

from .corpus import Corpus, parse_corpus


def f1_text() -> str:
    """Three-paper corpus: DOE A (1985), ROE B (1987), FOX C (1989)."""
    return resources.files("esteem").joinpath("data/f1.txt").read_text(encoding="utf-8")


def f1_corpus() -> Corpus:
    return parse_corpus(f1_text())
