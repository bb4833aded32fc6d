"""Command line entry point: ``esteem {rank,validate,synth,correlate}``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .corpus import load_author_metadata, load_if_table, read_corpus
from .errors import ConfigInvalid, DegenerateInput, EsteemError, InvalidSpec
from .metrics import ShareBasis
from .periods import PeriodSpec, parse_period
from .report import CORRELATION_HEADER, RunConfig, csv_bytes, read_ranking_csv, run_pipeline
from .stats import DEFAULT_PERMUTATIONS, Universe, spearman, universe_authors
from .synth import SynthParams, generate_synthetic

logger = logging.getLogger("esteem")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _threshold_arg(text: str) -> tuple[str, int]:
    label, sep, value = text.rpartition(":")
    if not sep or not label or not value.strip().isdigit():
        raise argparse.ArgumentTypeError(f"expected PERIOD:T, got {text!r}")
    return label.strip(), int(value)


def _range_arg(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("-")
    try:
        return int(lo), int(hi if sep else lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START-END, got {text!r}") from None


def _period_arg(text: str):
    try:
        return parse_period(text)
    except InvalidSpec as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="esteem", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    rank = sub.add_parser("rank", help="run the full popularity/prestige pipeline")
    rank.add_argument("corpus", nargs="?", help="tagged corpus file")
    rank.add_argument("-o", "--out", default="esteem-report", help="output directory")
    rank.add_argument("--manifest", help="re-run the configuration recorded in a manifest.json")
    rank.add_argument("--period", action="append", type=_period_arg, metavar="LABEL:START-END")
    rank.add_argument("--target-share", type=float)
    rank.add_argument("--share-basis", choices=[b.value for b in ShareBasis])
    rank.add_argument("--threshold", action="append", type=_threshold_arg, metavar="PERIOD:T")
    rank.add_argument("--exclude-self-citations", action="store_true", default=None)
    rank.add_argument("--dedup", action="store_true", default=None, help="drop repeated paper records")
    rank.add_argument("--top-n", type=int)
    rank.add_argument("--quadrant-cutoff", type=int)
    rank.add_argument("--key-pub-k", type=int)
    rank.add_argument("--bin-width", type=int)
    rank.add_argument("--top-pubs", type=int)
    rank.add_argument("--if-table", dest="if_path")
    rank.add_argument("--metadata", dest="metadata_path")
    rank.add_argument("--universe", choices=[u.value for u in Universe])
    rank.add_argument("--permutations", type=int)
    rank.add_argument("--seed", type=int)
    rank.add_argument("--missing-if", type=float)
    rank.add_argument("--scatter-period")

    val = sub.add_parser("validate", help="parse inputs and report warnings")
    val.add_argument("corpus")
    val.add_argument("--if-table")
    val.add_argument("--metadata")

    syn = sub.add_parser("synth", help="write a seeded synthetic corpus")
    syn.add_argument("-o", "--out", help="output file (default stdout)")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--papers", type=int, default=1000)
    syn.add_argument("--authors", type=int, default=200)
    syn.add_argument("--years", type=_range_arg, default=(1981, 1990), metavar="START-END")
    syn.add_argument("--zipf", type=float, default=1.0)
    syn.add_argument("--refs", type=_range_arg, default=(0, 20), metavar="MIN-MAX")
    syn.add_argument("--p-in", type=float, default=0.3)

    cor = sub.add_parser("correlate", help="Spearman's rho between two ranking CSVs")
    cor.add_argument("a")
    cor.add_argument("b")
    cor.add_argument("--universe", choices=[u.value for u in Universe], default=Universe.EITHER.value)
    cor.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    cor.add_argument("--seed", type=int, default=0)
    return parser


_RANK_OPTIONS = (
    "target_share",
    "share_basis",
    "exclude_self_citations",
    "dedup",
    "top_n",
    "quadrant_cutoff",
    "key_pub_k",
    "bin_width",
    "top_pubs",
    "if_path",
    "metadata_path",
    "universe",
    "permutations",
    "seed",
    "missing_if",
    "scatter_period",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {name: getattr(args, name) for name in _RANK_OPTIONS if getattr(args, name) is not None}
    if args.period:
        overrides["periods"] = PeriodSpec(tuple(args.period))
    if args.threshold:
        overrides["thresholds"] = dict(args.threshold)
    if args.corpus:
        overrides["corpus_path"] = args.corpus
    overrides["output_dir"] = args.out
    if args.manifest:
        return RunConfig.from_manifest(args.manifest, **overrides)
    if "corpus_path" not in overrides:
        raise ConfigInvalid("a corpus file (or --manifest) is required")
    return RunConfig(**overrides)


def cmd_rank(args) -> int:
    config = config_from_args(args)
    bundle = run_pipeline(config)
    for note in bundle.notices:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote report for {len(bundle.periods)} periods to {config.output_dir}")
    return EXIT_OK


def cmd_validate(args) -> int:
    corpus = read_corpus(args.corpus)
    print(f"papers: {len(corpus)}")
    print(f"references: {corpus.n_refs}")
    print(f"skipped records: {corpus.skipped_records}")
    print(f"warnings: {len(corpus.warnings)}")
    for w in corpus.warnings:
        print(f"  line {w.line}: {w.message}")
    for path, loader in ((args.if_table, load_if_table), (args.metadata, load_author_metadata)):
        if path:
            with open(path, encoding="utf-8") as fh:
                table = loader(fh)
            print(f"{path}: {len(table)} entries, {len(table.warnings)} warnings")
            for w in table.warnings:
                print(f"  line {w.line}: {w.message}")
    return EXIT_OK


def cmd_synth(args) -> int:
    params = SynthParams(
        seed=args.seed,
        n_papers=args.papers,
        n_authors=args.authors,
        year_start=args.years[0],
        year_end=args.years[1],
        zipf_s=args.zipf,
        refs_min=args.refs[0],
        refs_max=args.refs[1],
        p_in=args.p_in,
    )
    text = generate_synthetic(params)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_correlate(args) -> int:
    a, b = read_ranking_csv(args.a), read_ranking_csv(args.b)
    pair = f"{Path(args.a).stem}-{Path(args.b).stem}"
    rows = []
    for period in sorted(a.keys() & b.keys()):
        n = len(universe_authors(a[period], b[period], Universe(args.universe)))
        try:
            res = spearman(a[period], b[period], args.universe, args.permutations, args.seed)
            rho, p = repr(res.rho), "" if res.p_value is None else repr(res.p_value)
        except DegenerateInput as exc:
            logger.warning("%s: %s", period, exc)
            rho = p = ""
        rows.append((period, pair, rho, n, p, args.universe))
    sys.stdout.write(csv_bytes(CORRELATION_HEADER, rows).decode("utf-8"))
    return EXIT_OK


COMMANDS = {"rank": cmd_rank, "validate": cmd_validate, "synth": cmd_synth, "correlate": cmd_correlate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigInvalid, InvalidSpec) as exc:
        print(f"esteem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, EsteemError) as exc:
        print(f"esteem: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
