"""Command-line entry point: ``uvcurate <stage> [options]``.

Exit codes: 0 clean, 2 completed with deferred clips, 1 error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .errors import ConfigError, CurationError, ProviderError

log = logging.getLogger("uvcurate")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config (default: $UVCURATE_CONFIG, else built-in defaults)")
    p.add_argument("--manifest", default="manifest.jsonl", help="manifest path (default: %(default)s)")
    p.add_argument("--workers", type=int, help="clip tasks run concurrently")
    p.add_argument("--seed", type=int, help="seed for sampling and synthesis")
    p.add_argument("--strict-providers", action="store_true",
                   help="treat provider failures as errors instead of deferring clips")
    p.add_argument("--mock-providers", action="store_true",
                   help="use deterministic in-process providers for every model-backed kind")
    p.add_argument("--truth", help="truth.jsonl whose text boxes back the mock text detector")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvcurate", description="UHD video-corpus curation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="register Y4M files and frame sequences")
    _common(p)
    p.add_argument("--corpus", required=True, help="directory of *.y4m files / frame_%%06d dirs")
    p.add_argument("--theme", action="append", default=[], help="theme tag attached to every source")

    for name, text in (("split", "detect shots and classify clip durations"),
                       ("filter", "run text / border / exposure / graying filters"),
                       ("purify", "score and gate clips via providers"),
                       ("caption", "structured captions plus summary")):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("sample", help="draw training prompts and sub-clip ranges")
    _common(p)
    p.add_argument("--out", help="JSONL output (default: stdout)")

    p = sub.add_parser("stats", help="bucket counts and caption-length histograms")
    _common(p)
    p.add_argument("--out", help="stats JSON path (default: stats.json beside the manifest)")

    p = sub.add_parser("run", help="ingest, split, filter, purify and caption in one go")
    _common(p)
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("synth", help="write a synthetic defect corpus with ground truth")
    p.add_argument("--out", required=True, help="output directory (gets corpus/ and truth.jsonl)")
    p.add_argument("--kind", choices=("filters", "cuts"), default="filters")
    p.add_argument("--clips", type=int, default=None, help="number of clips (default 200 / 50)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("config", help="configuration helpers")
    csub = p.add_subparsers(dest="config_command", required=True)
    d = csub.add_parser("dump", help="print the effective config as TOML")
    d.add_argument("--config")
    return parser


def _providers(args, cfg):
    from . import synth
    from .providers import MockProvider, ProviderSet, default_mock_handlers

    if args.mock_providers:
        lookup = synth.truth_textbox_lookup(args.truth) if args.truth else None
        mock = MockProvider(default_mock_handlers(textboxes=lookup))
        return ProviderSet({kind: mock for kind in mock.handlers})
    return ProviderSet.from_endpoints(cfg.providers)


def _run(args) -> int:
    if args.command == "config":
        sys.stdout.write(config_mod.load(args.config).dumps())
        return 0
    # stage modules pull in numpy and scikit-learn; keep `config dump` light
    from . import pipeline, synth
    from .manifest import Manifest

    if args.command == "synth":
        if args.kind == "filters":
            specs = [s for s, _ in synth.filter_corpus(args.clips or 200, args.seed)]
        else:
            specs = synth.cut_corpus(args.clips or 50, args.seed)
        truths = synth.write_corpus(args.out, specs, args.seed)
        print(f"synth: wrote {len(truths)} clips to {Path(args.out) / 'corpus'}")
        return 0

    cfg = config_mod.load(args.config).with_overrides(workers=args.workers, seed=args.seed)
    ctx = pipeline.Context(cfg, Manifest(args.manifest), _providers(args, cfg), args.strict_providers)
    for lineno, err in ctx.manifest.load_errors:
        log.warning("manifest line %d skipped: %s", lineno, err)

    if args.command == "run":
        results = pipeline.run_all(ctx, args.corpus)
    elif args.command == "ingest":
        results = [pipeline.ingest(ctx, args.corpus, args.theme)]
    elif args.command == "sample":
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                results = [pipeline.sample(ctx, fh)]
        else:
            results = [pipeline.sample(ctx, sys.stdout)]
    elif args.command == "stats":
        results = [pipeline.stats(ctx, args.out)[0]]
    else:
        results = [pipeline.run_stage(args.command, ctx)]

    for r in results:
        print(r.summary(), file=sys.stderr)
        for err in r.errors:
            print(f"  error: {err}", file=sys.stderr)
    return max((r.exit_code for r in results), key=lambda c: (c == 1, c))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (CurationError, ProviderError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
