"""``msie`` command line: one subcommand per pipeline stage, plus ``all``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import MsieError
from .pipeline import STAGES, Pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msie", description="Multi-source listing price pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("all",):
        sp = sub.add_parser(name)
        sp.add_argument("-c", "--config", help="JSON config file")
        sp.add_argument("-o", "--out-dir", default="out", help="artifact directory")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        if name in ("train", "evaluate", "predict"):
            sp.add_argument("--variant", choices=("S", "ST", "STP"))
        if name in ("sentiment", "all"):
            sp.add_argument("--labeled-corpus", help="label<TAB>text file replacing the bundled reviews")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "labeled_corpus", None):
            cfg.paths.labeled_corpus = args.labeled_corpus
        pipe = Pipeline(cfg, args.out_dir)
        if args.command == "all":
            pipe.run_all()
        else:
            pipe.run(args.command, variant=getattr(args, "variant", None))
    except MsieError as exc:
        print(f"msie {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"msie {args.command}: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"msie {args.command}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
