"""Command-line front end: ``bridge embed`` and ``bridge pgm``."""

import argparse
import sys

from .bridge import BridgeConfig, embed_tree, to_pgm_tree
from .encoder import encoder_names


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; route that to the validation code
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="bridge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed an image tree to EMB1 + manifest")
    p.add_argument("--in", dest="in_root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--encoder", default="patch-stats-64",
                   help=f"one of: {', '.join(encoder_names())}")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--grayscale", action="store_true")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("pgm", help="convert an image tree to grayscale PGM")
    p.add_argument("--in", dest="in_root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--side", type=int, default=64)
    p.set_defaults(func=_cmd_pgm)
    return parser


def _cmd_embed(args) -> None:
    cfg = BridgeConfig(input_root=args.in_root, output_root=args.out,
                       encoder=args.encoder, batch_size=args.batch,
                       device=args.device, grayscale=args.grayscale)
    print(embed_tree(cfg))


def _cmd_pgm(args) -> None:
    cfg = BridgeConfig(input_root=args.in_root, output_root=args.out,
                       pgm_side=args.side)
    print(to_pgm_tree(cfg))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except (_UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
