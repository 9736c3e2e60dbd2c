"""Command line for the exporter: memefuse-export export ..."""

import argparse
import sys

from .archive import ExportArchiveError
from .export import ExportError, run_export
from .spec import ExportSpec, SpecError, load_spec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ExportError(message)


def build_parser():
    parser = _Parser(prog="memefuse-export", description=__doc__)
    sub = parser.add_subparsers(dest="cmd")
    p = sub.add_parser("export", help="encode a dataset into a feature archive")
    p.add_argument("--dataset", required=True, help="dataset JSON (id/text/image)")
    p.add_argument("--images", required=True, help="directory holding the images")
    p.add_argument("--spec", help="ExportSpec JSON; defaults when omitted")
    p.add_argument("--out", required=True, help="archive path to write")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "cmd", None) != "export":
            parser.print_help(sys.stderr)
            return 1
        spec = load_spec(args.spec) if args.spec else ExportSpec()
        dims, count = run_export(args.dataset, args.images, spec, args.out)
        print(f"exported {count} records, dims {dims} -> {args.out}")
        return 0
    except (ExportError, ExportArchiveError, SpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
