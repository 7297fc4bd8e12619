"""Command line for the converter.

Usage: rml2gamc convert <archive> <output> [--verify] [--csv PATH]

Exit codes: 0 success, 2 bad arguments, 3 input/archive problem,
4 verification mismatch or internal error.
"""

import argparse
import csv
import sys

from .convert import ArchiveError, ConversionSummary, VerificationError, convert, verify


def _format_summary(s: ConversionSummary) -> str:
    cell_counts = [c for _, _, c in s.per_cell]
    rows = [
        ("frames", f"{s.frame_count}"),
        ("classes", f"{len(s.class_names)}: " + " ".join(s.class_names)),
        ("snr levels", f"{len(s.snr_levels)}: "
         + " ".join(str(v) for v in s.snr_levels)),
        ("snr key kind", s.snr_key_kind),
        ("cells", f"{len(s.per_cell)} "
         f"({min(cell_counts)}..{max(cell_counts)} frames each)"),
        ("checksum", s.checksum),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _write_csv(path, s: ConversionSummary) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "snr_db", "count"])
        w.writerows(s.per_cell)


def build_parser():
    p = argparse.ArgumentParser(
        prog="rml2gamc",
        description="convert a RadioML 2016.10A archive to the GAMC container",
    )
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("convert", help="convert an archive and print a summary")
    c.add_argument("archive", help="path to the pickled RadioML archive")
    c.add_argument("output", help="path of the portable dataset to write")
    c.add_argument("--verify", action="store_true",
                   help="re-read the output and compare against the summary")
    c.add_argument("--csv", help="also write the per-cell counts as CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = convert(args.archive, args.output)
        print(_format_summary(summary))
        if args.csv:
            _write_csv(args.csv, summary)
            print(f"per-cell counts written to {args.csv}")
        if args.verify:
            verify(args.output, expected=summary)
            print("verify: ok")
        return 0
    except VerificationError as e:
        for m in e.mismatches:
            print(f"verify mismatch: {m}", file=sys.stderr)
        return 4
    except (ArchiveError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
