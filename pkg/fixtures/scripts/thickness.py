#!/usr/bin/env python3
"""Fixture step: writes a fake cortical-thickness table for each input."""
import argparse
import pathlib
import sys


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--iters", type=int, default=1)
    parser.add_argument("--smoothing", type=float, default=0.0)
    parser.add_argument("--subject_tag", default="")
    parser.add_argument("--fail", default="")
    parser.add_argument("--fork_index", type=int, default=0)
    parser.add_argument("--fork_width", type=int, default=1)
    parser.add_argument("inputs", nargs="*")
    args, _ = parser.parse_known_args()
    if args.fail:
        print("synthetic failure requested", file=sys.stderr)
        return 1
    out = pathlib.Path(f"thickness_{args.fork_index}.tsv")
    rows = [f"{pathlib.Path(i).name}\t{args.iters * 0.1 + args.smoothing:.3f}" for i in args.inputs]
    out.write_text("\n".join(rows or ["empty\t0.0"]) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
