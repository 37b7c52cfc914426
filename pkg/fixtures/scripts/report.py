#!/usr/bin/env python3
"""Fixture step: aggregates upstream outputs into a summary report."""
import pathlib
import sys


def main() -> int:
    inputs = [a for a in sys.argv[1:] if not a.startswith("--")]
    lines = [pathlib.Path(p).name for p in inputs]
    pathlib.Path("report.txt").write_text("\n".join(["summary"] + lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
