#!/usr/bin/env python3
"""Fixture step: copies inputs into normalized working files."""
import pathlib
import sys


def main() -> int:
    inputs = [a for a in sys.argv[1:] if not a.startswith("--")]
    for i, name in enumerate(inputs or ["none"]):
        pathlib.Path(f"normalized_{i}.mnc").write_text(f"normalized:{pathlib.Path(name).name}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
