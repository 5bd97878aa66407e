#!/usr/bin/env python3
"""Download the UCI pen-digits dataset and write data/pendigits.csv.

The accuracy-gap checks in tests/test_acceptance.py need the full
10,992-instance set (7,494 training + 3,498 test instances merged; the
tests apply their own documented 70/30 stratified split). Run this on a
machine with internet access, or set MCUML_PENDIGITS to point at an
existing copy of the CSV.
"""

import csv
import os
import sys
import urllib.request

BASE = ("https://archive.ics.uci.edu/ml/machine-learning-databases/"
        "pendigits/")
PARTS = ("pendigits.tra", "pendigits.tes")
EXPECTED_ROWS = 10_992
N_FEATURES = 16


def fetch(url: str) -> str:
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read().decode("ascii")


def main() -> int:
    out_path = os.path.join(os.path.dirname(os.path.dirname(
        os.path.abspath(__file__))), "data", "pendigits.csv")
    rows = []
    for part in PARTS:
        try:
            text = fetch(BASE + part)
        except OSError as exc:
            print(f"download failed: {exc}", file=sys.stderr)
            print("no internet access? fetch the files manually and "
                  "concatenate them, or set MCUML_PENDIGITS", file=sys.stderr)
            return 1
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != N_FEATURES + 1:
                print(f"malformed line in {part}: {line!r}", file=sys.stderr)
                return 1
            rows.append(cells)
    if len(rows) != EXPECTED_ROWS:
        print(f"expected {EXPECTED_ROWS} rows, got {len(rows)}",
              file=sys.stderr)
        return 1
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(N_FEATURES)] + ["label"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
