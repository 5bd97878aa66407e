"""Script entry: compile an emitted source, run it on a vectors CSV.

    python3 -m mcuml_harness MODEL.cpp VECTORS.csv [-o RUN.json]

Prints (or writes) a JSON object with predictions, raw scores when the
source has the test hook, and measured section sizes.  Exit codes:
0 success, 1 compile or run failure, 2 usage error.
"""

import argparse
import json
import sys

from .runner import HarnessError, compile_and_run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="mcuml-harness",
        description="Compile an emitted classifier source and run it on CSV vectors.")
    ap.add_argument("source", help="emitted C++ source path")
    ap.add_argument("vectors", help="headerless CSV, one feature row per line")
    ap.add_argument("-o", "--output", default=None, help="write the JSON result here")
    ns = ap.parse_args(argv)

    try:
        run = compile_and_run(ns.source, ns.vectors)
    except HarnessError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    text = json.dumps(run.to_dict(), indent=2) + "\n"
    if ns.output:
        with open(ns.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
