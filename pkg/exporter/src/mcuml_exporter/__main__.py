"""Script entry: unpickle a fitted classifier, write its model document.

    python3 -m mcuml_exporter ESTIMATOR.pkl MODEL.json

Warnings go to standard error.  Exit codes: 0 success, 1 export or load
failure, 2 usage error.
"""

import argparse
import pickle
import sys

from .export import ExporterError, export_model


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="mcuml-export",
        description="Export a pickled fitted scikit-learn classifier to model JSON.")
    ap.add_argument("estimator", help="path to a pickled fitted classifier")
    ap.add_argument("output", help="where to write the model JSON document")
    ns = ap.parse_args(argv)

    try:
        with open(ns.estimator, "rb") as fh:
            est = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError, AttributeError,
            ImportError, IndexError) as e:
        print(f"error: cannot load estimator: {e}", file=sys.stderr)
        return 1

    try:
        result = export_model(est, ns.output)
    except ExporterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: cannot write document: {e}", file=sys.stderr)
        return 1

    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
