"""Command-line front end: validate, generate, eval, compare.

Every subcommand is a thin composition of library calls; no logic lives
here that the modules do not already provide. Exit codes: 0 success,
1 domain error (bad model, bad data, unsupported combination at
generation time), 2 usage error (bad flags or flag combinations).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional, Sequence

from .codegen import GenOptions, generate
from .errors import McumlError, SchemaError, StructureError
from .evaluation import (
    EvalReport,
    compare_many,
    compare_reports,
    evaluate,
    holdout_split,
    load_csv,
)
from .fixedpoint import Q12_4, Q22_10, QFormat
from .inference import MODE_FLT, NumericMode
from .ir import model_stats, parse_model

OUT_DIR_ENV = "MCUML_OUT_DIR"

_MODE_BITS = {"fxp32": 32, "fxp16": 16, "fxp8": 8}
_DEFAULT_FMT = {32: Q22_10, 16: Q12_4, 8: QFormat(4, 4)}


class UsageError(Exception):
    """Bad flag combination detected before any work starts."""


def _resolve_mode(mode_name: str, qformat: Optional[str]) -> NumericMode:
    if mode_name == "flt":
        if qformat is not None:
            raise UsageError("--qformat requires a fixed-point --mode")
        return MODE_FLT
    bits = _MODE_BITS[mode_name]
    if qformat is None:
        return NumericMode.fxp(_DEFAULT_FMT[bits])
    try:
        fmt = QFormat.parse(qformat)
    except ValueError as exc:
        raise UsageError(f"--qformat: {exc}") from None
    if fmt.total_bits != bits:
        raise UsageError(
            f"--qformat {qformat} is a {fmt.total_bits}-bit format but "
            f"--mode {mode_name} needs {bits} bits")
    return NumericMode.fxp(fmt)


def _load_model(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def _style_value(flag: Optional[str]) -> Optional[str]:
    # CLI spells the nested style "if-else"; the library uses "if_else"
    if flag is None:
        return None
    return flag.replace("-", "_")


def _check_family_flags(model, args):
    if getattr(args, "tree", None) is not None and model.family != "tree":
        raise UsageError(
            f"--tree only applies to tree models (model family is "
            f"{model.family!r})")
    if getattr(args, "sigmoid", None) is not None and model.family != "mlp":
        raise UsageError(
            f"--sigmoid only applies to mlp models (model family is "
            f"{model.family!r})")


def _out_path(name: str) -> str:
    base = os.environ.get(OUT_DIR_ENV, "")
    if base and not os.path.dirname(name):
        return os.path.join(base, name)
    return name


def _label_column_arg(args):
    if args.no_header:
        try:
            return int(args.label_column)
        except ValueError:
            raise UsageError(
                "--label-column must be an integer index when --no-header "
                "is given") from None
    return args.label_column


def _cmd_validate(args) -> int:
    try:
        model = _load_model(args.model)
    except StructureError as exc:
        for line in exc.violations:
            print(line)
        return 1
    except SchemaError as exc:
        print(f"schema: {exc}")
        return 1
    stats = model_stats(model)
    print(f"ok: {model.family} model, {model.n_classes} classes, "
          f"{model.n_features} features, {stats.param_count} parameters")
    return 0


def _cmd_generate(args) -> int:
    model = _load_model(args.model)
    _check_family_flags(model, args)
    mode = _resolve_mode(args.mode, args.qformat)
    opts = GenOptions(
        mode=mode,
        sigmoid=args.sigmoid,
        tree_style=_style_value(args.tree),
        symbol_prefix=args.prefix,
        emit_test_hook=args.test_hook)
    result = generate(model, opts)
    digest = hashlib.sha256(result.text.encode("utf-8")).hexdigest()
    if args.output is None:
        sys.stdout.write(result.text)
        return 0
    out = _out_path(args.output)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(result.text)
    sidecar = {
        "model_fingerprint": result.model_fingerprint,
        "sha256": digest,
        "options": {
            "mode": mode.name,
            "qformat": mode.fmt.name if mode.is_fxp else None,
            "sigmoid": args.sigmoid,
            "tree_style": _style_value(args.tree),
            "symbol_prefix": args.prefix,
            "emit_test_hook": args.test_hook,
        },
        "memory": result.memory.to_dict(),
        "notes": list(result.notes),
    }
    with open(out + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{digest}  {out}")
    return 0


def _cmd_eval(args) -> int:
    model = _load_model(args.model)
    _check_family_flags(model, args)
    mode = _resolve_mode(args.mode, args.qformat)
    if args.split is not None and not 0.0 < args.split < 1.0:
        raise UsageError("--split must lie strictly between 0 and 1")
    ds = load_csv(args.data, label_column=_label_column_arg(args),
                  header=not args.no_header)
    if args.split is not None:
        _, ds = holdout_split(ds, args.split, args.seed)
    report = evaluate(
        model, ds, mode,
        variant=args.sigmoid or "exact",
        style=_style_value(args.tree) or "iterative")
    text = report.render() if args.format == "text" else report.to_json()
    if args.output is None:
        print(text)
        return 0
    out = _out_path(args.output)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")
    print(f"report written to {out}")
    return 0


def _cmd_compare(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            reports.append(EvalReport.from_json(fh.read()))
    if len(reports) == 2:
        cmp = compare_reports(reports[0], reports[1], threshold=args.threshold)
        print(json.dumps(cmp.to_dict(), indent=2, sort_keys=True)
              if args.format == "json" else cmp.render())
        return 0
    if args.format == "json":
        raise UsageError("--format json supports exactly two reports")
    print(compare_many(reports, threshold=args.threshold))
    return 0


def _add_mode_flags(sp):
    sp.add_argument("--mode", choices=["flt", "fxp32", "fxp16", "fxp8"],
                    default="flt", help="numeric mode (default flt)")
    sp.add_argument("--qformat", metavar="N.M", default=None,
                    help="fixed-point format override, e.g. 22.10")
    sp.add_argument("--sigmoid",
                    choices=["exact", "rational", "pwl2", "pwl4"],
                    default=None, help="sigmoid variant (mlp models only)")
    sp.add_argument("--tree", choices=["iterative", "if-else"],
                    default=None, help="tree code style (tree models only)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcuml",
        description="Translate small trained classifiers to standalone "
                    "C++ for microcontrollers and predict their on-device "
                    "accuracy and memory footprint.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("--model", required=True, help="model JSON path")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("generate", help="emit C++ source for a model")
    p.add_argument("--model", required=True, help="model JSON path")
    _add_mode_flags(p)
    p.add_argument("--prefix", default="mc", help="symbol prefix (default mc)")
    p.add_argument("--test-hook", action="store_true", dest="test_hook",
                   help="also emit the raw-score test hook")
    p.add_argument("-o", "--output", default=None,
                   help="output path (stdout if omitted); bare filenames "
                        f"resolve against ${OUT_DIR_ENV} when set")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("eval", help="evaluate a model on a CSV dataset")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--data", required=True, help="CSV dataset path")
    _add_mode_flags(p)
    p.add_argument("--label-column", default="label",
                   help="label column name or index (default 'label')")
    p.add_argument("--no-header", action="store_true",
                   help="CSV has no header row")
    p.add_argument("--split", type=float, default=None, metavar="FRAC",
                   help="hold out FRAC for training and evaluate on the rest")
    p.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p.add_argument("--format", choices=["json", "text"], default="json",
                   help="report format (default json)")
    p.add_argument("-o", "--output", default=None,
                   help="report output path (stdout if omitted)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="compare evaluation reports")
    p.add_argument("reports", nargs="+", metavar="REPORT.json",
                   help="two or more report files; first is the baseline")
    p.add_argument("--threshold", type=float, default=0.01,
                   help="accuracy regression threshold (default 0.01)")
    p.add_argument("--format", choices=["text", "json"], default="text",
                   help="output format (default text)")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.command == "compare" and len(args.reports) < 2:
            raise UsageError("compare needs at least two report files")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except McumlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
