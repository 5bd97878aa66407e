"""Dataset ingestion, holdout splitting, and accuracy/overflow/memory reports.

The report produced here is the desk-scale answer to "what will this model
do on the device": accuracy under the chosen numeric mode, how often the
fixed-point pipeline saturated or flushed to zero, and how much flash/SRAM
the emitted translation would take.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .codegen import GenOptions, MemoryEstimate, estimate_memory
from .errors import (
    DegenerateClass,
    DimensionMismatch,
    LabelMismatch,
    MismatchedRuns,
    MissingLabelColumn,
    ParseError,
)
from .fixedpoint import FxpContext, OpCounters
from .inference import NumericMode, Predictor
from .ir import ModelIR, model_fingerprint

REPORT_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus integer labels indexing into class_labels."""

    features: tuple  # tuple of per-row tuples of float
    labels: tuple  # tuple of int, same length as features
    class_labels: tuple  # ordered label strings
    source_name: str = ""

    def __post_init__(self):
        if len(self.features) < 1:
            raise ValueError("dataset needs at least one row")
        if len(self.labels) != len(self.features):
            raise ValueError("labels and features must have equal length")
        d = len(self.features[0])
        for i, row in enumerate(self.features):
            if len(row) != d:
                raise ValueError(f"row {i} has {len(row)} features, expected {d}")
        k = len(self.class_labels)
        for i, lab in enumerate(self.labels):
            if not 0 <= lab < k:
                raise ValueError(f"label index {lab} at row {i} out of range")

    @property
    def n_rows(self) -> int:
        return len(self.features)

    @property
    def n_features(self) -> int:
        return len(self.features[0])

    def class_counts(self) -> dict:
        counts = {name: 0 for name in self.class_labels}
        for lab in self.labels:
            counts[self.class_labels[lab]] += 1
        return counts

    def fingerprint(self) -> str:
        """Content hash independent of source_name; ties reports to data."""
        doc = {
            "class_labels": list(self.class_labels),
            "labels": list(self.labels),
            "features": [[repr(float(v)) for v in row] for row in self.features],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(row, column, f"non-numeric value {text.strip()!r}") from None
    if not math.isfinite(v):
        raise ParseError(row, column, f"non-finite value {text.strip()!r}")
    return v


def load_csv(path, label_column: Union[str, int] = "label", header: bool = True,
             class_labels: Optional[Sequence[str]] = None) -> Dataset:
    """Read a comma-separated file into a Dataset.

    label_column names the header cell holding class labels, or gives a
    column index (negative counts from the end). Feature cells must parse
    as finite reals. Label strings map to indices by first-appearance
    order unless class_labels pins the ordering up front.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(0, "", "file contains no rows")

    if header:
        names = [c.strip() for c in rows[0]]
        data = rows[1:]
    else:
        names = [str(i) for i in range(len(rows[0]))]
        data = rows
    if not data:
        raise ParseError(0, "", "file contains no data rows")

    ncols = len(names)
    if isinstance(label_column, bool):
        raise MissingLabelColumn("label column must be a name or an index")
    if isinstance(label_column, int):
        li = label_column if label_column >= 0 else ncols + label_column
        if not 0 <= li < ncols:
            raise MissingLabelColumn(
                f"label column index {label_column} out of range for {ncols} columns")
    else:
        if label_column in names:
            li = names.index(label_column)
        else:
            # tolerate a numeric string so CLI users can say --label-column -1
            try:
                li = int(label_column)
            except ValueError:
                raise MissingLabelColumn(
                    f"no column named {label_column!r}") from None
            li = li if li >= 0 else ncols + li
            if not 0 <= li < ncols:
                raise MissingLabelColumn(
                    f"label column index {label_column} out of range for {ncols} columns")

    feat_names = [n for i, n in enumerate(names) if i != li]
    if not feat_names:
        raise ParseError(0, names[li], "no feature columns besides the label")

    if class_labels is not None:
        order = [str(c) for c in class_labels]
        index_of = {name: i for i, name in enumerate(order)}
        fixed_order = True
    else:
        order = []
        index_of = {}
        fixed_order = False

    features = []
    labels = []
    for rno, row in enumerate(data, start=1):
        if len(row) != ncols:
            raise ParseError(rno, "", f"expected {ncols} columns, found {len(row)}")
        vec = []
        for ci, cell in enumerate(row):
            if ci == li:
                continue
            col_name = names[ci]
            vec.append(_parse_cell(cell, rno, col_name))
        lab = row[li].strip()
        if lab not in index_of:
            if fixed_order:
                raise LabelMismatch(
                    f"row {rno}: label {lab!r} not among supplied class labels")
            index_of[lab] = len(order)
            order.append(lab)
        features.append(tuple(vec))
        labels.append(index_of[lab])

    return Dataset(features=tuple(features), labels=tuple(labels),
                   class_labels=tuple(order),
                   source_name=os.path.basename(str(path)))


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def holdout_split(ds: Dataset, train_fraction: float, seed: int):
    """Stratified train/test split, deterministic for a given seed.

    Per class the train count is round(train_fraction * class_size),
    clamped so both sides keep at least one instance of every class.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    by_class = {}
    for i, lab in enumerate(ds.labels):
        by_class.setdefault(lab, []).append(i)
    for lab, idx in sorted(by_class.items()):
        if len(idx) < 2:
            raise DegenerateClass(
                f"class {ds.class_labels[lab]!r} has {len(idx)} instance(s); "
                "need at least 2 to split")

    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for lab in sorted(by_class):
        idx = by_class[lab]
        n = len(idx)
        n_train = _round_half_away(train_fraction * n)
        n_train = min(max(n_train, 1), n - 1)
        perm = rng.permutation(n)
        chosen = [idx[j] for j in perm[:n_train]]
        rest = [idx[j] for j in perm[n_train:]]
        train_idx.extend(chosen)
        test_idx.extend(rest)
    train_idx.sort()
    test_idx.sort()

    def subset(indices, tag):
        return Dataset(
            features=tuple(ds.features[i] for i in indices),
            labels=tuple(ds.labels[i] for i in indices),
            class_labels=ds.class_labels,
            source_name=f"{ds.source_name}[{tag}]" if ds.source_name else tag)

    return subset(train_idx, "train"), subset(test_idx, "test")


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class EvalReport:
    """One evaluation run: accuracy, aggregated counters, memory, timing."""

    accuracy: float
    n_correct: int
    n_total: int
    mode: str  # "flt", "fxp32", ...
    qformat: Optional[str]  # "Q22.10" in fxp modes, None in flt
    variant: str
    style: str
    counters: OpCounters
    underflow_rate: float
    overflow_rate: float
    mean_host_time_us: float
    memory: MemoryEstimate
    model_fingerprint: str
    dataset_fingerprint: str
    dataset: str
    n_features: int
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "accuracy": self.accuracy,
            "n_correct": self.n_correct,
            "n_total": self.n_total,
            "mode": self.mode,
            "qformat": self.qformat,
            "variant": self.variant,
            "style": self.style,
            "counters": {
                "op_count": self.counters.op_count,
                "overflow_count": self.counters.overflow_count,
                "underflow_count": self.counters.underflow_count,
            },
            "underflow_rate": self.underflow_rate,
            "overflow_rate": self.overflow_rate,
            "mean_host_time_us": self.mean_host_time_us,
            "memory": self.memory.to_dict(),
            "model_fingerprint": self.model_fingerprint,
            "dataset_fingerprint": self.dataset_fingerprint,
            "dataset": self.dataset,
            "n_features": self.n_features,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        c = doc.get("counters", {})
        m = doc.get("memory", {})
        return cls(
            accuracy=float(doc["accuracy"]),
            n_correct=int(doc["n_correct"]),
            n_total=int(doc["n_total"]),
            mode=str(doc["mode"]),
            qformat=doc.get("qformat"),
            variant=str(doc.get("variant", "exact")),
            style=str(doc.get("style", "iterative")),
            counters=OpCounters(int(c.get("op_count", 0)),
                                int(c.get("overflow_count", 0)),
                                int(c.get("underflow_count", 0))),
            underflow_rate=float(doc.get("underflow_rate", 0.0)),
            overflow_rate=float(doc.get("overflow_rate", 0.0)),
            mean_host_time_us=float(doc.get("mean_host_time_us", 0.0)),
            memory=MemoryEstimate(int(m.get("flash_const_bytes", 0)),
                                  int(m.get("sram_bytes", 0)),
                                  int(m.get("elem_bytes", 0))),
            model_fingerprint=str(doc.get("model_fingerprint", "")),
            dataset_fingerprint=str(doc.get("dataset_fingerprint", "")),
            dataset=str(doc.get("dataset", "")),
            n_features=int(doc.get("n_features", 0)),
            schema_version=int(doc.get("schema_version", REPORT_SCHEMA_VERSION)),
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def render(self) -> str:
        lines = [
            f"dataset          {self.dataset} ({self.n_total} rows, "
            f"{self.n_features} features)",
            f"mode             {self.mode}"
            + (f" ({self.qformat})" if self.qformat else ""),
            f"variant/style    {self.variant} / {self.style}",
            f"accuracy         {self.accuracy:.4f} ({self.n_correct}/{self.n_total})",
            f"ops              {self.counters.op_count}",
            f"overflow rate    {self.overflow_rate:.6f} "
            f"({self.counters.overflow_count})",
            f"underflow rate   {self.underflow_rate:.6f} "
            f"({self.counters.underflow_count})",
            f"host time        {self.mean_host_time_us:.2f} us/instance "
            "(comparative only)",
            f"flash const      {self.memory.flash_const_bytes} B",
            f"sram             {self.memory.sram_bytes} B",
            f"model            {self.model_fingerprint[:16]}",
        ]
        return "\n".join(lines)


def _label_map(model: ModelIR, ds: Dataset):
    """Map dataset label indices to model class indices, matching by name."""
    model_index = {name: i for i, name in enumerate(model.class_labels)}
    mapped = []
    for name in ds.class_labels:
        if name not in model_index:
            raise LabelMismatch(
                f"dataset label {name!r} is not among model classes "
                f"{list(model.class_labels)}")
        mapped.append(model_index[name])
    return mapped


def evaluate(model: ModelIR, test: Dataset, mode: NumericMode,
             variant: str = "exact", style: str = "iterative",
             timing_reps: int = 10) -> EvalReport:
    """Run inference over every row of test and aggregate the report.

    One counted pass collects accuracy and the OpCounters aggregate; the
    mean host time comes from separate uncounted repetitions (default 10)
    over the full test set. Timing is host-relative and only meaningful
    for comparisons between runs on the same machine.
    """
    if timing_reps < 1:
        raise ValueError("timing_reps must be at least 1")
    if model.n_features != test.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, "
            f"dataset has {test.n_features}")
    mapped = _label_map(model, test)

    predictor = Predictor(model, mode, sigmoid=variant, tree_style=style)
    ctx = FxpContext() if mode.is_fxp else None
    n_correct = 0
    for row, lab in zip(test.features, test.labels):
        pred = predictor.predict(row, ctx)
        if pred.class_index == mapped[lab]:
            n_correct += 1
    counters = ctx.counters.snapshot() if ctx is not None else OpCounters()

    total = 0.0
    for _ in range(timing_reps):
        scratch = FxpContext() if mode.is_fxp else None
        t0 = time.perf_counter()
        for row in test.features:
            predictor.predict(row, scratch)
        total += time.perf_counter() - t0
    mean_us = total / (timing_reps * test.n_rows) * 1e6

    opts = GenOptions(
        mode=mode,
        sigmoid=variant if model.family == "mlp" else None,
        tree_style=style if model.family == "tree" else None)
    memory = estimate_memory(model, opts)

    ops = counters.op_count
    return EvalReport(
        accuracy=n_correct / test.n_rows,
        n_correct=n_correct,
        n_total=test.n_rows,
        mode=mode.name,
        qformat=mode.fmt.name if mode.is_fxp else None,
        variant=variant,
        style=style,
        counters=counters,
        underflow_rate=counters.underflow_count / ops if ops else 0.0,
        overflow_rate=counters.overflow_count / ops if ops else 0.0,
        mean_host_time_us=mean_us,
        memory=memory,
        model_fingerprint=model_fingerprint(model),
        dataset_fingerprint=test.fingerprint(),
        dataset=test.source_name,
        n_features=test.n_features)


# ---------------------------------------------------------------------------
# report comparison


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    a: float
    b: float

    @property
    def delta(self) -> float:
        return self.b - self.a

    @property
    def ratio(self) -> Optional[float]:
        if self.a == 0:
            return None
        return self.b / self.a


@dataclass(frozen=True)
class Comparison:
    label_a: str
    label_b: str
    rows: tuple  # ComparisonRow
    accuracy_regression: bool
    threshold: float

    def to_dict(self) -> dict:
        return {
            "a": self.label_a,
            "b": self.label_b,
            "threshold": self.threshold,
            "accuracy_regression": self.accuracy_regression,
            "rows": [{"metric": r.metric, "a": r.a, "b": r.b,
                      "delta": r.delta, "ratio": r.ratio} for r in self.rows],
        }

    def render(self) -> str:
        head = f"{'metric':<22} {'a: ' + self.label_a:>16} {'b: ' + self.label_b:>16} {'delta':>14} {'ratio':>8}"
        out = [head, "-" * len(head)]
        for r in self.rows:
            ratio = f"{r.ratio:.4f}" if r.ratio is not None else "n/a"
            out.append(f"{r.metric:<22} {r.a:>16.6g} {r.b:>16.6g} "
                       f"{r.delta:>14.6g} {ratio:>8}")
        if self.accuracy_regression:
            out.append(f"accuracy regression: b is more than "
                       f"{self.threshold:g} below a")
        else:
            out.append("no accuracy regression")
        return "\n".join(out)


def _check_same_run(a: EvalReport, b: EvalReport):
    if a.model_fingerprint != b.model_fingerprint:
        raise MismatchedRuns("reports come from different models")
    if a.dataset_fingerprint != b.dataset_fingerprint:
        raise MismatchedRuns("reports come from different test sets")


def _run_label(r: EvalReport) -> str:
    bits = [r.mode]
    if r.variant != "exact":
        bits.append(r.variant)
    if r.style != "iterative":
        bits.append(r.style)
    return "/".join(bits)


def compare_reports(a: EvalReport, b: EvalReport,
                    threshold: float = 0.01) -> Comparison:
    """Per-metric deltas and ratios between two runs of the same model
    on the same test set; flags b regressing accuracy beyond threshold."""
    _check_same_run(a, b)
    metrics = [
        ("accuracy", a.accuracy, b.accuracy),
        ("op_count", a.counters.op_count, b.counters.op_count),
        ("overflow_count", a.counters.overflow_count, b.counters.overflow_count),
        ("underflow_count", a.counters.underflow_count, b.counters.underflow_count),
        ("overflow_rate", a.overflow_rate, b.overflow_rate),
        ("underflow_rate", a.underflow_rate, b.underflow_rate),
        ("mean_host_time_us", a.mean_host_time_us, b.mean_host_time_us),
        ("flash_const_bytes", a.memory.flash_const_bytes, b.memory.flash_const_bytes),
        ("sram_bytes", a.memory.sram_bytes, b.memory.sram_bytes),
    ]
    rows = tuple(ComparisonRow(m, float(x), float(y)) for m, x, y in metrics)
    return Comparison(
        label_a=_run_label(a),
        label_b=_run_label(b),
        rows=rows,
        accuracy_regression=b.accuracy < a.accuracy - threshold,
        threshold=threshold)


def compare_many(reports: Sequence[EvalReport], threshold: float = 0.01) -> str:
    """Batch view: first report is the baseline, one row per report."""
    if len(reports) < 2:
        raise ValueError("need at least two reports to compare")
    base = reports[0]
    for r in reports[1:]:
        _check_same_run(base, r)
    head = (f"{'run':<24} {'accuracy':>9} {'delta':>9} {'ovf_rate':>9} "
            f"{'unf_rate':>9} {'flash_B':>9} {'sram_B':>7}")
    out = [head, "-" * len(head)]
    for r in reports:
        delta = r.accuracy - base.accuracy
        flag = " *" if r.accuracy < base.accuracy - threshold else ""
        out.append(f"{_run_label(r):<24} {r.accuracy:>9.4f} {delta:>+9.4f} "
                   f"{r.overflow_rate:>9.6f} {r.underflow_rate:>9.6f} "
                   f"{r.memory.flash_const_bytes:>9} {r.memory.sram_bytes:>7}"
                   f"{flag}")
    if any(r.accuracy < base.accuracy - threshold for r in reports):
        out.append(f"* accuracy regression beyond {threshold:g} vs baseline")
    return "\n".join(out)


def memory_estimate(model: ModelIR, opts: GenOptions) -> MemoryEstimate:
    """Analytic flash/SRAM estimate for the translation opts describe."""
    return estimate_memory(model, opts)
