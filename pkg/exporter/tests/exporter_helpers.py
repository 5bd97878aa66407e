"""Helpers for driving the reference CLI; exported documents are checked
through that surface only, the same way a user would."""

import csv
import re
import subprocess
import sys

_OK = re.compile(r"ok: (\w+) model, (\d+) classes, (\d+) features, (\d+) parameters")


def run_reference_cli(*args):
    return subprocess.run([sys.executable, "-m", "mcuml", *args],
                          capture_output=True, text=True)


def validate_document(text: str, tmp_path):
    """Validate through the reference CLI; return (family, classes, features, params)."""
    path = tmp_path / "exported.json"
    path.write_text(text)
    proc = run_reference_cli("validate", "--model", str(path))
    assert proc.returncode == 0, f"validator rejected the document:\n{proc.stdout}{proc.stderr}"
    m = _OK.search(proc.stdout)
    assert m, proc.stdout
    return m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))


def write_labeled_csv(path, X, labels):
    # feature columns first, label names last; matches the eval loader default
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(X.shape[1])] + ["label"])
        for row, lab in zip(X, labels):
            w.writerow([repr(float(v)) for v in row] + [str(lab)])
