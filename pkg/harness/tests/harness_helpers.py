"""Drive the reference CLI generator and build transport-exact vectors."""

import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np


def generate_source(doc: dict, out_path, mode, sigmoid=None, tree_style=None,
                    prefix=None, test_hook=True) -> dict:
    """Emit C++ through the reference CLI; returns the sidecar manifest."""
    out_path = Path(out_path)
    model_path = out_path.with_suffix(".model.json")
    model_path.write_text(json.dumps(doc))
    cmd = [sys.executable, "-m", "mcuml", "generate", "--model", str(model_path),
           "--mode", mode, "-o", str(out_path)]
    if sigmoid:
        cmd += ["--sigmoid", sigmoid]
    if tree_style:
        cmd += ["--tree", tree_style.replace("_", "-")]
    if prefix:
        cmd += ["--prefix", prefix]
    if test_hook:
        cmd += ["--test-hook"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return json.loads(Path(str(out_path) + ".json").read_text())


def make_mode(name: str):
    from toymodels import make_mode as _mm

    return _mm(name)


def float32_exact_rows(rng, n, d, lo=-4.0, hi=4.0):
    """Random float32 rows rendered as decimals that are exact, not rounded.

    repr() of the widened float64 spells out the float32's full value, so
    the C driver's strtof, Python's float() and numpy's float32() all
    recover the identical number; any later mismatch is the classifier's
    doing, not the transport's.
    """
    raw = rng.uniform(lo, hi, size=(n, d)).astype(np.float32)
    text_rows = [[repr(float(v)) for v in row] for row in raw]
    values = [[float(s) for s in row] for row in text_rows]
    return text_rows, values


def write_text_rows(path, text_rows) -> None:
    Path(path).write_text("\n".join(",".join(r) for r in text_rows) + "\n")


def named_rodata_bytes(sizes: dict, prefix: str) -> int:
    """Bytes of the emitted const arrays; internal linkage mangles names."""
    pat = re.compile(rf"\.rodata\.(_ZL\d+)?{re.escape(prefix)}_")
    return sum(v for k, v in sizes["sections"].items() if pat.match(k))
