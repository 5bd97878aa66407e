"""Compile emitted classifier sources on the host and run them on CSV vectors.

The emitted-code contract is recovered from the source text itself: the
symbol prefix, feature and class counts, whether inputs are fixed point,
and whether the scores test hook was emitted.  A bundled C++ driver is
compiled together with the source (warnings as errors, FP contraction
off, exactly as the emitted header asks) and fed the vectors file; its
JSON output becomes the run record.  Section sizes come from compiling
the source alone and reading the object file with the GNU size utility.
"""

import json
import re
import subprocess
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

GXX = "g++"
FLAGS = ("-std=c++17", "-O2", "-Wall", "-Wextra", "-Werror", "-ffp-contract=off")
SIZE_FLAGS = ("-ffunction-sections", "-fdata-sections")


class HarnessError(Exception):
    """Base for compile and run failures."""


class CompileError(HarnessError):
    """Toolchain rejected the source; carries the full log."""

    def __init__(self, log: str):
        super().__init__(f"compilation failed:\n{log}")
        self.log = log


class RunError(HarnessError):
    """The compiled driver refused the vectors or crashed."""


class ContractError(HarnessError):
    """The source does not look like emitted classifier code."""


@dataclass(frozen=True)
class Contract:
    """What the emitted source promises, recovered from its text."""
    prefix: str
    fixed: bool
    has_scores: bool
    n_features: int
    n_classes: int


@dataclass(frozen=True)
class HarnessRun:
    """One compile-and-run outcome."""
    source_path: str
    vectors_path: str
    predictions: tuple
    raw_scores: Optional[tuple]
    sizes: dict

    def to_dict(self) -> dict:
        return {
            "source_path": self.source_path,
            "vectors_path": self.vectors_path,
            "predictions": list(self.predictions),
            "raw_scores": None if self.raw_scores is None
            else [list(r) for r in self.raw_scores],
            "sizes": dict(self.sizes),
        }


_CLASSIFY = re.compile(r"int32_t\s+(\w+)_classify\s*\(\s*const\s+(float|\w+_fixed_t)\s*\*")


def detect_contract(source_text: str) -> Contract:
    m = _CLASSIFY.search(source_text)
    if m is None:
        raise ContractError("no <prefix>_classify entry point found in the source")
    prefix = m.group(1)
    fixed = m.group(2) != "float"
    dims = re.search(
        rf"enum\s*{{\s*{re.escape(prefix)}_n_features\s*=\s*(\d+)\s*,"
        rf"\s*{re.escape(prefix)}_n_classes\s*=\s*(\d+)\s*}}", source_text)
    if dims is None:
        raise ContractError(f"missing {prefix}_n_features/{prefix}_n_classes enum")
    has_scores = re.search(rf"void\s+{re.escape(prefix)}_scores\s*\(", source_text) is not None
    return Contract(prefix=prefix, fixed=fixed, has_scores=has_scores,
                    n_features=int(dims.group(1)), n_classes=int(dims.group(2)))


def _driver_path() -> Path:
    return Path(resources.files("mcuml_harness").joinpath("driver.cpp"))


def _gxx(args, workdir):
    proc = subprocess.run([GXX, *args], cwd=workdir, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileError(proc.stdout + proc.stderr)
    return proc


def compile_driver(source: str, workdir, contract: Optional[Contract] = None) -> Path:
    """Build the driver binary around an emitted source; CompileError on failure."""
    source = Path(source).resolve()
    if contract is None:
        contract = detect_contract(source.read_text())
    out = Path(workdir) / "runner"
    defines = [f'-DHX_SOURCE="{source}"', f"-DHX_PREFIX={contract.prefix}"]
    if contract.fixed:
        defines.append("-DHX_FIXED")
    if contract.has_scores:
        defines.append("-DHX_HAVE_SCORES")
    _gxx([*FLAGS, *defines, str(_driver_path()), "-o", str(out)], workdir)
    return out


def measure_sizes(source) -> dict:
    """Compile the source alone and report its section sizes in bytes.

    Returns text/rodata/data/bss sums, their flash total, and the raw
    per-section breakdown (one section per symbol, so per-array const
    sizes are visible).
    """
    source = Path(source).resolve()
    with tempfile.TemporaryDirectory(prefix="mcuml-size-") as td:
        obj = Path(td) / "model.o"
        _gxx([*FLAGS, *SIZE_FLAGS, "-c", str(source), "-o", str(obj)], td)
        proc = subprocess.run(["size", "-A", str(obj)], capture_output=True, text=True)
        if proc.returncode != 0:
            raise RunError(f"size failed: {proc.stderr}")
    sections = {}
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) >= 2 and parts[0].startswith("."):
            try:
                sections[parts[0]] = int(parts[1])
            except ValueError:
                continue
    text = sum(v for k, v in sections.items() if k == ".text" or k.startswith(".text."))
    rodata = sum(v for k, v in sections.items() if k == ".rodata" or k.startswith(".rodata."))
    data = sum(v for k, v in sections.items() if k == ".data" or k.startswith(".data."))
    bss = sum(v for k, v in sections.items() if k == ".bss" or k.startswith(".bss."))
    return {"text": text, "rodata": rodata, "data": data, "bss": bss,
            "flash_total": text + rodata + data, "sections": sections}


def compile_and_run(source, vectors) -> HarnessRun:
    """Compile an emitted source with the driver, run it over a vectors CSV.

    Raises CompileError with the full toolchain log, RunError when the
    driver rejects the vectors file, ContractError when the source does
    not follow the emitted-code contract.
    """
    source = Path(source).resolve()
    vectors = Path(vectors).resolve()
    try:
        contract = detect_contract(source.read_text())
    except ContractError:
        # compile anyway under default assumptions: the toolchain then
        # states what is missing, with the full log attached
        contract = Contract(prefix="mc", fixed=False, has_scores=False,
                            n_features=0, n_classes=0)
    with tempfile.TemporaryDirectory(prefix="mcuml-harness-") as td:
        binary = compile_driver(source, td, contract)
        proc = subprocess.run([str(binary), str(vectors)], capture_output=True, text=True)
        if proc.returncode != 0:
            raise RunError(proc.stderr.strip() or f"driver exited {proc.returncode}")
        try:
            out = json.loads(proc.stdout)
        except json.JSONDecodeError as e:
            raise RunError(f"driver printed malformed JSON: {e}") from None
    raw = out.get("raw_scores")
    return HarnessRun(
        source_path=str(source),
        vectors_path=str(vectors),
        predictions=tuple(out["predictions"]),
        raw_scores=None if raw is None else tuple(tuple(r) for r in raw),
        sizes=measure_sizes(source),
    )


def write_vectors(path, rows) -> None:
    """Write feature rows as the headerless CSV the driver consumes."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
