"""Host-side compile-and-run harness for emitted classifier sources."""

from .runner import (
    CompileError,
    Contract,
    ContractError,
    HarnessError,
    HarnessRun,
    RunError,
    compile_and_run,
    detect_contract,
    measure_sizes,
    write_vectors,
)

__all__ = [
    "CompileError",
    "Contract",
    "ContractError",
    "HarnessError",
    "HarnessRun",
    "RunError",
    "compile_and_run",
    "detect_contract",
    "measure_sizes",
    "write_vectors",
]
