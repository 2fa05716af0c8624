"""Shared helper: run one CLI command, write its report under results/, echo the verdicts."""

import sys
from pathlib import Path

from kernel_lens.cli import main

RESULTS = Path(__file__).resolve().parent.parent / "results"


def run(name: str, *argv: str) -> int:
    RESULTS.mkdir(exist_ok=True)
    out = RESULTS / f"{name}.csv"
    code = main([*argv, "--out", str(out)])
    print(f"{name}: exit {code} -> {out}", file=sys.stderr)
    return code
