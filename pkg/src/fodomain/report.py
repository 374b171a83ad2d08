"""JSON run reports for the fixpoint command."""

from __future__ import annotations

import json
from typing import Mapping

from .fixpoint import LfpResult
from .lang import render


def lfp_report(result: LfpResult, bounds: Mapping[str, int], inductive: bool,
               safe: bool | None, timings: bool = True, complete: bool = True) -> dict:
    stats = result.stats
    report = {
        "bounds": dict(sorted(bounds.items())),
        "complete": complete,
        "formulas": [render(f) for f in result.formulas],
        "inductive": inductive,
        "iterations": stats.iterations,
        "lfp_size": len(result.formulas),
        "peak_size": stats.peak_size,
        "safe": safe,
        "structures": stats.structures,
    }
    if timings:
        report["timings"] = {
            "cti": round(stats.cti_seconds, 6),
            "total": round(stats.total_seconds, 6),
            "weaken": round(stats.weaken_seconds, 6),
            "weaken_percent": round(stats.weaken_percent, 2),
        }
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
