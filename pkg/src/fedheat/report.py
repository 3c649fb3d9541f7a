"""Run-report and CSV emission.

Reports are line-oriented ``key: value`` text with the exact experiment
config embedded verbatim, so any report can be fed back to the CLI and
reproduce the run. Numeric values are written with shortest round-trip
repr; the wall-clock line is the one field exempt from bitwise comparison.
"""

from __future__ import annotations

import os

from .config import CONFIG_BEGIN, CONFIG_END, REPORT_MARKER

ARTIFACT_VERSION = "0.1.0"


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_report(
    path: str,
    kind: str,
    config_text: str,
    seed: int,
    lines: list[str],
    wall_clock_s: float,
) -> None:
    out = [
        REPORT_MARKER,
        f"kind: {kind}",
        f"artifact_version: {ARTIFACT_VERSION}",
        f"seed: {seed}",
        f"wall_clock_s: {wall_clock_s:.3f}",
    ]
    out.extend(lines)
    out.append(CONFIG_BEGIN)
    out.append(config_text.rstrip("\n"))
    out.append(CONFIG_END)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(format_value(v) for v in row) + "\n")


def write_labels(path: str, labels) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        for y in labels:
            f.write(f"{int(y)}\n")


def read_labels(path: str):
    with open(path) as f:
        return [int(line.strip()) for line in f if line.strip()]


def comparable_lines(report_text: str) -> list[str]:
    """Report lines that must reproduce bitwise (everything but wall clock)."""
    return [
        line
        for line in report_text.splitlines()
        if not line.startswith("wall_clock_s:")
    ]
