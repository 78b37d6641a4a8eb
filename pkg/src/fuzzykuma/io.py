"""Reading and writing fuzzy data files.

Fuzzy data: one record per observation with fields ``xi, omega, delta, theta``,
either a JSON array of 4-element arrays or a CSV with header
``xi,omega,delta,theta``. Triangles have ``omega == delta``; crisp values have
all four equal.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .fuzzy import FuzzyInformationSystem, FuzzyObservation, FuzzySample, MembershipFunction

__all__ = ["FIELDS", "read_fuzzy_rows", "read_fuzzy_data", "write_fuzzy_data", "read_crisp_csv", "read_fis"]

FIELDS = ("xi", "omega", "delta", "theta")


def _looks_like_json(text: str) -> bool:
    return text.lstrip().startswith("[")


def _parse_json(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", row=exc.lineno) from None
    if not isinstance(data, list):
        raise DataFormatError("JSON fuzzy data must be an array of 4-element arrays")
    rows = []
    for i, rec in enumerate(data, start=1):
        if not (isinstance(rec, list) and len(rec) == 4):
            raise DataFormatError(f"record {i}: expected 4 numbers (xi, omega, delta, theta)", row=i)
        try:
            rows.append([float(v) for v in rec])
        except (TypeError, ValueError):
            raise DataFormatError(f"record {i}: non-numeric value in {rec!r}", row=i) from None
    return rows


def _parse_csv(text: str):
    reader = csv.reader(text.splitlines())
    rows = []
    header_seen = False
    for line_no, rec in enumerate(reader, start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        cells = [c.strip() for c in rec]
        if not header_seen:
            header_seen = True
            if [c.lower() for c in cells] == list(FIELDS):
                continue
            raise DataFormatError(f"row {line_no}: expected header 'xi,omega,delta,theta'", row=line_no)
        if len(cells) != 4:
            raise DataFormatError(f"row {line_no}: expected 4 columns, found {len(cells)}", row=line_no)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise DataFormatError(f"row {line_no}: non-numeric value in {cells}", row=line_no) from None
    return rows


def read_fuzzy_rows(path) -> list:
    text = Path(path).read_text()
    return _parse_json(text) if _looks_like_json(text) else _parse_csv(text)


def read_fuzzy_data(path) -> FuzzySample:
    rows = read_fuzzy_rows(path)
    if not rows:
        raise DataFormatError("no observations in input")
    obs = []
    for i, r in enumerate(rows, start=1):
        try:
            obs.append(FuzzyObservation(MembershipFunction(*r)))
        except ValueError as exc:
            raise DataFormatError(f"record {i}: {exc}", row=i) from None
    return FuzzySample(tuple(obs))


def write_fuzzy_data(sample_or_rows, path=None, fmt: str = "csv") -> str:
    """Serialise to ``fmt`` ('csv' or 'json'); writes ``path`` when given."""
    if isinstance(sample_or_rows, FuzzySample):
        rows = sample_or_rows.to_array().tolist()
    else:
        rows = [list(map(float, getattr(r, "breakpoints", r))) for r in sample_or_rows]
    if fmt == "json":
        text = json.dumps(rows) + "\n"
    elif fmt == "csv":
        lines = [",".join(FIELDS)] + [",".join(repr(float(v)) for v in r) for r in rows]
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_crisp_csv(path) -> np.ndarray:
    """Single-column CSV of values in (0, 1); an optional non-numeric header is skipped."""
    values = []
    bad = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        cell = line.strip()
        if not cell:
            continue
        if "," in cell:
            raise DataFormatError(f"row {line_no}: expected a single column", row=line_no)
        try:
            v = float(cell)
        except ValueError:
            if not values and not bad and line_no == 1:
                continue
            raise DataFormatError(f"row {line_no}: non-numeric value {cell!r}", row=line_no) from None
        if not 0.0 < v < 1.0:
            bad.append(line_no)
        values.append(v)
    if bad:
        raise DataFormatError(f"values outside (0, 1) at rows {bad}", row=bad[0])
    if not values:
        raise DataFormatError("no values in input")
    return np.array(values)


def read_fis(path, tol: float = 1e-12) -> FuzzyInformationSystem:
    """Load events in the fuzzy data format and check orthogonality on a grid."""
    events = [MembershipFunction(*r) for r in read_fuzzy_rows(path)]
    fis = FuzzyInformationSystem(tuple(events))
    grid = np.linspace(0.0, 1.0, 100001)[1:-1]
    defect = fis.orthogonality_defect(grid)
    if defect > tol:
        raise DataFormatError(f"events are not orthogonal: memberships sum off 1 by up to {defect:.3g}")
    return fis
