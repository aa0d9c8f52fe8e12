"""Tabular CSV ingestion with feature-schema inference.

Numeric columns get their range from the data's min/max when no schema is
declared; categorical columns collect their distinct values in order of first
appearance. Declared schemas are validated against every row instead.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .attribution import BackgroundData
from .core import FeatureDescriptor, FeatureSpace, Instance, SchemaError, validate_instance


def _try_float(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def _infer_column(name: str, raw: list[str]) -> FeatureDescriptor:
    as_float = [_try_float(v) for v in raw]
    numeric = sum(v is not None for v in as_float)
    if numeric == len(raw):
        lo = min(as_float)
        hi = max(as_float)
        if lo == hi:
            raise SchemaError(
                f"column {name!r}: degenerate numeric range (min=max={lo})"
            )
        return FeatureDescriptor.numeric(name, lo, hi)
    if numeric == 0:
        seen: list[str] = []
        for v in raw:
            if v not in seen:
                seen.append(v)
        return FeatureDescriptor.categorical(name, seen)
    raise SchemaError(
        f"column {name!r}: mixed types ({numeric} numeric of {len(raw)} values)"
    )


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = []
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: ragged row {number} has {len(row)} cells, header has {len(header)}"
                )
            rows.append(row)
    if not header or all(not h for h in header):
        raise SchemaError(f"{path}: missing header")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows


def ingest_csv(
    path: str | Path, space: FeatureSpace | None = None
) -> tuple[BackgroundData, FeatureSpace]:
    """Load a rectangular CSV as background data plus its feature space.

    Without a declared ``space`` the schema is inferred per column; with one,
    the header must contain the declared feature names (extra columns are an
    error) and every value is validated against the declaration.
    """
    header, rows = _read_rows(path)

    if space is None:
        columns = list(zip(*rows))
        space = FeatureSpace(
            tuple(_infer_column(name, list(col)) for name, col in zip(header, columns))
        )
        ordered = rows
    else:
        if sorted(header) != sorted(space.names):
            raise SchemaError(
                f"{path}: header {header} does not match declared features {list(space.names)}"
            )
        order = [header.index(name) for name in space.names]
        ordered = [[row[i] for i in order] for row in rows]

    matrix = np.empty((len(ordered), len(space)), dtype=space.matrix_dtype)
    for r, row in enumerate(ordered):
        parsed = []
        for feat, cell in zip(space.features, row):
            if feat.is_numeric:
                value = _try_float(cell)
                if value is None:
                    raise SchemaError(
                        f"{path}: row {r + 2}, feature {feat.name!r}: {cell!r} is not numeric"
                    )
                parsed.append(value)
            else:
                match = next(
                    (c for c in feat.categories if c == cell or str(c) == cell), None
                )
                if match is None:
                    raise SchemaError(
                        f"{path}: row {r + 2}, feature {feat.name!r}: unknown category {cell!r}"
                    )
                parsed.append(match)
        validate_instance(space, Instance(tuple(parsed)))
        matrix[r] = np.array(parsed, dtype=space.matrix_dtype)
    return BackgroundData(rows=matrix, provenance="loaded"), space
