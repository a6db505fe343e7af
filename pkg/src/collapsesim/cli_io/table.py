"""Long-format result tables and their file renderings.

The CSV schema is fixed: header ``run_id,generation,metric,value,stderr``,
UTF-8, LF line endings, '.' decimal separator.  Values are written with
``repr`` so that parsing the file back reproduces the table exactly; any
missing or non-finite value is the literal sentinel ``NA``.  Comment lines
start with ``#``; the first one carries the resolved config hash.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from ..errors import ParseError, ValidationError

__all__ = ["Row", "ResultTable", "CSV_HEADER", "emit", "parse_csv"]

CSV_HEADER = "run_id,generation,metric,value,stderr"

_NA = "NA"


@dataclass(frozen=True)
class Row:
    run_id: str
    generation: int
    metric: str
    value: Optional[float]
    stderr: Optional[float] = None

    def __post_init__(self) -> None:
        for field in (self.run_id, self.metric):
            if not field or any(ch in field for ch in ",\n\r"):
                raise ValidationError(
                    f"run_id/metric must be non-empty and comma-free: {field!r}"
                )
        object.__setattr__(self, "generation", int(self.generation))
        for name in ("value", "stderr"):
            raw = getattr(self, name)
            if raw is not None:
                v = float(raw)
                # non-finite values and the NA sentinel are the same thing
                object.__setattr__(self, name, v if math.isfinite(v) else None)


@dataclass(frozen=True)
class ResultTable:
    rows: tuple

    def __len__(self) -> int:
        return len(self.rows)

    def metrics(self) -> tuple:
        seen = dict.fromkeys(row.metric for row in self.rows)
        return tuple(seen)

    def run_ids(self) -> tuple:
        seen = dict.fromkeys(row.run_id for row in self.rows)
        return tuple(seen)

    def select(self, run_id=None, metric=None) -> "ResultTable":
        picked = tuple(
            row
            for row in self.rows
            if (run_id is None or row.run_id == run_id)
            and (metric is None or row.metric == metric)
        )
        return ResultTable(rows=picked)


def table_from_rows(rows: Iterable[Row]) -> ResultTable:
    return ResultTable(rows=tuple(rows))


def _cell(value: Optional[float]) -> str:
    if value is None:
        return _NA
    v = float(value)
    if not math.isfinite(v):
        return _NA
    return repr(v)


def to_csv_text(table: ResultTable, cfg_hash: str) -> str:
    lines = [f"# config_hash={cfg_hash}", CSV_HEADER]
    for row in table.rows:
        lines.append(
            f"{row.run_id},{row.generation},{row.metric},"
            f"{_cell(row.value)},{_cell(row.stderr)}"
        )
    return "\n".join(lines) + "\n"


def to_json_text(table: ResultTable, cfg_hash: str, config_items) -> str:
    doc = {
        "config_hash": cfg_hash,
        "config": {k: v for k, v in config_items},
        "rows": [
            {
                "run_id": row.run_id,
                "generation": row.generation,
                "metric": row.metric,
                "value": _finite_or_none(row.value),
                "stderr": _finite_or_none(row.stderr),
            }
            for row in table.rows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _finite_or_none(value: Optional[float]):
    if value is None or not math.isfinite(float(value)):
        return None
    return float(value)


def _parse_cell(text: str, what: str, ln: int) -> Optional[float]:
    if text == _NA:
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {ln}: bad {what} {text!r}")


def parse_csv(source) -> tuple:
    """Parse CSV text or a file path back into (ResultTable, config_hash).

    Inverse of the csv emitter: parse_csv(to_csv_text(t, h)) == (t, h).
    """
    if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and source.endswith(".csv")
    ):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    cfg_hash = None
    rows = []
    header_seen = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw:
            continue
        if raw.startswith("#"):
            stripped = raw[1:].strip()
            if stripped.startswith("config_hash="):
                cfg_hash = stripped.partition("=")[2]
            continue
        if not header_seen:
            if raw != CSV_HEADER:
                raise ParseError(
                    f"line {ln}: expected header {CSV_HEADER!r}, got {raw!r}"
                )
            header_seen = True
            continue
        parts = raw.split(",")
        if len(parts) != 5:
            raise ParseError(f"line {ln}: expected 5 fields, got {len(parts)}")
        run_id, gen_str, metric, value_str, stderr_str = parts
        try:
            generation = int(gen_str)
        except ValueError:
            raise ParseError(f"line {ln}: bad generation {gen_str!r}")
        rows.append(
            Row(
                run_id=run_id,
                generation=generation,
                metric=metric,
                value=_parse_cell(value_str, "value", ln),
                stderr=_parse_cell(stderr_str, "stderr", ln),
            )
        )
    if not header_seen:
        raise ParseError("missing CSV header")
    return ResultTable(rows=tuple(rows)), cfg_hash


def emit(
    table: ResultTable,
    fmt: str,
    path,
    *,
    cfg_hash: str = "",
    config_items=(),
    svg_document: Optional[bytes] = None,
) -> Path:
    """Write ``table`` at ``path`` in one of csv, json, svg.

    SVG content is figure-specific, so callers prerender it (see
    :mod:`collapsesim.cli_io.svgplot`) and pass the document through; the
    csv and json renderings are derived from the table here.
    """
    target = Path(path)
    if fmt == "csv":
        data = to_csv_text(table, cfg_hash).encode("utf-8")
    elif fmt == "json":
        data = to_json_text(table, cfg_hash, config_items).encode("utf-8")
    elif fmt == "svg":
        if svg_document is None:
            raise ValidationError("svg emission requires a prerendered document")
        data = svg_document
    else:
        raise ValidationError(f"unknown format {fmt!r}; valid: csv, json, svg")
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "wb") as fh:
        fh.write(data)
    return target
