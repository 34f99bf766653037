"""Line-delimited run traces.

A trace file holds one header line followed by one line per step::

    {"kind": "header", "schema": 1, "config": {...}}
    {"kind": "step", "step": 0, "phase": 1, "indicators": {...}, ...}

A run that dies mid-way appends ``{"kind": "abort", ...}`` so readers can
tell a partial trace from a complete one.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

TRACE_SCHEMA = 1


class TraceError(ValueError):
    pass


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


@dataclass
class Trace:
    header: dict
    records: list[dict] = field(default_factory=list)
    aborted: Optional[dict] = None
    path: Optional[Path] = None

    @classmethod
    def start(cls, config_dict: dict, path: Optional[str | Path] = None, append: bool = False,
              initial_map: Optional[dict] = None) -> "Trace":
        header = {"kind": "header", "schema": TRACE_SCHEMA, "config": config_dict}
        if initial_map is not None:
            header["initial_map"] = initial_map
        tr = cls(header, path=Path(path) if path else None)
        if tr.path is not None and not append:
            tr.path.parent.mkdir(parents=True, exist_ok=True)
            tr.path.write_text(dumps(header) + "\n")
        return tr

    @classmethod
    def continue_file(cls, path: str | Path) -> "Trace":
        """Reopen an existing trace file for appending further steps."""
        tr = read_trace(path)
        if tr.aborted is not None:
            raise TraceError(f"{path} ends with an abort record")
        tr.path = Path(path)
        return tr

    def append(self, record: dict) -> None:
        if self.records and record["step"] != self.records[-1]["step"] + 1:
            raise TraceError(f"non-contiguous step {record['step']} after {self.records[-1]['step']}")
        self.records.append(record)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(dumps(record) + "\n")

    def abort(self, step: int, error: BaseException) -> None:
        self.aborted = {"kind": "abort", "step": step, "error": type(error).__name__, "message": str(error)}
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(dumps(self.aborted) + "\n")

    @property
    def complete(self) -> bool:
        return self.aborted is None

    def lines(self) -> Iterator[str]:
        yield dumps(self.header)
        for r in self.records:
            yield dumps(r)
        if self.aborted:
            yield dumps(self.aborted)

    def to_jsonl(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def steps_hash(self) -> str:
        return hashlib.sha256("\n".join(dumps(r) for r in self.records).encode()).hexdigest()

    def indicators(self) -> list[dict]:
        return [r["indicators"] for r in self.records]


def read_trace(path: str | Path) -> Trace:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise TraceError(f"{path} is empty")
    try:
        header = json.loads(lines[0])
        body = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path} is not JSON lines: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != "header":
        raise TraceError("first line is not a trace header")
    if header.get("schema") != TRACE_SCHEMA:
        raise TraceError(f"unsupported trace schema {header.get('schema')}")
    tr = Trace(header)
    for rec in body:
        if rec.get("kind") == "abort":
            tr.aborted = rec
        elif rec.get("kind") == "step":
            tr.records.append(rec)
    return tr


INDICATOR_COLUMNS = ("step", "phase", "nominal_gdp", "real_gdp", "deflator", "inflation", "wage_inflation",
                     "gini_wealth", "gini_income", "equality", "unemployment", "vacancy_rate", "m0", "m1",
                     "consumption", "investment", "government", "salaries", "population", "firms", "supply",
                     "minted", "policy_rate")


def export_indicators_csv(trace: Trace, path: str | Path) -> Path:
    """One row per step with the scalar indicators; money columns are cents."""
    import csv
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDICATOR_COLUMNS)
        for ind in trace.indicators():
            w.writerow(["" if ind.get(c) is None else ind.get(c) for c in INDICATOR_COLUMNS])
    return path
