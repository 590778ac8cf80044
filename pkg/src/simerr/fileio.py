"""Input ingestion, key=value config files, and the analysis report schema."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import IngestError
from .estimation import SampleMatrix
from .region import ConfidenceRegion, RegionMethod

SCHEMA_VERSION = "1"


def _parse_cell(text: str, line: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"column {col}: non-numeric value {text!r}", line=line) from None
    if not math.isfinite(value):
        raise IngestError(f"column {col}: non-finite value {text!r}", line=line)
    return value


def _read_csv(path: Path, header: bool) -> tuple[np.ndarray, tuple[str, ...]]:
    rows: list[list[float]] = []
    names: tuple[str, ...] | None = None
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if header and names is None:
                names = tuple(c.strip() for c in raw)
                if len(set(names)) != len(names) or any(not c for c in names):
                    raise IngestError("header names must be nonempty and unique", line=lineno)
                width = len(names)
                continue
            if width is None:
                width = len(raw)
            if len(raw) != width:
                raise IngestError(f"expected {width} fields, found {len(raw)}", line=lineno)
            rows.append([_parse_cell(c.strip(), lineno, j + 1) for j, c in enumerate(raw)])
    if width is None:
        raise IngestError("file contains no data")
    if names is None:
        names = tuple(f"c{j + 1}" for j in range(width))
    return np.array(rows, dtype=float).reshape(-1, width), names


def _read_json(path: Path) -> tuple[np.ndarray, tuple[str, ...]]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict) or not raw:
        raise IngestError("JSON input must be an object of named numeric arrays")
    names = tuple(raw)
    lengths = {k: len(v) if isinstance(v, list) else -1 for k, v in raw.items()}
    if any(v < 0 for v in lengths.values()):
        bad = next(k for k, v in lengths.items() if v < 0)
        raise IngestError(f"field {bad!r} is not an array")
    if len(set(lengths.values())) != 1:
        detail = ", ".join(f"{k}={v}" for k, v in lengths.items())
        raise IngestError(f"arrays have different lengths ({detail})")
    cols = []
    for k, values in raw.items():
        col = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise IngestError(f"field {k!r} entry {i}: {v!r} is not a finite number")
            col.append(float(v))
        cols.append(col)
    return np.array(cols, dtype=float).T.reshape(-1, len(names)), names


def ingest(path, format: str | None = None, burn_in: int = 0, header: bool = True) -> SampleMatrix:
    """Read draws from CSV (one row per draw) or JSON (named equal-length arrays).

    ``format`` defaults to the file extension. The first ``burn_in`` draws are
    dropped and at least two must remain.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"no such file: {path}")
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if burn_in < 0:
        raise IngestError(f"burn-in must be nonnegative, got {burn_in}")
    if fmt == "csv":
        data, names = _read_csv(path, header)
    elif fmt == "json":
        data, names = _read_json(path)
    else:
        raise IngestError(f"unsupported format {fmt!r}; use csv or json")
    n = data.shape[0]
    if n <= burn_in + 1:
        raise IngestError(f"{n} draws leave fewer than 2 after dropping burn-in of {burn_in}")
    return SampleMatrix(data[burn_in:], names)


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, quotes are stripped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise IngestError(f"expected key = value, got {raw!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key.replace("_", "-")] = value
    return out


@dataclass
class Report:
    """Everything an analysis produced, in JSON-native types."""

    source: dict
    n: int
    column_names: list[str]
    targets: list[dict]
    estimate: list[float]
    covariance: dict
    regions: dict[str, ConfidenceRegion]
    diagnostics: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    def region(self, method) -> ConfidenceRegion:
        return self.regions[RegionMethod(method).value]

    @property
    def labels(self) -> list[str]:
        return [t["label"] for t in self.targets]

    @property
    def warnings(self) -> list[str]:
        return list(self.diagnostics.get("warnings", []))

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "source": self.source,
            "n": self.n,
            "column_names": self.column_names,
            "targets": self.targets,
            "estimate": self.estimate,
            "covariance": self.covariance,
            "regions": {k: r.to_dict() for k, r in self.regions.items()},
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("schema") != SCHEMA_VERSION:
            raise IngestError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            source=d["source"],
            n=d["n"],
            column_names=d["column_names"],
            targets=d["targets"],
            estimate=d["estimate"],
            covariance=d["covariance"],
            regions={k: ConfidenceRegion.from_dict(v) for k, v in d["regions"].items()},
            diagnostics=d["diagnostics"],
            schema=d["schema"],
        )


def dumps(obj: dict) -> str:
    # float repr is the shortest string that round-trips a double exactly
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def emit_report(report: Report) -> str:
    return dumps(report.to_dict())


def parse_report(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def write_report(report: Report, path) -> None:
    Path(path).write_text(emit_report(report), encoding="utf-8")


def read_report(path) -> Report:
    return parse_report(Path(path).read_text(encoding="utf-8"))


def write_intervals_csv(report: Report, path) -> None:
    """One row per (method, estimand): estimate, z, lower, upper, half-width."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "target", "estimate", "z", "lower", "upper", "half_width"])
        for key, reg in report.regions.items():
            for label, est, lo, hi, hw in zip(
                reg.labels, reg.estimate, reg.lower, reg.upper, reg.half_widths
            ):
                w.writerow([key, label, repr(est), repr(reg.z), repr(lo), repr(hi), repr(hw)])
