"""CSV ingestion with per-line rejection reports, and the model file format."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .lattice import Dataset, InputError, LatticeSpec
from .postprocess import Mode, PreferenceModel
from .rls import LinearModel

MODEL_FORMAT = "isopref-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class IngestConfig:
    """How to read a ratings CSV.

    Attributes:
        criteria_columns: header names of the criteria, in lattice order.
        score_column: header name of the overall score.
        m: number of levels per criterion; valid criteria are ``1..m``.
        score_min, score_max: range of the overall score.
        delimiter: field separator.
    """

    criteria_columns: tuple[str, ...]
    score_column: str
    m: int
    score_min: float
    score_max: float
    delimiter: str = ","

    def __post_init__(self):
        cols = tuple(str(c) for c in self.criteria_columns)
        if not cols:
            raise InputError("need at least one criteria column")
        if len(set(cols)) != len(cols):
            raise InputError("criteria columns must be distinct")
        if len(self.delimiter) != 1:
            raise InputError("delimiter must be a single character")
        object.__setattr__(self, "criteria_columns", cols)
        self.spec  # validates m and the score range

    @property
    def spec(self) -> LatticeSpec:
        return LatticeSpec(len(self.criteria_columns), int(self.m), float(self.score_min), float(self.score_max))

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "IngestConfig":
        try:
            return cls(
                tuple(d["criteria_columns"]),
                d["score_column"],
                int(d["m"]),
                float(d["score_min"]),
                float(d["score_max"]),
                d.get("delimiter", ","),
            )
        except KeyError as exc:
            raise InputError(f"ingest config is missing {exc.args[0]!r}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "IngestConfig":
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str


@dataclass(frozen=True)
class IngestResult:
    dataset: Dataset | None
    X: NDArray[np.int64]
    lines: NDArray[np.int64]
    rejections: list[Rejection] = field(default_factory=list)


def read_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg}") from exc


def _parse_level(text: str, m: int) -> tuple[int | None, str]:
    text = text.strip()
    if not text:
        return None, "missing criterion"
    try:
        v = float(text)
    except ValueError:
        return None, f"non-numeric criterion {text!r}"
    if not v.is_integer():
        return None, f"non-integer criterion {text!r}"
    if not 1 <= v <= m:
        return None, f"criterion {text} out of range 1..{m}"
    return int(v), ""


def ingest_csv(path: str | Path, cfg: IngestConfig, require_score: bool = True) -> IngestResult:
    """Read records, rejecting bad rows individually.

    Line numbers in the rejection report are 1-based physical lines of the
    file, the header being line 1. With ``require_score=False`` only the
    criteria are read and ``dataset`` is ``None``.

    Raises:
        InputError: unreadable file, missing header or unknown column, or no
            valid records.
    """
    spec = cfg.spec
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=cfg.delimiter)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path} has no header row")
        header = [h.strip() for h in header]
        wanted = list(cfg.criteria_columns) + ([cfg.score_column] if require_score else [])
        missing = [c for c in wanted if c not in header]
        if missing:
            raise InputError(f"unknown column(s) {', '.join(missing)} in {path}")
        cidx = [header.index(c) for c in cfg.criteria_columns]
        sidx = header.index(cfg.score_column) if require_score else None
        X, scores, lines, rejections = [], [], [], []
        for row in reader:
            line = reader.line_num
            if not any(f.strip() for f in row):
                continue
            if len(row) < len(header):
                rejections.append(Rejection(line, f"expected {len(header)} fields, got {len(row)}"))
                continue
            levels = []
            reason = ""
            for k in cidx:
                v, reason = _parse_level(row[k], spec.m)
                if v is None:
                    break
                levels.append(v)
            if reason:
                rejections.append(Rejection(line, reason))
                continue
            if sidx is not None:
                text = row[sidx].strip()
                try:
                    s = float(text)
                except ValueError:
                    rejections.append(Rejection(line, "missing score" if not text else f"non-numeric score {text!r}"))
                    continue
                if not spec.score_min <= s <= spec.score_max:
                    rejections.append(
                        Rejection(line, f"score {text} out of range [{spec.score_min:g}, {spec.score_max:g}]")
                    )
                    continue
                scores.append(s)
            X.append(levels)
            lines.append(line)
    if not X:
        raise InputError(f"no valid records in {path}")
    Xa = np.asarray(X, dtype=np.int64)
    ds = Dataset.from_raw(spec, Xa, scores) if require_score else None
    return IngestResult(ds, Xa, np.asarray(lines, dtype=np.int64), rejections)


def _float_out(v: float) -> float | str:
    return "inf" if math.isinf(v) else float(v)


def _float_in(v) -> float:
    return math.inf if v == "inf" else float(v)


def model_to_dict(model: PreferenceModel) -> dict:
    """JSON-ready document; floats keep their shortest exact representation."""
    spec = model.spec
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "d": spec.d,
        "m": spec.m,
        "score_min": spec.score_min,
        "score_max": spec.score_max,
        "mode": model.mode.value,
        "lambda": _float_out(model.lam),
        "linear": None if model.g is None else {"a": model.g.a.tolist(), "b": model.g.b},
        "points": model.points.tolist(),
        "values": model.values.tolist(),
    }


def model_from_dict(doc: Mapping[str, Any]) -> PreferenceModel:
    if doc.get("format") != MODEL_FORMAT:
        raise InputError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise InputError(f"unsupported model version {doc.get('version')!r}")
    try:
        spec = LatticeSpec(int(doc["d"]), int(doc["m"]), float(doc["score_min"]), float(doc["score_max"]))
        lin = doc["linear"]
        g = None if lin is None else LinearModel(np.asarray(lin["a"], dtype=np.float64), float(lin["b"]))
        points = np.asarray(doc["points"], dtype=np.int64).reshape(-1, spec.d)
        values = np.asarray(doc["values"], dtype=np.float64)
        return PreferenceModel(spec, spec.check_points(points), values, Mode(doc["mode"]), g, _float_in(doc["lambda"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed model file: {exc}") from exc


def save_model(model: PreferenceModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> PreferenceModel:
    return model_from_dict(read_json(path))


def json_ready(obj):
    """Replace infinities with the string ``"inf"`` so output is strict JSON."""
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    return obj


def rejection_dicts(rejections: Sequence[Rejection]) -> list[dict]:
    return [{"line": r.line, "reason": r.reason} for r in rejections]
