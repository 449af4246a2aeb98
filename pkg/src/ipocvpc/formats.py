"""File formats: dataset CSV, model JSON, band CSV, and key=value text files."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .coxph import CoxModel
from .records import Study
from .studygen import ARMS, GroupSpec, StudySpec
from .survmodel import StepSurvival, WeibullDist

__all__ = [
    "FormatError",
    "write_dataset",
    "read_dataset",
    "dump_models",
    "load_models",
    "parse_keyvalue",
    "parse_study_spec",
    "read_band_csv",
]


class FormatError(ValueError):
    """Input file could not be parsed; ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


def dataset_csv(study: Study) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subject_id", "time", "event", *study.covariate_names])
    for i in range(len(study)):
        w.writerow([
            study.subject_id[i],
            repr(float(study.time[i])),
            int(study.event[i]),
            *(repr(float(v)) for v in study.covariates[i]),
        ])
    return buf.getvalue()


def write_dataset(study: Study, path) -> None:
    Path(path).write_text(dataset_csv(study), encoding="utf-8")


def read_dataset(path) -> Study:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FormatError(f"{path}: missing header")
    header = [h.strip() for h in rows[0]]
    if header[:3] != ["subject_id", "time", "event"]:
        raise FormatError(f"{path}: header must start with subject_id,time,event", "header")
    names = header[3:]
    ids, time, event, cov = [], [], [], []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
        try:
            ids.append(row[0])
            time.append(float(row[1]))
            flag = row[2].strip()
            if flag not in ("0", "1"):
                raise FormatError(f"{path}:{line_no}: event must be 0 or 1", "event")
            event.append(flag == "1")
            cov.append([float(v) for v in row[3:]])
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{path}:{line_no}: {exc}") from None
    covariates = np.array(cov, dtype=float).reshape(len(ids), len(names))
    try:
        return Study(ids, time, event, covariates, names)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def models_to_dict(event_model: CoxModel, cens_model: StepSurvival) -> dict:
    return {
        "event_model": event_model.to_dict(),
        "censoring_model": {
            "knots": [float(t) for t in cens_model.knots],
            "values": [float(v) for v in cens_model.values],
        },
    }


def dump_models(event_model: CoxModel, cens_model: StepSurvival, path) -> None:
    text = json.dumps(models_to_dict(event_model, cens_model), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_models(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        event_model = CoxModel.from_dict(doc["event_model"])
        cm = doc["censoring_model"]
        cens_model = StepSurvival(cm["knots"], cm["values"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed model file ({exc})") from None
    return event_model, cens_model


def parse_keyvalue(text: str, source="<string>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{line_no}: expected key = value", line)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"{source}:{line_no}: empty key", key)
        if key in out:
            raise FormatError(f"{source}:{line_no}: duplicate key {key!r}", key)
        out[key] = value
    return out


def _number(kv, key, kind=float):
    try:
        return kind(kv[key])
    except ValueError:
        raise FormatError(f"invalid value {kv[key]!r} for key {key!r}", key) from None


def parse_study_spec(text: str, source="<string>") -> StudySpec:
    """Build a :class:`StudySpec` from key=value text.

    Recognised keys are ``seed``, ``censoring.scale``, ``censoring.shape``
    and, per group label ``g``, ``group.g.lowrisk`` plus
    ``group.g.<arm>.size`` and ``group.g.<arm>.hazard`` for each arm.
    """
    kv = parse_keyvalue(text, source)
    seed = _number(kv, "seed", int) if "seed" in kv else StudySpec.__dataclass_fields__["seed"].default
    scale = _number(kv, "censoring.scale") if "censoring.scale" in kv else 2.0
    shape = _number(kv, "censoring.shape") if "censoring.shape" in kv else 5.0
    groups: dict[str, dict] = {}
    for key in kv:
        if key in ("seed", "censoring.scale", "censoring.shape"):
            continue
        parts = key.split(".")
        if parts[0] != "group" or len(parts) not in (3, 4):
            raise FormatError(f"unknown key {key!r}", key)
        g = groups.setdefault(parts[1], {"size": {}, "hazard": {}, "lowrisk": None})
        if len(parts) == 3 and parts[2] == "lowrisk":
            g["lowrisk"] = _number(kv, key, int)
        elif len(parts) == 4 and parts[2] in ARMS and parts[3] in ("size", "hazard"):
            kind = int if parts[3] == "size" else float
            g[parts[3]][parts[2]] = _number(kv, key, kind)
        else:
            raise FormatError(f"unknown key {key!r}", key)
    specs = []
    for label, g in groups.items():
        for arm in ARMS:
            for what in ("size", "hazard"):
                if arm not in g[what]:
                    k = f"group.{label}.{arm}.{what}"
                    raise FormatError(f"missing key {k!r}", k)
        if g["lowrisk"] is None:
            k = f"group.{label}.lowrisk"
            raise FormatError(f"missing key {k!r}", k)
        try:
            specs.append(GroupSpec(label, g["size"], g["hazard"], bool(g["lowrisk"])))
        except ValueError as exc:
            raise FormatError(str(exc), f"group.{label}") from None
    try:
        censoring = WeibullDist(scale, shape)
    except ValueError as exc:
        raise FormatError(str(exc), "censoring") from None
    return StudySpec(tuple(specs), censoring, seed)


def read_band_csv(path) -> dict:
    """Band CSV back into ``{stratum: {column: array}}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["stratum", "time", "mean", "lower", "upper", "observed_km"]
        if reader.fieldnames != expected:
            raise FormatError(f"{path}: header must be {','.join(expected)}", "header")
        out: dict[str, dict[str, list]] = {}
        for row in reader:
            cols = out.setdefault(row["stratum"], {k: [] for k in expected[1:]})
            for k in expected[1:]:
                try:
                    cols[k].append(float(row[k]))
                except (TypeError, ValueError):
                    raise FormatError(
                        f"{path}:{reader.line_num}: bad {k} value {row[k]!r}", k
                    ) from None
    return {s: {k: np.array(v) for k, v in cols.items()} for s, cols in out.items()}
