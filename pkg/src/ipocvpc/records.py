"""Study records and their columnar container."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = ["StudyRecord", "Study"]


@dataclass(frozen=True)
class StudyRecord:
    """One subject: end of follow-up, event flag and covariates."""

    subject_id: str
    time: float
    event: bool
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.time >= 0:
            raise ValueError(f"subject {self.subject_id}: negative follow-up time")


class Study:
    """Columnar view of a set of :class:`StudyRecord`.

    Estimators and simulators work on the arrays directly; subjects are
    addressed by their row position, which is stable for the lifetime of the
    object.
    """

    def __init__(self, subject_id, time, event, covariates=None, covariate_names=()):
        time = np.asarray(time, dtype=float).reshape(-1)
        event = np.asarray(event, dtype=bool).reshape(-1)
        n = time.size
        if event.size != n:
            raise ValueError("time and event must have equal length")
        if np.any(np.isnan(time)) or np.any(time < 0):
            raise ValueError("follow-up times must be non-negative")
        names = tuple(covariate_names)
        if covariates is None:
            covariates = np.zeros((n, len(names)))
        covariates = np.asarray(covariates, dtype=float)
        if covariates.ndim != 2:
            covariates = covariates.reshape(n, -1) if n else np.zeros((0, len(names)))
        if covariates.shape[0] != n:
            raise ValueError("covariates must have one row per subject")
        if covariates.shape[1] != len(names):
            if names:
                raise ValueError("covariate_names does not match covariate columns")
            names = tuple(f"x{k}" for k in range(covariates.shape[1]))
        ids = [str(s) for s in subject_id]
        if len(ids) != n:
            raise ValueError("subject_id must have one entry per subject")
        for arr in (time, event, covariates):
            arr.flags.writeable = False
        self.subject_id = tuple(ids)
        self.time = time
        self.event = event
        self.covariates = covariates
        self.covariate_names = names

    @classmethod
    def from_records(cls, records: Sequence[StudyRecord], covariate_names=()) -> Study:
        records = list(records)
        widths = {len(r.covariates) for r in records}
        if len(widths) > 1:
            raise ValueError("covariate vectors differ in length across records")
        p = widths.pop() if widths else len(tuple(covariate_names))
        cov = np.array([r.covariates for r in records], dtype=float).reshape(len(records), p)
        return cls(
            [r.subject_id for r in records],
            [r.time for r in records],
            [r.event for r in records],
            cov,
            covariate_names,
        )

    def __len__(self) -> int:
        return self.time.size

    def __iter__(self) -> Iterator[StudyRecord]:
        for i in range(len(self)):
            yield StudyRecord(
                self.subject_id[i],
                float(self.time[i]),
                bool(self.event[i]),
                tuple(float(v) for v in self.covariates[i]),
            )

    def column(self, name: str) -> np.ndarray:
        try:
            k = self.covariate_names.index(name)
        except ValueError:
            raise KeyError(f"no covariate column named {name!r}") from None
        return self.covariates[:, k]

    def subset(self, mask) -> Study:
        idx = np.flatnonzero(np.asarray(mask))
        return Study(
            [self.subject_id[i] for i in idx],
            self.time[idx],
            self.event[idx],
            self.covariates[idx],
            self.covariate_names,
        )

    @property
    def horizon(self) -> float:
        """Largest observed follow-up time (0 for an empty study)."""
        return float(self.time.max()) if len(self) else 0.0

    def __repr__(self):
        return (
            f"Study(n={len(self)}, events={int(self.event.sum())}, "
            f"covariates={list(self.covariate_names)})"
        )


def as_study(data) -> Study:
    if isinstance(data, Study):
        return data
    return Study.from_records(data)
