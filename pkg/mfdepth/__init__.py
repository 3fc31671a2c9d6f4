"""
mfdepth: global and local multivariate functional depths for irregularly observed multivariate functional data.

The data model lives here: a :class:`MultiCurve` is one subject observed at its own increasing time points, and a
:class:`Dataset` is a collection of curves sharing the dimension ``p``. Depth computations are in
:mod:`mfdepth.depths`, the outlier pipeline and boxplot products in :mod:`mfdepth.boxplot`.
"""
import math
from typing import Iterable, List, NamedTuple, Optional

import numpy as np

from .version import __version__  # noqa


class MFDepthException(Exception):
    pass


class ValidationError(MFDepthException):
    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DataFormatError(ValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(MFDepthException):
    pass


class SimulationError(MFDepthException):
    pass


class Violation(NamedTuple):
    curve_id: Optional[str]
    rule: str
    message: str


class MultiCurve:
    """
    One subject: observation times ``t_{i,1} < ... < t_{i,T_i}`` and the p-vectors observed at those times.

    Observations are either present in all p components or absent in all of them, so a curve is stored as a time
    vector of shape (T,) and a value matrix of shape (T, p). Both arrays are read-only.
    """

    def __init__(self, id: str, times, values):
        self.id = str(id)
        times = np.array(times, dtype=float).reshape(-1)
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(len(times), -1) if len(times) else values.reshape(0, 0)
        times.flags.writeable = False
        values.flags.writeable = False
        self.times, self.values = times, values

    @classmethod
    def from_obs(cls, id: str, obs):
        obs = list(obs)
        return cls(id, [t for t, _ in obs], [list(y) for _, y in obs])

    @property
    def p(self) -> int:
        return self.values.shape[1] if self.values.ndim == 2 else 0

    @property
    def obs(self):
        """
        The observations as a list of ``(t, y)`` pairs.
        """
        return [(float(t), tuple(float(v) for v in y)) for t, y in zip(self.times, self.values)]

    @property
    def duration(self) -> float:
        if len(self.times) == 0:
            return 0.0
        return float(self.times.max() - self.times.min())

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        return (
            isinstance(other, MultiCurve)
            and self.id == other.id
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return "{}.{}('{}', T={}, p={})".format(self.__module__, self.__class__.__name__, self.id, len(self), self.p)


class Dataset:
    """
    A sample of N multivariate curves sharing the dimension p. No common time grid is assumed.
    """

    def __init__(self, curves: Iterable[MultiCurve], p: Optional[int] = None):
        self.curves = tuple(curves)
        if p is None:
            p = self.curves[0].p if self.curves else 0
        self.p = int(p)
        self._index = {c.id: i for i, c in enumerate(self.curves)}

    @property
    def ids(self) -> List[str]:
        return [c.id for c in self.curves]

    @property
    def n_obs(self) -> int:
        return sum(len(c) for c in self.curves)

    @property
    def span(self):
        times = [c.times for c in self.curves if len(c)]
        if not times:
            raise InsufficientDataError("Dataset has no observations")
        pooled = np.concatenate(times)
        return float(pooled.min()), float(pooled.max())

    def index_of(self, curve_id: str) -> int:
        return self._index[curve_id]

    def __getitem__(self, curve_id: str) -> MultiCurve:
        return self.curves[self._index[curve_id]]

    def __contains__(self, curve_id):
        return curve_id in self._index

    def __len__(self):
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def subset(self, ids) -> "Dataset":
        """
        The curves whose ids are in ``ids``, in dataset order.
        """
        ids = set(ids)
        return Dataset([c for c in self.curves if c.id in ids], p=self.p)

    def without(self, ids) -> "Dataset":
        ids = set(ids)
        return Dataset([c for c in self.curves if c.id not in ids], p=self.p)

    def replace_values(self, values_by_curve) -> "Dataset":
        return Dataset(
            [MultiCurve(c.id, c.times, v) for c, v in zip(self.curves, values_by_curve)],
            p=self.p,
        )

    def check(self) -> "Dataset":
        violations = validate(self)
        if violations:
            summary = "; ".join(f"{v.curve_id}: {v.message}" for v in violations[:5])
            raise ValidationError(f"{len(violations)} dataset violation(s): {summary}", violations)
        return self

    def __repr__(self):
        return "{}.{}(N={}, p={})".format(self.__module__, self.__class__.__name__, len(self), self.p)


class DurationSummary(NamedTuple):
    ids: List[str]
    lengths: np.ndarray
    log_lengths: np.ndarray


class Pool(NamedTuple):
    """
    All observations of a dataset flattened in curve order, then time order.
    """

    curve_index: np.ndarray
    ids: List[str]
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.times)

    def rows(self):
        for i, t, y in zip(self.curve_index, self.times, self.values):
            yield self.ids[i], float(t), tuple(float(v) for v in y)


def validate(dataset: Dataset) -> List[Violation]:
    """
    Check the MultiCurve and Dataset invariants. Returns the list of violations, empty if the dataset is valid.
    Each violation names the offending curve id (None for dataset-wide rules) and the rule.
    """
    violations = []
    if len(dataset.curves) == 0:
        violations.append(Violation(None, "empty-dataset", "dataset has no curves"))
    if dataset.p < 1:
        violations.append(Violation(None, "dimension", f"dimension must be positive, got {dataset.p}"))
    seen = set()
    for curve in dataset.curves:
        if curve.id in seen:
            violations.append(Violation(curve.id, "duplicate-id", "curve id is not unique"))
        seen.add(curve.id)
        if len(curve.times) == 0:
            violations.append(Violation(curve.id, "empty-curve", "curve has no observations"))
            continue
        if curve.values.ndim != 2 or curve.values.shape[0] != len(curve.times):
            violations.append(Violation(curve.id, "shape", "number of value rows differs from number of times"))
            continue
        if curve.p != dataset.p:
            violations.append(
                Violation(curve.id, "dimension", f"observations have {curve.p} components, expected {dataset.p}")
            )
        if not np.all(np.isfinite(curve.times)):
            violations.append(Violation(curve.id, "non-finite-time", "observation time is not finite"))
        if not np.all(np.isfinite(curve.values)):
            violations.append(Violation(curve.id, "non-finite-value", "observation value is not finite"))
        steps = np.diff(curve.times)
        if np.any(steps == 0):
            violations.append(Violation(curve.id, "duplicate-time", "observation times repeat"))
        if np.any(steps < 0):
            violations.append(Violation(curve.id, "time-order", "observation times are not increasing"))
    return violations


def durations(dataset: Dataset) -> DurationSummary:
    """
    Time interval length per subject, ``I_i = max(T_i) - min(T_i)``, and its logarithm (NaN where I_i = 0).
    """
    lengths = np.array([c.duration for c in dataset.curves], dtype=float)
    with np.errstate(divide="ignore"):
        log_lengths = np.where(lengths > 0, np.log(np.where(lengths > 0, lengths, 1.0)), math.nan)
    return DurationSummary(dataset.ids, lengths, log_lengths)


def pool(dataset: Dataset) -> Pool:
    """
    Flatten all observations into one table ordered by curve, then by time. The length equals the total number of
    observations.
    """
    p = dataset.p
    if not dataset.curves:
        return Pool(np.zeros(0, dtype=int), [], np.zeros(0), np.zeros((0, p)))
    curve_index = np.concatenate([np.full(len(c), i, dtype=int) for i, c in enumerate(dataset.curves)])
    times = np.concatenate([c.times for c in dataset.curves])
    values = np.concatenate([c.values.reshape(len(c), p) for c in dataset.curves], axis=0)
    return Pool(curve_index, dataset.ids, times, values)
