"""
Bivariate functional data generators, outlier contamination and time sparseness.

Curves follow the truncated Karhunen-Loeve model ``Y(t) = mu(t) + sum_m rho_m phi_m(t) + eps(t)`` on [0, 1]. The
bivariate Fourier eigenfunctions use the split-basis convention: the orthonormal Fourier basis of an interval of
length 2 is cut in two, the first half giving the first component and the second half the second component, so
``phi_m(t) = (f_m(t), f_m(t + 1))``. Each ``phi_m`` then has unit norm in the sum-of-components inner product.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import Dataset, MultiCurve, SimulationError

logger = logging.getLogger(__name__)

Model = Enum("Model", "I II III IV")

OutlierType = Enum("OutlierType", "none magnitude_I magnitude_II amplitude_I amplitude_II shape_I shape_II")

SparsenessType = Enum("SparsenessType", "none point peak partial")

sparseness_levels = {"dense": (0.0, 0.0), "medium": (0.1, 0.3), "high": (0.4, 0.6)}

n_components = {Model.I: 8, Model.II: 8, Model.III: 2, Model.IV: 1}

magnitude_window = 0.1
max_sparsify_attempts = 10


def _aliases(member_name):
    name = member_name.lower()
    yield name
    for roman, digit in (("_ii", "2"), ("_i", "1")):
        if name.endswith(roman):
            stem = name[: -len(roman)]
            yield stem + digit
            yield f"{stem}_{digit}"
            break


def _enum_member(enum, value):
    if isinstance(value, enum):
        return value
    wanted = str(value).strip().lower().replace(" ", "_").replace("-", "_")
    for member in enum:
        if wanted in _aliases(member.name):
            return member
    raise SimulationError(f"Unknown {enum.__name__} {value!r}, expected one of {', '.join(enum.__members__)}")


def parse_model(value) -> Model:
    return _enum_member(Model, value)


def parse_outlier_type(value) -> OutlierType:
    return _enum_member(OutlierType, value)


def parse_sparseness_type(value) -> SparsenessType:
    return _enum_member(SparsenessType, value)


def fourier_basis(m: int, t) -> np.ndarray:
    """
    The m-th (1-based) bivariate Fourier eigenfunction at ``t``. Returns shape (2,) for a scalar ``t`` and (T, 2)
    for an array.
    """
    if m < 1:
        raise ValueError(f"Basis index must be at least 1, got {m}")
    t = np.asarray(t, dtype=float)
    s = np.stack([t, t + 1.0], axis=-1)
    if m == 1:
        return np.full(s.shape, 1 / math.sqrt(2))
    k = m // 2
    if m % 2 == 0:
        return np.sin(math.pi * k * s)
    return np.cos(math.pi * k * s)


def model_mean(model, t) -> np.ndarray:
    model = parse_model(model)
    t = np.asarray(t, dtype=float)
    if model == Model.I:
        return 5 * np.stack([np.cos(2 * math.pi * t), np.sin(2 * math.pi * t)], axis=-1)
    if model == Model.II:
        return np.stack([-4 * t, 5 * t], axis=-1)
    if model == Model.III:
        return np.stack([4 * t, 6 * (t - 0.5) ** 2], axis=-1)
    return np.stack([4 * t, np.zeros_like(t)], axis=-1)


def model_basis(model, m: int, t) -> np.ndarray:
    model = parse_model(model)
    if model == Model.IV:
        t = np.asarray(t, dtype=float)
        return np.stack([np.zeros_like(t), t**2 - t], axis=-1)
    return fourier_basis(m, t)


def score_variance(m: int) -> float:
    return math.exp(-(m + 1) / 2)


@dataclass(frozen=True)
class ModelSpec:
    model: str = "I"
    n_curves: int = 200
    n_times: int = 50
    jitter: float = 0.0
    noise_max: float = 0.1


@dataclass(frozen=True)
class ContaminationSpec:
    kind: str = "none"
    rate: float = 0.1


@dataclass(frozen=True)
class SparsenessSpec:
    kind: str = "none"
    level: str = "dense"
    p_s: float = 1.0

    @property
    def p_curve_range(self) -> Tuple[float, float]:
        try:
            return sparseness_levels[self.level]
        except KeyError:
            raise SimulationError(f"Unknown sparseness level {self.level!r}, expected one of {list(sparseness_levels)}")


@dataclass
class SimulatedData:
    """
    A generated dataset with the draws that produced it.
    """

    dataset: Dataset
    model: Model
    seed: int
    scores: np.ndarray
    noise_variances: np.ndarray


@dataclass
class Contamination:
    """
    A contaminated dataset, the ids of the curves that were turned into outliers, and per-outlier parameters
    (``a``, ``s``, ``a1``, ``a2``, ``t0`` as applicable) from which each outlier can be rebuilt from its source.
    """

    dataset: Dataset
    kind: OutlierType
    outliers: List[str] = field(default_factory=list)
    params: Dict[str, dict] = field(default_factory=dict)
    m_bar: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None


def _time_grid(spec: ModelSpec, rng):
    grid = np.linspace(0.0, 1.0, spec.n_times)
    if spec.jitter <= 0 or spec.n_times < 2:
        return grid
    step = 1.0 / (spec.n_times - 1)
    jittered = np.clip(grid + rng.uniform(-spec.jitter, spec.jitter, spec.n_times) * step / 2, 0.0, 1.0)
    return np.unique(jittered)


def generate(spec: ModelSpec, seed=0) -> SimulatedData:
    """
    Draw ``spec.n_curves`` curves of the given model on ``spec.n_times`` equispaced times in [0, 1] (optionally
    jittered per curve). Scores are N(0, exp(-(m + 1) / 2)), except for model IV whose single score is U(-7, 7);
    each curve and component draws its own noise variance from U(0, noise_max).
    """
    model = parse_model(spec.model)
    if spec.n_curves < 1 or spec.n_times < 1:
        raise ValueError("A simulated dataset needs at least one curve and one time point")
    rng = np.random.default_rng(seed)
    n_basis = n_components[model]
    if model == Model.IV:
        scores = rng.uniform(-7, 7, (spec.n_curves, 1))
    else:
        scores = rng.normal(0, np.sqrt([score_variance(m) for m in range(1, n_basis + 1)]), (spec.n_curves, n_basis))
    noise_variances = rng.uniform(0, spec.noise_max, (spec.n_curves, 2))
    width = len(str(spec.n_curves - 1))
    curves = []
    for i in range(spec.n_curves):
        t = _time_grid(spec, rng)
        y = model_mean(model, t)
        for m in range(1, n_basis + 1):
            y = y + scores[i, m - 1] * model_basis(model, m, t)
        y = y + rng.normal(0, 1, (len(t), 2)) * np.sqrt(noise_variances[i])
        curves.append(MultiCurve(f"c{i:0{width}d}", t, y))
    logger.debug("Generated %d curves of model %s", spec.n_curves, model.name)
    return SimulatedData(Dataset(curves, p=2), model, seed, scores, noise_variances)


def apply_outlier(kind, model, times, values, params, m_bar, r) -> np.ndarray:
    """
    Turn one clean curve into an outlier of the given type using the drawn parameters. ``m_bar`` and ``r`` are the
    componentwise maximum and range of the clean sample.
    """
    kind, model = parse_outlier_type(kind), parse_model(model)
    t = np.asarray(times, dtype=float)
    y = np.array(values, dtype=float)
    a, s = params.get("a"), params.get("s")
    if kind == OutlierType.none:
        return y
    if kind == OutlierType.magnitude_I:
        return y + a * s * r
    if kind == OutlierType.magnitude_II:
        window = (t >= params["t0"]) & (t <= params["t0"] + magnitude_window)
        y[window] = y[window] + a * s * r
        return y
    if kind == OutlierType.amplitude_I:
        return (1 + a) * s * y
    if kind == OutlierType.amplitude_II:
        return (1 - a) * s * y
    if kind == OutlierType.shape_I:
        if model == Model.I:
            return y * np.array([params["a1"], 2 * params["a1"]])
        return y + a * m_bar * np.sin(2 * math.pi * t)[:, None] / 5
    if model == Model.I:
        return y * np.array([params["a2"], 1.0])
    return a * y + a * np.stack([np.cos(math.pi * t), np.sin(math.pi * t)], axis=-1)


def _draw_params(kind, model, rng):
    params = dict(a=float(rng.uniform(0.8, 1.0)), s=int(rng.choice([-1, 1])))
    if kind == OutlierType.magnitude_II:
        params["t0"] = float(rng.uniform(0, 0.85))
    if kind == OutlierType.shape_I and model == Model.I:
        params["a1"] = float(rng.uniform(0.3, 0.5))
    if kind == OutlierType.shape_II and model == Model.I:
        params["a2"] = float(rng.uniform(1.6, 1.8))
    return params


def contaminate(data, spec: ContaminationSpec, seed=0, model=None) -> Contamination:
    """
    Replace ``round(rate * N)`` uniformly chosen curves by outliers of ``spec.kind``. ``data`` is a
    :class:`SimulatedData` or a bivariate :class:`mfdepth.Dataset` (then ``model`` selects the shape rules). The
    maximum and range used by the rules are taken from the clean input.
    """
    kind = parse_outlier_type(spec.kind)
    if isinstance(data, SimulatedData):
        dataset, model = data.dataset, data.model
    else:
        dataset, model = data, parse_model(model or "I")
    if not 0 <= spec.rate <= 0.5:
        raise ValueError(f"Contamination rate must be in [0, 0.5], got {spec.rate}")
    if kind == OutlierType.none or spec.rate == 0:
        return Contamination(dataset, kind)
    if dataset.p != 2:
        raise SimulationError(f"Outlier rules are defined for bivariate curves, got p={dataset.p}")
    n_outliers = int(round(spec.rate * len(dataset)))
    if n_outliers < 1:
        raise SimulationError(f"Rate {spec.rate} selects no outlier among {len(dataset)} curves")
    rng = np.random.default_rng(seed)
    values = np.concatenate([c.values for c in dataset.curves])
    m_bar, r = values.max(axis=0), values.max(axis=0) - values.min(axis=0)
    chosen = set(np.sort(rng.choice(len(dataset), size=n_outliers, replace=False)).tolist())
    curves, params = [], {}
    for i, curve in enumerate(dataset.curves):
        if i in chosen:
            params[curve.id] = _draw_params(kind, model, rng)
            curve = MultiCurve(
                curve.id, curve.times, apply_outlier(kind, model, curve.times, curve.values, params[curve.id], m_bar, r)
            )
        curves.append(curve)
    logger.debug("Injected %d %s outliers", n_outliers, kind.name)
    return Contamination(Dataset(curves, p=dataset.p), kind, list(params), params, m_bar, r)


def _keep_mask(kind, u, p_curve, rng):
    if kind == SparsenessType.point:
        return rng.random(len(u)) >= p_curve
    if kind == SparsenessType.peak:
        start = rng.uniform(0, 0.7 - p_curve)
        return (u < start) | (u > start + p_curve)
    start = rng.uniform(0, 1 - p_curve)
    return u <= start


def sparsify(dataset: Dataset, spec: SparsenessSpec, seed=0) -> Dataset:
    """
    Delete observations (all components at once) from a ``p_s`` fraction of the curves. Each affected curve draws
    its own ``p_curve`` from the level's range, then:

    - point: drops each observation independently with probability ``p_curve``;
    - peak: drops the window ``[t_s, t_s + p_curve]``, ``t_s ~ U(0, 0.7 - p_curve)``;
    - partial: keeps ``t <= t_s`` only, ``t_s ~ U(0, 1 - p_curve)``.

    Times are measured relative to the dataset span. A curve that would lose every observation is redrawn, at most
    10 times.
    """
    kind = parse_sparseness_type(spec.kind)
    low, high = spec.p_curve_range
    if kind == SparsenessType.none or high == 0:
        return dataset
    rng = np.random.default_rng(seed)
    lo, hi = dataset.span
    width = hi - lo if hi > lo else 1.0
    curves = []
    for curve in dataset.curves:
        if rng.random() >= spec.p_s:
            curves.append(curve)
            continue
        p_curve = float(rng.uniform(low, high))
        if p_curve == 0:
            curves.append(curve)
            continue
        u = (curve.times - lo) / width
        for _ in range(max_sparsify_attempts):
            keep = _keep_mask(kind, u, p_curve, rng)
            if keep.any():
                break
        else:
            raise SimulationError(
                f"Curve {curve.id} kept no observation after {max_sparsify_attempts} {kind.name} sparseness draws"
            )
        curves.append(MultiCurve(curve.id, curve.times[keep], curve.values[keep]))
    return Dataset(curves, p=dataset.p)
