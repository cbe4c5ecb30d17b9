"""Benchmark tasks: XOR in spike times and Fisher iris via Gaussian receptive fields."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataFormatError, ParameterError

NO_SPIKE = None
BIAS_TIME_MS = 1.0


@dataclass(frozen=True)
class SpikePattern:
    """One training example.

    ``input_times`` holds a time in ms or ``None`` (no spike) per input
    neuron; ``desired`` is the target first output spike time or ``None``.
    """

    input_times: tuple[float | None, ...]
    desired: float | None

    def trains(self) -> list[list[float]]:
        return [[] if t is None else [float(t)] for t in self.input_times]


class XorVariant(str, enum.Enum):
    STANDARD = "standard"
    ONE_NEURON = "one-neuron"


_LOGIC_MS = {0: 1.0, 1: 7.0}


def xor_patterns(variant: XorVariant | str = XorVariant.STANDARD) -> list[SpikePattern]:
    """Rows (0,0), (0,1), (1,0), (1,1) with inputs (bias, A, B)."""
    variant = XorVariant(variant)
    out = []
    for a, b in ((0, 0), (0, 1), (1, 0), (1, 1)):
        if variant is XorVariant.STANDARD:
            desired = 10.0 if a ^ b else 17.0
        else:
            desired = 10.0 if a ^ b else NO_SPIKE
        out.append(SpikePattern((BIAS_TIME_MS, _LOGIC_MS[a], _LOGIC_MS[b]), desired))
    return out


# --------------------------------------------------------------------------
# Gaussian receptive fields


@dataclass(frozen=True)
class GrfConfig:
    m: int = 8
    i_min: float = 0.0
    i_max: float = 50.0
    gamma: float = 1.5
    fire_threshold: float = 0.1
    data_scale: float = 10.0

    def __post_init__(self):
        if self.m < 3:
            raise ParameterError(f"need at least 3 receptive fields, got m={self.m}")
        if not self.i_max > self.i_min:
            raise ParameterError("i_max must exceed i_min")
        if not self.gamma > 0:
            raise ParameterError("gamma must be > 0")
        if not 0 < self.fire_threshold < 1:
            raise ParameterError("fire_threshold must lie in (0, 1)")


def grf_centers_width(cfg: GrfConfig) -> tuple[np.ndarray, float]:
    if cfg.m <= 2:
        raise ParameterError("m must be > 2")
    span = (cfg.i_max - cfg.i_min) / (cfg.m - 2)
    i = np.arange(1, cfg.m + 1)
    centers = cfg.i_min + (2 * i - 3) / 2 * span
    return centers, span / cfg.gamma


def grf_activation(x: float, cfg: GrfConfig) -> np.ndarray:
    centers, sigma = grf_centers_width(cfg)
    return np.exp(-((x * cfg.data_scale - centers) ** 2) / (2 * sigma ** 2))


def activation_to_time(g: float, cfg: GrfConfig, dt: float) -> float | None:
    """Map an activation to a spike time: strong activation fires early."""
    if g < cfg.fire_threshold:
        return NO_SPIKE
    # scale, round to the dt grid (half away from zero), then subtract from 10
    level = math.floor(10.0 * g / dt + 0.5 + 1e-9)
    steps = int(round(10.0 / dt)) - level
    return max(steps, 1) * dt


def grf_encode(x: float, cfg: GrfConfig, dt: float) -> list[float | None]:
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    return [activation_to_time(float(g), cfg, dt) for g in grf_activation(x, cfg)]


# --------------------------------------------------------------------------
# iris


class IrisClass(str, enum.Enum):
    SETOSA = "Iris-setosa"
    VERSICOLOR = "Iris-versicolor"
    VIRGINICA = "Iris-virginica"


IRIS_DESIRED_MS = {IrisClass.SETOSA: 15.0, IrisClass.VERSICOLOR: 20.0, IrisClass.VIRGINICA: 25.0}


@dataclass(frozen=True)
class LabeledSample:
    attributes: tuple[float, float, float, float]
    label: IrisClass


def bundled_iris_path() -> Path:
    return Path(str(resources.files("srmga") / "data" / "iris.data"))


def iris_load(path: str | Path | None = None) -> list[LabeledSample]:
    """Read UCI ``iris.data``; blank lines are skipped."""
    path = Path(path) if path is not None else bundled_iris_path()
    samples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise DataFormatError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            try:
                attrs = tuple(float(p) for p in parts[:4])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad attribute value") from exc
            try:
                label = IrisClass(parts[4].strip())
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: unknown class {parts[4]!r}") from exc
            samples.append(LabeledSample(attrs, label))
    return samples


def iris_encode(samples: Sequence[LabeledSample], cfg: GrfConfig, dt: float) -> list[SpikePattern]:
    """Bias at 1 ms, then ``m`` GRF neurons per attribute in attribute order."""
    out = []
    for s in samples:
        times: list[float | None] = [BIAS_TIME_MS]
        for x in s.attributes:
            times.extend(grf_encode(x, cfg, dt))
        out.append(SpikePattern(tuple(times), IRIS_DESIRED_MS[s.label]))
    return out


def kfold_split(samples: Sequence[LabeledSample], train_per_class: int, k: int,
                seed: int | None = None) -> list[tuple[list[int], list[int]]]:
    """Stratified rotating-block folds; returns (train, validation) index lists.

    Within each class a contiguous block of ``train_per_class`` samples forms
    the training set, with the block start rotated by ``round(f * n / k)``
    (wrapping around) for fold ``f``. Everything else is validation.
    ``seed`` shuffles the within-class order first; ``None`` keeps file order.
    """
    by_class: dict[IrisClass, list[int]] = {}
    for idx, s in enumerate(samples):
        by_class.setdefault(s.label, []).append(idx)
    sizes = {len(v) for v in by_class.values()}
    if len(sizes) != 1:
        raise ParameterError("classes must be equally sized for stratified folds")
    n = sizes.pop()
    if k < 1 or k > n:
        raise ParameterError(f"k={k} must lie in 1..{n}")
    if not 1 <= train_per_class < n:
        raise ParameterError(f"train_per_class={train_per_class} must lie in 1..{n - 1}")
    rng = np.random.default_rng(seed) if seed is not None else None
    order = {c: (list(rng.permutation(v)) if rng is not None else list(v))
             for c, v in by_class.items()}
    folds = []
    for f in range(k):
        start = int(round(f * n / k))
        train = []
        for c in by_class:
            train.extend(int(order[c][(start + j) % n]) for j in range(train_per_class))
        train.sort()
        chosen = set(train)
        folds.append((train, [i for i in range(len(samples)) if i not in chosen]))
    return folds


def misclassified(actual_first, desired, tolerance: float = 2.0) -> int:
    """Patterns with no output spike or an output more than ``tolerance`` ms off."""
    if not tolerance > 0:
        raise ParameterError("tolerance must be > 0")
    bad = 0
    for a, d in zip(actual_first, desired):
        if d is None:
            bad += not (a is None or (isinstance(a, float) and math.isnan(a)))
            continue
        if a is None or math.isnan(a) or abs(a - d) > tolerance:
            bad += 1
    return bad


@dataclass(frozen=True)
class ClassificationSummary:
    fold_errors: tuple[int, ...]
    mean_error: float
    accuracy_pct: float


def summarize_folds(fold_errors: Sequence[int], dataset_size: int = 150) -> ClassificationSummary:
    """Mean misclassification count over folds and accuracy relative to the dataset size."""
    if not fold_errors:
        raise ParameterError("need at least one fold")
    mean = sum(fold_errors) / len(fold_errors)
    return ClassificationSummary(tuple(int(e) for e in fold_errors), mean,
                                 100.0 * (1.0 - mean / dataset_size))


def classify_outputs(actual_by_fold, desired_by_fold, tolerance: float = 2.0,
                     dataset_size: int = 150) -> ClassificationSummary:
    errors = [misclassified(a, d, tolerance) for a, d in zip(actual_by_fold, desired_by_fold)]
    return summarize_folds(errors, dataset_size)
