"""Additive feature attribution baselines.

Exact and permutation-sampled Shapley values plus a weighted local linear
surrogate, for side-by-side comparison with the contextual importance and
utility scores. The coalition value of a feature subset is the background-mean
model output with that subset's columns pinned to the explained instance
(interventional conditional expectation); the reference level phi0 is the
background mean itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .core import (
    BlackBoxModel,
    FeatureSpace,
    Instance,
    SchemaError,
    instance_row,
    validate_instance,
)

#: exact mode enumerates 2**n coalitions; refuse beyond this many features
EXACT_SHAPLEY_MAX_FEATURES = 12

#: cap on rows per model call when bulk-evaluating coalitions
_BATCH_ROW_LIMIT = 200_000


@dataclass(frozen=True)
class BackgroundData:
    """Reference population used by the attribution baselines."""

    rows: np.ndarray
    provenance: Literal["generated-grid", "loaded"]

    def __post_init__(self) -> None:
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise SchemaError("background must be a non-empty 2-D matrix")

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class AttributionResult:
    """Per-feature attributions phi around a reference level phi0."""

    phi: tuple[float, ...]
    phi0: float
    method: Literal["shapley", "surrogate"]
    fit_quality: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _grid_axis(low: float, high: float, step: float) -> np.ndarray:
    if step <= 0:
        raise SchemaError(f"grid step must be positive, got {step}")
    count = int(math.floor((high - low) / step + 1e-9))
    values = low + step * np.arange(count + 1)
    # land exactly on the upper bound when the step divides the range
    if abs(values[-1] - high) <= 1e-9 * max(1.0, abs(low), abs(high)):
        values[-1] = high
    return values


def generate_grid(space: FeatureSpace, step: float | Mapping[str, float]) -> BackgroundData:
    """Regular cartesian grid over a numeric feature space.

    ``step`` is one step size for every feature or a mapping from feature name
    to step size. Each axis starts at the feature's min and ascends by the
    step; the max is included exactly when the step divides the range.
    """
    if not space.numeric_only:
        raise SchemaError("grid generation requires a numeric-only feature space")
    axes = []
    for feat in space.features:
        s = step[feat.name] if isinstance(step, Mapping) else float(step)
        lo, hi = feat.numeric_range
        axes.append(_grid_axis(lo, hi, float(s)))
    mesh = np.meshgrid(*axes, indexing="ij")
    rows = np.column_stack([m.reshape(-1) for m in mesh])
    return BackgroundData(rows=rows, provenance="generated-grid")


def exhaustive_background(space: FeatureSpace) -> BackgroundData:
    """All category combinations of a categorical-only feature space."""
    if any(f.is_numeric for f in space.features):
        raise SchemaError(
            "exhaustive background requires a categorical-only feature space; "
            "use generate_grid for numeric features"
        )
    combos = list(itertools.product(*(f.categories for f in space.features)))
    rows = np.empty((len(combos), len(space)), dtype=space.matrix_dtype)
    for r, combo in enumerate(combos):
        for c, value in enumerate(combo):
            rows[r, c] = value
    return BackgroundData(rows=rows, provenance="generated-grid")


class _CoalitionValues:
    """Memoized coalition value function v(S) over bitmask coalitions."""

    def __init__(
        self,
        model: BlackBoxModel,
        x_row: np.ndarray,
        background: np.ndarray,
        output_index: int,
    ) -> None:
        self._model = model
        self._x = x_row
        self._bg = background
        self._j = output_index
        self._n = x_row.shape[0]
        self.cache: dict[int, float] = {}
        self.rows_evaluated = 0

    def _blend(self, mask: int) -> np.ndarray:
        rows = self._bg.copy()
        for i in range(self._n):
            if mask >> i & 1:
                rows[:, i] = self._x[i]
        return rows

    def value(self, mask: int) -> float:
        if mask not in self.cache:
            rows = self._blend(mask)
            outputs = self._model.evaluate(rows)[:, self._j]
            self.rows_evaluated += rows.shape[0]
            self.cache[mask] = float(outputs.mean())
        return self.cache[mask]

    def bulk(self, masks: list[int]) -> None:
        """Evaluate many coalitions with batched model calls."""
        pending = [m for m in masks if m not in self.cache]
        k = self._bg.shape[0]
        per_call = max(1, _BATCH_ROW_LIMIT // k)
        for start in range(0, len(pending), per_call):
            chunk = pending[start : start + per_call]
            stacked = np.concatenate([self._blend(m) for m in chunk], axis=0)
            outputs = self._model.evaluate(stacked)[:, self._j]
            self.rows_evaluated += stacked.shape[0]
            means = outputs.reshape(len(chunk), k).mean(axis=1)
            for m, v in zip(chunk, means):
                self.cache[m] = float(v)


def shapley_values(
    model: BlackBoxModel,
    space: FeatureSpace,
    instance: Instance,
    background: BackgroundData,
    *,
    output_index: int = 0,
    mode: Literal["exact", "monte-carlo"] = "exact",
    samples: int | None = None,
    seed: int | None = None,
) -> AttributionResult:
    """Shapley attributions for one instance against a background population.

    Exact mode enumerates every coalition (n <= 12) and satisfies local
    accuracy: phi0 + sum(phi) equals the model output at the instance up to
    float noise. Monte-carlo mode averages marginal contributions over
    ``samples`` random feature permutations and requires a ``seed``.
    """
    validate_instance(space, instance)
    n = len(space)
    if background.rows.shape[1] != n:
        raise SchemaError(
            f"background has {background.rows.shape[1]} columns, feature space has {n}"
        )
    j = int(output_index)
    if not 0 <= j < model.output_count:
        raise SchemaError(f"output index {j} out of range for {model.output_count} outputs")

    values = _CoalitionValues(model, instance_row(space, instance), background.rows, j)

    if mode == "exact":
        if n > EXACT_SHAPLEY_MAX_FEATURES:
            raise SchemaError(
                f"exact mode enumerates 2^{n} coalitions; beyond "
                f"{EXACT_SHAPLEY_MAX_FEATURES} features use mode='monte-carlo'"
            )
        values.bulk(list(range(2**n)))
        fact = math.factorial
        weight = [fact(s) * fact(n - s - 1) / fact(n) for s in range(n)]
        phi = [0.0] * n
        for mask in range(2**n):
            size = mask.bit_count()
            v_mask = values.cache[mask]
            for i in range(n):
                if not mask >> i & 1:
                    phi[i] += weight[size] * (values.cache[mask | 1 << i] - v_mask)
        diagnostics = {
            "mode": "exact",
            "samples": None,
            "seed": None,
            "coalitions": 2**n,
            "background_rows": background.n_rows,
            "model_rows": values.rows_evaluated,
        }
    elif mode == "monte-carlo":
        if samples is None or int(samples) < 1:
            raise SchemaError("monte-carlo mode needs samples >= 1")
        if seed is None:
            raise SchemaError("monte-carlo mode needs an explicit seed")
        samples = int(samples)
        rng = np.random.default_rng(seed)
        totals = np.zeros(n)
        v_empty = values.value(0)
        for _ in range(samples):
            mask = 0
            previous = v_empty
            for i in rng.permutation(n):
                mask |= 1 << int(i)
                current = values.value(mask)
                totals[i] += current - previous
                previous = current
        phi = list(totals / samples)
        diagnostics = {
            "mode": "monte-carlo",
            "samples": samples,
            "seed": int(seed),
            "distinct_coalitions": len(values.cache),
            "background_rows": background.n_rows,
            "model_rows": values.rows_evaluated,
        }
    else:
        raise SchemaError(f"unknown shapley mode {mode!r}")

    return AttributionResult(
        phi=tuple(float(p) for p in phi),
        phi0=values.value(0),
        method="shapley",
        diagnostics=diagnostics,
    )


def _weighted_linear_fit(
    design: np.ndarray, y: np.ndarray, weights: np.ndarray, names: tuple[str, ...]
) -> np.ndarray:
    sw = np.sqrt(weights)
    a = np.column_stack([np.ones(design.shape[0]), design]) * sw[:, None]
    if np.linalg.matrix_rank(a) < a.shape[1]:
        spread = design.std(axis=0)
        flat = [names[i] for i in range(len(names)) if spread[i] < 1e-12]
        detail = (
            f"features without variation: {flat}" if flat
            else f"collinear combination among {list(names)}"
        )
        raise SchemaError(f"singular surrogate design matrix; {detail}")
    coef, *_ = np.linalg.lstsq(a, y * sw, rcond=None)
    return coef


def local_surrogate(
    model: BlackBoxModel,
    space: FeatureSpace,
    instance: Instance,
    *,
    samples: int = 200,
    seed: int,
    output_index: int = 0,
    neighborhood: BackgroundData | None = None,
    scale_fraction: float = 0.1,
    kernel_width: float | None = None,
) -> AttributionResult:
    """Weighted linear fit of the model around one instance.

    Perturbation points are gaussian around the instance with per-feature
    standard deviation ``scale_fraction`` of the feature range (pass a
    ``neighborhood`` to use fixed points instead). Weights decay with the
    squared range-normalized distance over ``kernel_width`` (default
    0.75 * sqrt(n)). The fitted coefficients are reported per perturbation
    scale, so magnitudes are comparable across features; phi0 is the fitted
    value at the instance and fit_quality the weighted R^2.
    """
    validate_instance(space, instance)
    if not space.numeric_only:
        raise SchemaError("the local surrogate supports numeric-only feature spaces")
    n = len(space)
    j = int(output_index)
    if not 0 <= j < model.output_count:
        raise SchemaError(f"output index {j} out of range for {model.output_count} outputs")

    lows = np.array([f.numeric_range[0] for f in space.features])
    highs = np.array([f.numeric_range[1] for f in space.features])
    if scale_fraction <= 0:
        raise SchemaError("scale_fraction must be positive")
    scales = scale_fraction * (highs - lows)
    x = instance_row(space, instance).astype(np.float64)

    rng = np.random.default_rng(seed)
    if neighborhood is not None:
        if neighborhood.rows.shape[1] != n:
            raise SchemaError("neighborhood columns do not match the feature space")
        points = neighborhood.rows.astype(np.float64)
        mode = "background"
    else:
        points = x + rng.normal(0.0, scales, size=(int(samples), n))
        mode = "gaussian"
    if points.shape[0] < n + 2:
        raise SchemaError(f"need at least {n + 2} sample points, got {points.shape[0]}")

    outputs = model.evaluate(points)[:, j]
    design = (points - x) / scales
    width = 0.75 * math.sqrt(n) if kernel_width is None else float(kernel_width)
    if width <= 0:
        raise SchemaError("kernel_width must be positive")
    distance = np.sqrt((design**2).sum(axis=1))
    weights = np.exp(-((distance / width) ** 2))

    coef = _weighted_linear_fit(design, outputs, weights, space.names)
    fitted = coef[0] + design @ coef[1:]
    total_weight = weights.sum()
    mean_w = float((weights * outputs).sum() / total_weight)
    ss_resid = float((weights * (outputs - fitted) ** 2).sum())
    ss_total = float((weights * (outputs - mean_w) ** 2).sum())
    fit_quality = 0.0 if ss_total < 1e-30 else min(1.0, max(0.0, 1.0 - ss_resid / ss_total))

    return AttributionResult(
        phi=tuple(float(c) for c in coef[1:]),
        phi0=float(coef[0]),
        method="surrogate",
        fit_quality=fit_quality,
        diagnostics={
            "mode": mode,
            "samples": int(points.shape[0]),
            "seed": int(seed),
            "kernel_width": width,
            "scale_fraction": float(scale_fraction),
        },
    )
