"""Representative-sample construction and output-range estimation.

The sample matrix for a context instance and a studied feature set holds all
non-studied columns constant at the context's values (ceteris paribus) while
the studied columns sweep their declared domains: categorical studied
features are enumerated exhaustively, numeric ones get deterministic extreme
rows plus uniform random fill.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (
    BlackBoxModel,
    EvaluationError,
    FeatureSpace,
    Instance,
    SchemaError,
    instance_row,
    validate_instance,
)

#: refuse to enumerate more categorical value combinations than this
DEFAULT_CATEGORICAL_CAP = 10_000

#: full min/max corner enumeration is used while 2**k stays at or below this
CORNER_ENUMERATION_CAP = 1024


@dataclass(frozen=True)
class SampleSet:
    """Ceteris-paribus sample matrix; row 0 is the context instance itself."""

    matrix: np.ndarray
    studied: tuple[int, ...]
    context: Instance
    seed: int
    n_samples: int  # rows excluding the context row

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])


def _extreme_rows(
    lows: np.ndarray, highs: np.ndarray, current: np.ndarray, budget: int
) -> list[tuple[float, ...]]:
    """Deterministic extreme-value rows for the studied numeric columns.

    The full min/max corner grid guarantees exact range estimates for models
    monotone in each studied coordinate; when it does not fit the budget the
    fallback keeps the all-min and all-max corners plus one-at-a-time
    extremes, so every studied feature still hits its min and max.
    """
    k = len(lows)
    if 2**k <= min(budget, CORNER_ENUMERATION_CAP):
        return list(itertools.product(*zip(lows, highs)))
    rows: list[tuple[float, ...]] = [tuple(lows), tuple(highs)]
    for c in range(k):
        for v in (lows[c], highs[c]):
            row = current.copy()
            row[c] = v
            rows.append(tuple(row))
    return rows[:budget]


def _normalize_studied(space: FeatureSpace, studied: Iterable[int | str]) -> tuple[int, ...]:
    items = list(studied)
    if not items:
        raise SchemaError("studied feature set must not be empty")
    return space.resolve(items)


def generate_samples(
    space: FeatureSpace,
    context: Instance,
    studied: Iterable[int | str],
    n_samples: int,
    seed: int,
    *,
    categorical_cap: int = DEFAULT_CATEGORICAL_CAP,
) -> SampleSet:
    """Build the representative sample matrix for one studied feature set.

    Categorical studied features are enumerated exhaustively (all value
    combinations, row order shuffled by ``seed``); when no numeric feature is
    studied, the sample is exactly that enumeration and ``n_samples`` is
    adjusted to its size, since repeated rows cannot change an output range.
    Numeric studied features contribute deterministic extreme rows (see
    :func:`_extreme_rows`) and uniform random fill rows. Non-studied columns
    keep the context's values in every row, and the context itself is
    prepended as row 0, giving ``n_samples + 1`` rows in total.
    """
    validate_instance(space, context)
    studied_idx = _normalize_studied(space, studied)
    cat_idx = [i for i in studied_idx if not space.features[i].is_numeric]
    num_idx = [i for i in studied_idx if space.features[i].is_numeric]

    n = int(n_samples)
    if num_idx and n < 2 * len(num_idx) + 1:
        raise SchemaError(
            f"n_samples={n} below the minimum {2 * len(num_idx) + 1} for "
            f"{len(num_idx)} studied numeric feature(s)"
        )
    if n < 1:
        raise SchemaError("n_samples must be positive")

    rng = np.random.default_rng(seed)

    combos: list[tuple] = []
    if cat_idx:
        count = math.prod(len(space.features[i].categories) for i in cat_idx)
        if count > categorical_cap:
            raise SchemaError(
                f"{count} categorical value combinations exceed the cap "
                f"{categorical_cap}; shrink the studied set or raise categorical_cap"
            )
        combos = list(itertools.product(*(space.features[i].categories for i in cat_idx)))
        order = rng.permutation(len(combos))
        combos = [combos[i] for i in order]
        if len(combos) > n:
            n = len(combos)

    base = instance_row(space, context)

    if not num_idx:
        n = len(combos)
        block = np.repeat(base[None, :], n, axis=0)
        for r, combo in enumerate(combos):
            for c, i in enumerate(cat_idx):
                block[r, i] = combo[c]
    else:
        block = np.repeat(base[None, :], n, axis=0)
        lows = np.array([space.features[i].numeric_range[0] for i in num_idx])
        highs = np.array([space.features[i].numeric_range[1] for i in num_idx])
        current = np.array([float(base[i]) for i in num_idx])
        det = _extreme_rows(lows, highs, current, n)
        for r, values in enumerate(det):
            for c, i in enumerate(num_idx):
                block[r, i] = values[c]
        for c, i in enumerate(num_idx):
            block[len(det):n, i] = rng.uniform(lows[c], highs[c], size=n - len(det))
        if combos:
            for r in range(n):
                combo = combos[r % len(combos)]
                for c, i in enumerate(cat_idx):
                    block[r, i] = combo[c]

    matrix = np.concatenate([base[None, :], block], axis=0)
    matrix.setflags(write=False)
    return SampleSet(
        matrix=matrix,
        studied=studied_idx,
        context=context,
        seed=int(seed),
        n_samples=n,
    )


def _locate_failing_row(model: BlackBoxModel, matrix: np.ndarray) -> int | None:
    for r in range(matrix.shape[0]):
        try:
            model.evaluate(matrix[r : r + 1])
        except Exception:
            return r
    return None


def evaluate_range(
    model: BlackBoxModel, samples: SampleSet, output_index: int = 0
) -> tuple[float, float, float]:
    """Min, max and context value of one model output over a sample set.

    The whole matrix goes to the model as a single batch. The context is
    row 0, so ``ymin <= y_context <= ymax`` holds by construction.
    """
    j = int(output_index)
    if not 0 <= j < model.output_count:
        raise SchemaError(
            f"output index {j} out of range for {model.output_count} outputs"
        )
    try:
        outputs = model.evaluate(samples.matrix)
    except EvaluationError:
        raise
    except Exception as exc:
        row = _locate_failing_row(model, samples.matrix)
        where = f"at sample row {row}" if row is not None else "on the batch"
        raise EvaluationError(f"model evaluation failed {where}: {exc}") from exc
    col = outputs[:, j]
    finite = np.isfinite(col)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise EvaluationError(f"model returned non-finite output at sample row {bad}")
    return float(col.min()), float(col.max()), float(col[0])
