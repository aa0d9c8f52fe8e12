"""Feature schemas, instances, the black-box model contract and utility mappings.

Everything downstream (sampling, the explanation engine, the attribution
baselines) works against the small set of types defined here. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal

import numpy as np

#: absolute slack allowed when clamping mapped utilities to [0, 1]
UTILITY_CLAMP_TOL = 1e-9

FeatureValue = float | int | str


class ExplainerError(Exception):
    """Base class for every error this package raises deliberately."""


class SchemaError(ExplainerError, ValueError):
    """A feature space, instance, query or configuration violates its contract."""


class UtilityRangeError(ExplainerError, ValueError):
    """A mapped output landed outside [0, 1] beyond tolerance.

    This signals a mis-declared output range rather than float noise; values
    within ``UTILITY_CLAMP_TOL`` of a bound are clamped silently.
    """


class EvaluationError(ExplainerError, RuntimeError):
    """The wrapped model failed to evaluate or broke the batch contract."""


@dataclass(frozen=True)
class FeatureDescriptor:
    """One input feature: a bounded numeric range or a categorical value set."""

    name: str
    kind: Literal["numeric", "categorical"]
    numeric_range: tuple[float, float] | None = None
    categories: tuple[FeatureValue, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind == "numeric":
            if self.numeric_range is None or self.categories is not None:
                raise SchemaError(
                    f"feature {self.name!r}: numeric features take numeric_range only"
                )
            lo, hi = (float(v) for v in self.numeric_range)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise SchemaError(f"feature {self.name!r}: range bounds must be finite")
            if not lo < hi:
                raise SchemaError(
                    f"feature {self.name!r}: range must satisfy min < max, got [{lo}, {hi}]"
                )
            object.__setattr__(self, "numeric_range", (lo, hi))
        elif self.kind == "categorical":
            if self.categories is None or self.numeric_range is not None:
                raise SchemaError(
                    f"feature {self.name!r}: categorical features take categories only"
                )
            cats = tuple(self.categories)
            if len(cats) < 2:
                raise SchemaError(f"feature {self.name!r}: need at least 2 categories")
            if len(set(cats)) != len(cats):
                raise SchemaError(f"feature {self.name!r}: duplicate categories")
            object.__setattr__(self, "categories", cats)
        else:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")

    @classmethod
    def numeric(cls, name: str, low: float, high: float) -> "FeatureDescriptor":
        return cls(name, "numeric", numeric_range=(low, high))

    @classmethod
    def categorical(cls, name: str, categories: Iterable[FeatureValue]) -> "FeatureDescriptor":
        return cls(name, "categorical", categories=tuple(categories))

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered collection of feature descriptors.

    Indices are 0-based throughout the library; human-facing labels come from
    feature names (the builtin spaces use x1, x2, ... naming).
    """

    features: tuple[FeatureDescriptor, ...]

    def __post_init__(self) -> None:
        feats = tuple(self.features)
        if not feats:
            raise SchemaError("feature space needs at least one feature")
        names = [f.name for f in feats]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise SchemaError(f"duplicate feature names: {sorted(dupes)}")
        object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def numeric_only(self) -> bool:
        return all(f.is_numeric for f in self.features)

    @property
    def matrix_dtype(self):
        # object dtype as soon as category symbols may be non-numeric
        return np.float64 if self.numeric_only else object

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(
                f"unknown feature {name!r}; available: {list(self.names)}"
            ) from None

    def resolve(self, selector: Iterable[FeatureValue | int | str]) -> tuple[int, ...]:
        """Resolve feature names and/or 0-based indices to a sorted index tuple."""
        indices: list[int] = []
        for item in selector:
            if isinstance(item, str):
                indices.append(self.index_of(item))
            else:
                i = int(item)
                if not 0 <= i < len(self):
                    raise SchemaError(
                        f"feature index {i} out of range for {len(self)} features"
                    )
                indices.append(i)
        out = tuple(sorted(set(indices)))
        if not out:
            raise SchemaError("empty feature selection")
        return out


@dataclass(frozen=True)
class Instance:
    """One input vector; values are positional, one per feature."""

    values: tuple[FeatureValue, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self) -> int:
        return len(self.values)


def validate_instance(space: FeatureSpace, instance: Instance) -> Instance:
    """Check an instance against its feature space and return it unchanged.

    Raises :class:`SchemaError` naming the offending feature on dimension
    mismatch, out-of-range numeric value or unknown category. Numeric range
    bounds are closed (boundary values are accepted).
    """
    if len(instance) != len(space):
        raise SchemaError(
            f"instance has {len(instance)} values, feature space has {len(space)}"
        )
    for feat, value in zip(space.features, instance.values):
        if feat.is_numeric:
            try:
                v = float(value)
            except (TypeError, ValueError):
                raise SchemaError(
                    f"feature {feat.name!r}: numeric feature got non-numeric value {value!r}"
                ) from None
            lo, hi = feat.numeric_range
            if math.isnan(v) or not lo <= v <= hi:
                raise SchemaError(
                    f"feature {feat.name!r}: value {value!r} outside [{lo}, {hi}]"
                )
        else:
            if value not in feat.categories:
                raise SchemaError(
                    f"feature {feat.name!r}: unknown category {value!r}; "
                    f"expected one of {list(feat.categories)}"
                )
    return instance


def instance_row(space: FeatureSpace, instance: Instance) -> np.ndarray:
    """The instance as a 1-D array with the space's matrix dtype."""
    row = np.empty(len(space), dtype=space.matrix_dtype)
    for i, value in enumerate(instance.values):
        row[i] = value
    return row


@dataclass(frozen=True, eq=False)
class BlackBoxModel:
    """Batch-evaluable deterministic model: (k, n) value matrix -> (k, m) outputs.

    ``predict`` must be deterministic: identical batches produce identical
    outputs. Set ``serialized=True`` when it is not safe to call concurrently;
    every evaluation then funnels through a single lock.
    """

    predict: Callable[[np.ndarray], np.ndarray]
    output_names: tuple[str, ...] = ("y",)
    serialized: bool = False
    _lane: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @property
    def output_count(self) -> int:
        return len(self.output_names)

    def evaluate(self, matrix: np.ndarray) -> np.ndarray:
        rows = int(matrix.shape[0])
        if self.serialized:
            with self._lane:
                raw = self.predict(matrix)
        else:
            raw = self.predict(matrix)
        out = np.asarray(raw, dtype=np.float64)
        if out.ndim == 1 and self.output_count == 1:
            out = out.reshape(-1, 1)
        if out.shape != (rows, self.output_count):
            raise EvaluationError(
                f"model returned shape {out.shape}, expected ({rows}, {self.output_count})"
            )
        return out


@dataclass(frozen=True)
class UtilityMapping:
    """Affine map u(y) = a*y + b onto [0, 1].

    The default (a=1, b=0) is the identity used for classifier-style outputs
    that already live in [0, 1].
    """

    a: float = 1.0
    b: float = 0.0

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if a == 0.0 or not (math.isfinite(a) and math.isfinite(b)):
            raise SchemaError("utility slope must be finite and nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def is_identity(self) -> bool:
        return self.a == 1.0 and self.b == 0.0

    @classmethod
    def identity(cls) -> "UtilityMapping":
        return cls()

    @classmethod
    def from_range(cls, low: float, high: float) -> "UtilityMapping":
        """Affine map sending [low, high] onto [0, 1].

        ``low > high`` yields a descending map (higher raw outputs are worse).
        """
        low, high = float(low), float(high)
        if low == high or not (math.isfinite(low) and math.isfinite(high)):
            raise SchemaError(f"degenerate output range [{low}, {high}]")
        a = 1.0 / (high - low)
        return cls(a, -low * a)


def apply_utility(mapping: UtilityMapping, y: float) -> float:
    """Map a raw output onto [0, 1], clamping float noise near the bounds.

    Values beyond ``UTILITY_CLAMP_TOL`` outside [0, 1] raise
    :class:`UtilityRangeError`: the declared output range does not match the
    model's actual outputs.
    """
    u = float(y) if mapping.is_identity else mapping.a * float(y) + mapping.b
    if u < 0.0:
        if u >= -UTILITY_CLAMP_TOL:
            return 0.0
        raise UtilityRangeError(
            f"utility {u} for output {y} falls below 0; output range mis-declared?"
        )
    if u > 1.0:
        if u <= 1.0 + UTILITY_CLAMP_TOL:
            return 1.0
        raise UtilityRangeError(
            f"utility {u} for output {y} exceeds 1; output range mis-declared?"
        )
    return u


def utility_direction(mapping: UtilityMapping) -> int:
    """+1 when higher raw outputs map to higher utility, -1 otherwise."""
    return 1 if mapping.a > 0 else -1
