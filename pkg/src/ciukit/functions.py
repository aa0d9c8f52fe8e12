"""Built-in closed-form reference functions and a brute-force range oracle.

These small functions have known shapes and output ranges, which makes them
good ground truth for the explanation engine: importance and utility values
can be checked against exhaustive enumeration or dense grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    BlackBoxModel,
    FeatureDescriptor,
    FeatureSpace,
    Instance,
    SchemaError,
    UtilityMapping,
    instance_row,
    validate_instance,
)

#: global minimum of sin(r)/r, attained at r ~ 4.4934
_SINC_MIN = -0.21723362821122166


@dataclass(frozen=True)
class ReferenceFunction:
    """A closed-form test function with its feature space and output range."""

    name: str
    space: FeatureSpace
    fn: Callable[[np.ndarray], np.ndarray]  # (k, n) matrix -> (k,) outputs
    output_range: tuple[float, float]
    description: str = ""

    def model(self) -> BlackBoxModel:
        return BlackBoxModel(predict=self.fn, output_names=("y",))

    def utility(self) -> UtilityMapping:
        """Ascending affine map of the declared output range onto [0, 1]."""
        return UtilityMapping.from_range(*self.output_range)


def _unit_square(kind: str = "numeric") -> FeatureSpace:
    if kind == "numeric":
        feats = [FeatureDescriptor.numeric(f"x{i}", 0.0, 1.0) for i in (1, 2)]
    else:
        feats = [FeatureDescriptor.categorical(f"x{i}", (0, 1)) for i in (1, 2)]
    return FeatureSpace(tuple(feats))


def _as_float(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix, dtype=np.float64)


def _linear(matrix: np.ndarray) -> np.ndarray:
    x = _as_float(matrix)
    return 0.3 * x[:, 0] + 0.7 * x[:, 1]


def _unit_sum(matrix: np.ndarray) -> np.ndarray:
    x = _as_float(matrix)
    return x[:, 0] + x[:, 1]


def _or(matrix: np.ndarray) -> np.ndarray:
    x = _as_float(matrix)
    return np.logical_or(x[:, 0] >= 0.5, x[:, 1] >= 0.5).astype(np.float64)


def _xor(matrix: np.ndarray) -> np.ndarray:
    x = _as_float(matrix)
    return np.logical_xor(x[:, 0] >= 0.5, x[:, 1] >= 0.5).astype(np.float64)


def _rules(matrix: np.ndarray) -> np.ndarray:
    # plateau rule set: thresholds at x1 >= 0.5 and x2 >= 0.6 add 0.4 and 0.3
    # to a 0.2 base, with a -0.2 adjustment when both fire
    x = _as_float(matrix)
    a = (x[:, 0] >= 0.5).astype(np.float64)
    b = (x[:, 1] >= 0.6).astype(np.float64)
    return 0.2 + 0.4 * a + 0.3 * b - 0.2 * a * b


def _sombrero(matrix: np.ndarray) -> np.ndarray:
    x = _as_float(matrix)
    r = np.hypot(x[:, 0], x[:, 1])
    out = np.ones_like(r)
    mask = r > 0.0
    out[mask] = np.sin(r[mask]) / r[mask]
    return out


BUILTIN_FUNCTIONS: dict[str, ReferenceFunction] = {
    rf.name: rf
    for rf in (
        ReferenceFunction(
            name="linear",
            space=_unit_square("numeric"),
            fn=_linear,
            output_range=(0.0, 1.0),
            description="y = 0.3*x1 + 0.7*x2 on [0,1]^2",
        ),
        ReferenceFunction(
            name="sum",
            space=_unit_square("categorical"),
            fn=_unit_sum,
            output_range=(0.0, 2.0),
            description="y = x1 + x2 on binary inputs (exhaustively sampled)",
        ),
        ReferenceFunction(
            name="or",
            space=_unit_square("categorical"),
            fn=_or,
            output_range=(0.0, 1.0),
            description="y = x1 OR x2 on binary inputs",
        ),
        ReferenceFunction(
            name="xor",
            space=_unit_square("categorical"),
            fn=_xor,
            output_range=(0.0, 1.0),
            description="y = x1 XOR x2 on binary inputs",
        ),
        ReferenceFunction(
            name="rules",
            space=_unit_square("numeric"),
            fn=_rules,
            output_range=(0.2, 0.7),
            description=(
                "plateau rule set on [0,1]^2: base 0.2, +0.4 if x1>=0.5, "
                "+0.3 if x2>=0.6, -0.2 if both"
            ),
        ),
        ReferenceFunction(
            name="sombrero",
            space=FeatureSpace(
                (
                    FeatureDescriptor.numeric("x1", -10.0, 10.0),
                    FeatureDescriptor.numeric("x2", -10.0, 10.0),
                )
            ),
            fn=_sombrero,
            output_range=(_SINC_MIN, 1.0),
            description="y = sin(r)/r with r = sqrt(x1^2 + x2^2), y(0,0) = 1",
        ),
    )
}


def get_function(name: str) -> ReferenceFunction:
    try:
        return BUILTIN_FUNCTIONS[name]
    except KeyError:
        raise SchemaError(
            f"unknown builtin function {name!r}; available: {sorted(BUILTIN_FUNCTIONS)}"
        ) from None


def oracle_range(
    function: ReferenceFunction,
    context: Instance,
    studied: Sequence[int | str] | Iterable[int | str],
    resolution: int = 1000,
) -> tuple[float, float]:
    """Brute-force output extrema over the studied dimensions for one context.

    Independent of the sampling module: builds a dense grid (``resolution``
    evenly spaced points per numeric studied dimension, the full category set
    for categorical ones) and scans the closed-form function exhaustively.
    Used to validate sampled range estimates.
    """
    space = function.space
    validate_instance(space, context)
    studied_idx = space.resolve(list(studied))
    axes = []
    for i in studied_idx:
        feat = space.features[i]
        if feat.is_numeric:
            if resolution < 1000:
                raise SchemaError(
                    "oracle resolution must be at least 1000 points per studied dimension"
                )
            lo, hi = feat.numeric_range
            axes.append(np.linspace(lo, hi, int(resolution)))
        else:
            axes.append(np.array(feat.categories, dtype=object))
    mesh = np.meshgrid(*axes, indexing="ij")
    count = mesh[0].size
    matrix = np.repeat(instance_row(space, context)[None, :], count, axis=0)
    for axis_values, i in zip(mesh, studied_idx):
        matrix[:, i] = axis_values.reshape(-1)
    outputs = function.model().evaluate(matrix)[:, 0]
    return float(outputs.min()), float(outputs.max())
