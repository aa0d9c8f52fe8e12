"""Contextual importance, contextual utility and contextual influence.

Importance is the share of the output range a studied feature set can move,
relative to the range a target set can move, with everything else held at the
explained instance's values. Utility locates the instance's output inside the
studied range (how favorable the current values are). Influence combines both
into a signed score comparable with additive feature attributions.

All three are ratios or differences of output ranges, so for affine utility
mappings they are computed directly on raw outputs; the mapped utility-space
ranges are reported alongside. Degenerate ranges (constant model over a
sampled set) yield explicit ``None`` values, never silent zeros.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .core import (
    BlackBoxModel,
    FeatureSpace,
    Instance,
    SchemaError,
    UtilityMapping,
    apply_utility,
    utility_direction,
    validate_instance,
)
from .sampling import evaluate_range, generate_samples

DEFAULT_N_SAMPLES = 100
DEFAULT_INFLUENCE_RANGE = (-1.0, 1.0)
DEFAULT_NEUTRAL_CU = 0.5


@dataclass(frozen=True, kw_only=True)
class CiuQuery:
    """One explanation request: what to explain and how to sample.

    ``studied`` and ``target`` take feature names or 0-based indices;
    ``target=None`` means all features. ``seed`` is required: every sampled
    quantity in this library is reproducible by construction.

    ``target_range_override`` replaces the sampled target range with a fixed
    (low, high) interval. Internal seam, intentionally undocumented elsewhere;
    the interval is still widened to contain the studied range.
    """

    instance: Instance
    studied: Sequence[int | str]
    target: Sequence[int | str] | None = None
    output_index: int = 0
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int
    utility: UtilityMapping = UtilityMapping()
    influence_range: tuple[float, float] = DEFAULT_INFLUENCE_RANGE
    neutral_cu: float = DEFAULT_NEUTRAL_CU
    target_range_override: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        rmin, rmax = self.influence_range
        if not rmin < rmax:
            raise SchemaError(f"influence range must satisfy rmin < rmax, got {self.influence_range}")
        if not 0.0 <= self.neutral_cu <= 1.0:
            raise SchemaError(f"neutral_cu must lie in [0, 1], got {self.neutral_cu}")


@dataclass(frozen=True)
class CiuResult:
    """Importance, utility and influence plus the ranges behind them.

    ``ci``, ``cu`` and ``influence`` are ``None`` when the corresponding
    sampled range is degenerate (see the ``degenerate_*`` flags); renderers
    show these as explicit "undefined". Raw-output ranges carry the
    ``y``-prefix, utility-space ranges the ``u``-prefix.
    """

    ci: float | None
    cu: float | None
    influence: float | None
    ymin_studied: float
    ymax_studied: float
    ymin_target: float
    ymax_target: float
    y_context: float
    umin_studied: float
    umax_studied: float
    umin_target: float
    umax_target: float
    u_context: float
    degenerate_studied: bool
    degenerate_target: bool
    studied: tuple[int, ...]
    target: tuple[int, ...]
    output_index: int
    n_samples: int
    seed: int
    label: str | None = None
    target_label: str | None = None


class RangeCache:
    """Memo of sampled (ymin, ymax, y_context) triples.

    Safe under concurrent reads and writes. Keys include the model identity;
    do not reuse one cache across feature spaces.
    """

    def __init__(self) -> None:
        self._entries: dict = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, key, compute):
        with self._lock:
            if key in self._entries:
                return self._entries[key]
        value = compute()
        with self._lock:
            self._entries.setdefault(key, value)
        return value


def _sampled_range(
    model: BlackBoxModel,
    space: FeatureSpace,
    instance: Instance,
    index_set: tuple[int, ...],
    output_index: int,
    n_samples: int,
    seed: int,
    cache: RangeCache | None,
) -> tuple[float, float, float]:
    def compute():
        samples = generate_samples(space, instance, index_set, n_samples, seed)
        return evaluate_range(model, samples, output_index)

    if cache is None:
        return compute()
    key = (id(model), instance.values, index_set, output_index, n_samples, seed)
    return cache.lookup(key, compute)


def ciu(
    model: BlackBoxModel,
    space: FeatureSpace,
    query: CiuQuery,
    cache: RangeCache | None = None,
) -> CiuResult:
    """Compute importance, utility and influence for one query.

    The target interval is widened, if necessary, to contain the studied
    interval, so the importance ratio is hard-bounded to [0, 1] even at
    finite sample counts (nested sampling can otherwise leave the larger set's
    estimate narrower by chance).
    """
    validate_instance(space, query.instance)
    studied = space.resolve(query.studied)
    target = (
        tuple(range(len(space))) if query.target is None else space.resolve(query.target)
    )
    if not set(studied) <= set(target):
        raise SchemaError(
            f"studied set {studied} is not a subset of target set {target}"
        )
    j = int(query.output_index)
    if not 0 <= j < model.output_count:
        raise SchemaError(f"output index {j} out of range for {model.output_count} outputs")
    n = int(query.n_samples)

    ymin_s, ymax_s, y_c = _sampled_range(
        model, space, query.instance, studied, j, n, query.seed, cache
    )
    if query.target_range_override is not None:
        ymin_t, ymax_t = (float(v) for v in query.target_range_override)
    elif target == studied:
        ymin_t, ymax_t = ymin_s, ymax_s
    else:
        ymin_t, ymax_t, _ = _sampled_range(
            model, space, query.instance, target, j, n, query.seed, cache
        )
    # containment discipline: the target interval must cover the studied one
    ymin_t = min(ymin_t, ymin_s)
    ymax_t = max(ymax_t, ymax_s)

    numerator = ymax_s - ymin_s
    denominator = ymax_t - ymin_t
    degenerate_studied = numerator <= 0.0
    degenerate_target = denominator <= 0.0

    ci = None if degenerate_target else numerator / denominator

    direction = utility_direction(query.utility)
    if degenerate_studied:
        cu = None
    else:
        anchor = ymin_s if direction > 0 else ymax_s
        cu = abs((y_c - anchor) / numerator)

    rmin, rmax = query.influence_range
    if ci is None:
        influence = None
    elif ci == 0.0:
        # the importance factor annihilates the product even when cu is undefined
        influence = 0.0
    else:
        influence = (rmax - rmin) * ci * (cu - query.neutral_cu)

    u_bounds_s = sorted(
        (apply_utility(query.utility, ymin_s), apply_utility(query.utility, ymax_s))
    )
    u_bounds_t = sorted(
        (apply_utility(query.utility, ymin_t), apply_utility(query.utility, ymax_t))
    )

    return CiuResult(
        ci=ci,
        cu=cu,
        influence=influence,
        ymin_studied=ymin_s,
        ymax_studied=ymax_s,
        ymin_target=ymin_t,
        ymax_target=ymax_t,
        y_context=y_c,
        umin_studied=u_bounds_s[0],
        umax_studied=u_bounds_s[1],
        umin_target=u_bounds_t[0],
        umax_target=u_bounds_t[1],
        u_context=apply_utility(query.utility, y_c),
        degenerate_studied=degenerate_studied,
        degenerate_target=degenerate_target,
        studied=studied,
        target=target,
        output_index=j,
        n_samples=n,
        seed=int(query.seed),
    )


def contextual_importance(
    model: BlackBoxModel,
    space: FeatureSpace,
    query: CiuQuery,
    cache: RangeCache | None = None,
) -> CiuResult:
    """Importance of the studied set relative to the target set's range."""
    return ciu(model, space, query, cache)


def contextual_utility(
    model: BlackBoxModel,
    space: FeatureSpace,
    query: CiuQuery,
    cache: RangeCache | None = None,
) -> CiuResult:
    """Position of the instance's output within the studied set's range."""
    return ciu(model, space, query, cache)


def contextual_influence(
    model: BlackBoxModel,
    space: FeatureSpace,
    query: CiuQuery,
    cache: RangeCache | None = None,
) -> CiuResult:
    """Signed combination (rmax - rmin) * ci * (cu - neutral_cu)."""
    return ciu(model, space, query, cache)


def _as_selector(item) -> list:
    if isinstance(item, (str, int)):
        return [item]
    return list(item)


def explain(
    model: BlackBoxModel,
    space: FeatureSpace,
    instance: Instance,
    feature_sets: Iterable,
    *,
    seed: int,
    n_samples: int = DEFAULT_N_SAMPLES,
    target: Sequence[int | str] | None = None,
    output_index: int = 0,
    utility: UtilityMapping = UtilityMapping(),
    influence_range: tuple[float, float] = DEFAULT_INFLUENCE_RANGE,
    neutral_cu: float = DEFAULT_NEUTRAL_CU,
    cache: RangeCache | None = None,
) -> list[CiuResult]:
    """Run the full computation for several feature sets in one pass.

    The target-range evaluation is shared through one cache, so explaining
    every feature of an instance costs one target sample set plus one studied
    sample set per feature.
    """
    cache = cache if cache is not None else RangeCache()
    target_label = (
        "+".join(space.names) if target is None
        else "+".join(space.names[i] for i in space.resolve(target))
    )
    results = []
    for item in feature_sets:
        selector = _as_selector(item)
        idx = space.resolve(selector)
        query = CiuQuery(
            instance=instance,
            studied=idx,
            target=target,
            output_index=output_index,
            n_samples=n_samples,
            seed=seed,
            utility=utility,
            influence_range=influence_range,
            neutral_cu=neutral_cu,
        )
        result = ciu(model, space, query, cache)
        label = "+".join(space.names[i] for i in idx)
        results.append(replace(result, label=label, target_label=target_label))
    return results


def explain_intermediate(
    model: BlackBoxModel,
    space: FeatureSpace,
    instance: Instance,
    concept: tuple[str, Sequence[int | str]],
    parent: tuple[str, Sequence[int | str]],
    *,
    seed: int,
    n_samples: int = DEFAULT_N_SAMPLES,
    output_index: int = 0,
    utility: UtilityMapping = UtilityMapping(),
    influence_range: tuple[float, float] = DEFAULT_INFLUENCE_RANGE,
    neutral_cu: float = DEFAULT_NEUTRAL_CU,
    cache: RangeCache | None = None,
) -> CiuResult:
    """Importance of a named concept (feature subset) within a parent concept.

    Enables hierarchical explanations: the concept's features are studied
    against the parent's features as the target set, instead of the full
    feature space.
    """
    concept_name, concept_sel = concept
    parent_name, parent_sel = parent
    concept_idx = space.resolve(_as_selector(concept_sel))
    parent_idx = space.resolve(_as_selector(parent_sel))
    if not set(concept_idx) <= set(parent_idx):
        raise SchemaError(
            f"concept {concept_name!r} {concept_idx} is not a subset of "
            f"parent {parent_name!r} {parent_idx}"
        )
    query = CiuQuery(
        instance=instance,
        studied=concept_idx,
        target=parent_idx,
        output_index=output_index,
        n_samples=n_samples,
        seed=seed,
        utility=utility,
        influence_range=influence_range,
        neutral_cu=neutral_cu,
    )
    result = ciu(model, space, query, cache)
    return replace(result, label=concept_name, target_label=parent_name)
