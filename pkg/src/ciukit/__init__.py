"""Model-agnostic explanations for black-box tabular models.

The engine estimates, per feature set, how much of the output range that set
controls (contextual importance), how favorable the instance's current values
are within that range (contextual utility), and a signed combination of both
(contextual influence). Shapley values and a local linear surrogate are
included as additive-attribution baselines, along with builtin reference
functions, a table-reproduction harness and a CLI.
"""

from .attribution import (
    AttributionResult,
    BackgroundData,
    exhaustive_background,
    generate_grid,
    local_surrogate,
    shapley_values,
)
from .bridge import BridgeProtocolError, ExternalModelBridge
from .core import (
    BlackBoxModel,
    EvaluationError,
    ExplainerError,
    FeatureDescriptor,
    FeatureSpace,
    Instance,
    SchemaError,
    UtilityMapping,
    UtilityRangeError,
    apply_utility,
    utility_direction,
    validate_instance,
)
from .engine import (
    CiuQuery,
    CiuResult,
    RangeCache,
    ciu,
    contextual_importance,
    contextual_influence,
    contextual_utility,
    explain,
    explain_intermediate,
)
from .functions import BUILTIN_FUNCTIONS, ReferenceFunction, get_function, oracle_range
from .ingest import ingest_csv
from .render import render_all, render_bars
from .sampling import SampleSet, evaluate_range, generate_samples
from .tables import TableReport, reproduce_table

__version__ = "0.1.0"

__all__ = [
    "AttributionResult",
    "BackgroundData",
    "BlackBoxModel",
    "BridgeProtocolError",
    "BUILTIN_FUNCTIONS",
    "CiuQuery",
    "CiuResult",
    "EvaluationError",
    "ExplainerError",
    "ExternalModelBridge",
    "FeatureDescriptor",
    "FeatureSpace",
    "Instance",
    "RangeCache",
    "ReferenceFunction",
    "SampleSet",
    "SchemaError",
    "TableReport",
    "UtilityMapping",
    "UtilityRangeError",
    "apply_utility",
    "ciu",
    "contextual_importance",
    "contextual_influence",
    "contextual_utility",
    "evaluate_range",
    "exhaustive_background",
    "explain",
    "explain_intermediate",
    "generate_grid",
    "generate_samples",
    "get_function",
    "ingest_csv",
    "local_surrogate",
    "oracle_range",
    "render_all",
    "render_bars",
    "reproduce_table",
    "shapley_values",
    "utility_direction",
    "validate_instance",
    "__version__",
]
