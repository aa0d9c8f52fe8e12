"""Reference-table reproduction harness for the built-in test functions.

Each table pins the expected importance/utility/influence cells for one
builtin function at a handful of instances. Boolean tables (1, 2, 3) use
exhaustive categorical sampling and must reproduce exactly; table 5 covers
the two-feature benchmark functions, where the linear rows are exact thanks
to deterministic extreme sampling and the sombrero row is checked by a
seed-averaged verification pass. Attribution columns computed with methods
other than the original ones are reported as informational deltas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .attribution import generate_grid, local_surrogate, shapley_values
from .core import Instance, SchemaError, apply_utility
from .engine import RangeCache, explain
from .functions import get_function

#: tables available to reproduce (4 is a figure-only rule set, see notes)
TABLE_IDS = (1, 2, 3, 5)

_UNDEF = "undefined"


@dataclass(frozen=True)
class CellCheck:
    """One table cell: expected vs computed, with an optional tolerance.

    ``tolerance=None`` marks an informational cell (delta reported, nothing
    asserted). ``expects_undefined`` cells pass when the computed value is
    the explicit undefined marker (``None``).
    """

    row: str
    cell: str
    expected: float | None
    computed: float | None
    tolerance: float | None
    expects_undefined: bool = False

    @property
    def delta(self) -> float | None:
        if self.expected is None or self.computed is None:
            return None
        return abs(self.computed - self.expected)

    @property
    def within(self) -> bool | None:
        if self.expects_undefined:
            return self.computed is None
        if self.tolerance is None or self.expected is None:
            return None
        if self.computed is None:
            return False
        return self.delta <= self.tolerance


@dataclass(frozen=True)
class TableReport:
    table_id: int
    title: str
    cells: tuple[CellCheck, ...]
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def checked(self) -> tuple[CellCheck, ...]:
        return tuple(c for c in self.cells if c.within is not None)

    @property
    def failures(self) -> tuple[CellCheck, ...]:
        return tuple(c for c in self.cells if c.within is False)

    @property
    def all_within(self) -> bool:
        return not self.failures

    def to_jsonable(self) -> dict:
        return {
            "table": self.table_id,
            "title": self.title,
            "all_within": self.all_within,
            "cells": [
                {
                    "row": c.row,
                    "cell": c.cell,
                    "expected": _UNDEF if c.expects_undefined else c.expected,
                    "computed": _UNDEF if c.computed is None else c.computed,
                    "delta": c.delta,
                    "tolerance": c.tolerance,
                    "within": c.within,
                }
                for c in self.cells
            ],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, indent=2) + "\n"

    def format_text(self) -> str:
        lines = [f"table {self.table_id}: {self.title}"]
        header = f"{'row':<26} {'cell':<19} {'expected':>12} {'computed':>12} {'delta':>10} {'tol':>8}  status"
        lines.append(header)
        lines.append("-" * len(header))
        for c in self.cells:
            expected = _UNDEF if c.expects_undefined else _fmt(c.expected)
            computed = _UNDEF if c.computed is None else _fmt(c.computed)
            delta = _fmt(c.delta)
            tol = _fmt(c.tolerance)
            status = {True: "ok", False: "FAIL", None: "info"}[c.within]
            lines.append(
                f"{c.row:<26} {c.cell:<19} {expected:>12} {computed:>12} {delta:>10} {tol:>8}  {status}"
            )
        checked = self.checked
        passed = sum(1 for c in checked if c.within)
        lines.append(
            f"checked cells within tolerance: {passed}/{len(checked)} "
            f"(informational: {len(self.cells) - len(checked)})"
        )
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    if value is None:
        return "-"
    if value == 0:
        return "0"
    if abs(value) < 1e-4:
        return f"{value:.1e}"
    return f"{value:.4g}"


def _pair_cells(
    row: str,
    kind: str,
    expected: tuple,
    computed: tuple,
    tolerance: float | None,
    *,
    none_is_undefined: bool = True,
) -> list[CellCheck]:
    # a None expected value means "explicitly undefined" for the boolean
    # tables, but "no reference available" for informational cells
    cells = []
    for k, (exp, com) in enumerate(zip(expected, computed), start=1):
        cells.append(
            CellCheck(
                row=row,
                cell=f"{kind}_{k}",
                expected=None if exp is None else float(exp),
                computed=com,
                tolerance=tolerance,
                expects_undefined=exp is None and none_is_undefined,
            )
        )
    return cells


def _u_sum(results) -> float:
    # ci * cu per feature with the convention that ci == 0 annihilates an
    # undefined cu; mirrors the influence definition
    total = 0.0
    for r in results:
        if r.ci in (None, 0.0) or r.cu is None:
            continue
        total += r.ci * r.cu
    return total


_BOOLEAN_TABLES: dict[int, dict] = {
    1: {
        "function": "sum",
        "title": "additive sum y = x1 + x2 on binary inputs",
        "rows": {
            (0, 0): {"y": 0, "ci": (0.5, 0.5), "cu": (0, 0), "u_sum": 0.0, "u_y": 0.0},
            (0, 1): {"y": 1, "ci": (0.5, 0.5), "cu": (0, 1), "u_sum": 0.5, "u_y": 0.5},
            (1, 0): {"y": 1, "ci": (0.5, 0.5), "cu": (1, 0), "u_sum": 0.5, "u_y": 0.5},
            (1, 1): {"y": 2, "ci": (0.5, 0.5), "cu": (1, 1), "u_sum": 1.0, "u_y": 1.0},
        },
    },
    2: {
        "function": "or",
        "title": "y = x1 OR x2 on binary inputs",
        "rows": {
            (0, 0): {"y": 0, "ci": (1, 1), "cu": (0, 0), "u_sum": 0.0, "u_y": 0.0},
            (0, 1): {"y": 1, "ci": (0, 1), "cu": (None, 1), "u_sum": 1.0, "u_y": 1.0},
            (1, 0): {"y": 1, "ci": (1, 0), "cu": (1, None), "u_sum": 1.0, "u_y": 1.0},
            (1, 1): {"y": 1, "ci": (0, 0), "cu": (None, None), "u_sum": 0.0, "u_y": 1.0},
        },
    },
    3: {
        "function": "xor",
        "title": "y = x1 XOR x2 on binary inputs",
        "rows": {
            (0, 0): {"y": 0, "ci": (1, 1), "cu": (0, 0), "u_sum": 0.0, "u_y": 0.0},
            (0, 1): {"y": 1, "ci": (1, 1), "cu": (1, 1), "u_sum": 2.0, "u_y": 1.0},
            (1, 0): {"y": 1, "ci": (1, 1), "cu": (1, 1), "u_sum": 2.0, "u_y": 1.0},
            (1, 1): {"y": 0, "ci": (1, 1), "cu": (0, 0), "u_sum": 0.0, "u_y": 0.0},
        },
    },
}

#: expected cells for the two-feature benchmark functions; ci/cu/influence for
#: the linear rows are exact, the sombrero row is checked at the verification
#: tolerance, and the attribution columns keep the reference values produced
#: by sampling-based packages (informational for non-linear cases)
_BENCHMARK_ROWS: tuple[dict, ...] = (
    {
        "function": "linear",
        "instance": (0.7, 0.8),
        "y": (0.77, 1e-9),
        "ci": (0.3, 0.7),
        "cu": (0.7, 0.8),
        "influence": (0.12, 0.42),
        "ciu_tol": 1e-9,
        "shapley_ref": (0.065, 0.208),
        "shapley_tol": 0.02,
        "surrogate_ref": (0.040, 0.331),
    },
    {
        "function": "linear",
        "instance": (0.5, 0.5),
        "y": (0.5, 1e-9),
        "ci": (0.3, 0.7),
        "cu": (0.5, 0.5),
        "influence": (0.0, 0.0),
        "ciu_tol": 1e-9,
        # reference values are acknowledged sampling noise around the true 0;
        # informational here, the exact-zero assertion lives in the tests
        "shapley_ref": (0.007, -0.021),
        "surrogate_ref": (-0.054, -0.097),
    },
    {
        "function": "rules",
        "instance": (0.7, 0.4),
        # the shipped rule set is a documented stand-in; no reference cells
        "stand_in": True,
    },
    {
        "function": "sombrero",
        "instance": (-7.5, -1.5),
        "y": (0.128, 1e-3),
        "ci": (0.724, 0.18),
        "cu": (0.392, 0.998),
        "influence": (-0.157, 0.18),
        "verify_tol": 0.02,
        "shapley_ref": (0.061, 0.032),
        "surrogate_ref": (-0.019, 0.010),
    },
)

_GRID_STEPS = {"linear": 0.05, "rules": 0.05, "sombrero": 0.51}

_VERIFY_N = 1000
_VERIFY_SEEDS = 10


def _boolean_table(table_id: int, seed: int) -> TableReport:
    config = _BOOLEAN_TABLES[table_id]
    rf = get_function(config["function"])
    model = rf.model()
    utility = rf.utility()
    cells: list[CellCheck] = []
    for inputs, expected in config["rows"].items():
        instance = Instance(inputs)
        results = explain(
            model, rf.space, instance, [[0], [1]], seed=seed, utility=utility
        )
        row = f"x1={inputs[0]} x2={inputs[1]}"
        cells.extend(
            _pair_cells(row, "ci", expected["ci"], (results[0].ci, results[1].ci), 0.0)
        )
        cells.extend(
            _pair_cells(row, "cu", expected["cu"], (results[0].cu, results[1].cu), 0.0)
        )
        cells.append(
            CellCheck(row, "u_sum", expected["u_sum"], _u_sum(results), 0.0)
        )
        cells.append(
            CellCheck(
                row,
                "u_y",
                expected["u_y"],
                apply_utility(utility, results[0].y_context),
                0.0,
            )
        )
    return TableReport(
        table_id=table_id,
        title=config["title"],
        cells=tuple(cells),
        notes=("binary inputs are sampled exhaustively, so every cell is exact",),
    )


def _seed_averaged_ciu(rf, instance, n_samples, seeds):
    model = rf.model()
    sums = {"ci": [0.0, 0.0], "cu": [0.0, 0.0], "influence": [0.0, 0.0]}
    for seed in seeds:
        results = explain(
            model, rf.space, instance, [[0], [1]],
            seed=seed, n_samples=n_samples, utility=rf.utility(),
        )
        for k, r in enumerate(results):
            sums["ci"][k] += r.ci
            sums["cu"][k] += r.cu
            sums["influence"][k] += r.influence
    count = len(seeds)
    return {key: tuple(v / count for v in vals) for key, vals in sums.items()}


def _benchmark_table(n_samples: int, seed: int) -> TableReport:
    cells: list[CellCheck] = []
    notes = [
        "the rules row uses a documented stand-in function and is excluded "
        "from comparison (reference values exist only for the original rule set)",
        "shapley cells compare exact coalition enumeration against sampling-based "
        "reference values; surrogate cells are informational (magnitudes are "
        "implementation-specific)",
        f"sombrero verify cells average N={_VERIFY_N} runs over "
        f"{_VERIFY_SEEDS} seeds",
    ]
    for spec in _BENCHMARK_ROWS:
        rf = get_function(spec["function"])
        model = rf.model()
        instance = Instance(spec["instance"])
        row = f"{spec['function']} @ {spec['instance']}"
        cache = RangeCache()
        results = explain(
            model, rf.space, instance, [[0], [1]],
            seed=seed, n_samples=n_samples, utility=rf.utility(), cache=cache,
        )
        computed_ci = (results[0].ci, results[1].ci)
        computed_cu = (results[0].cu, results[1].cu)
        computed_phi = (results[0].influence, results[1].influence)

        if spec.get("stand_in"):
            for kind, computed in (
                ("ci", computed_ci), ("cu", computed_cu), ("influence", computed_phi),
            ):
                cells.extend(
                    _pair_cells(row, kind, (None, None), computed, None, none_is_undefined=False)
                )
            continue

        y_expected, y_tol = spec["y"]
        cells.append(CellCheck(row, "y", y_expected, results[0].y_context, y_tol))

        ciu_tol = spec.get("ciu_tol")
        cells.extend(_pair_cells(row, "ci", spec["ci"], computed_ci, ciu_tol))
        cells.extend(_pair_cells(row, "cu", spec["cu"], computed_cu, ciu_tol))
        cells.extend(_pair_cells(row, "influence", spec["influence"], computed_phi, ciu_tol))

        if "verify_tol" in spec:
            averaged = _seed_averaged_ciu(
                rf, instance, _VERIFY_N, [seed + k for k in range(_VERIFY_SEEDS)]
            )
            tol = spec["verify_tol"]
            cells.extend(_pair_cells(row, "ci@verify", spec["ci"], averaged["ci"], tol))
            cells.extend(_pair_cells(row, "cu@verify", spec["cu"], averaged["cu"], tol))
            cells.extend(
                _pair_cells(row, "influence@verify", spec["influence"], averaged["influence"], tol)
            )

        background = generate_grid(rf.space, _GRID_STEPS[spec["function"]])
        shap = shapley_values(model, rf.space, instance, background)
        cells.extend(
            _pair_cells(row, "phi_shapley", spec["shapley_ref"], shap.phi, spec.get("shapley_tol"))
        )
        surrogate = local_surrogate(model, rf.space, instance, seed=seed)
        cells.extend(
            _pair_cells(row, "phi_surrogate", spec["surrogate_ref"], surrogate.phi, None)
        )
    return TableReport(
        table_id=5,
        title="two-feature benchmark functions",
        cells=tuple(cells),
        notes=tuple(notes),
    )


def reproduce_table(table_id: int, *, n_samples: int = 100, seed: int = 42) -> TableReport:
    """Recompute one reference table and report per-cell deltas.

    Mismatches are report content, not exceptions: the report's ``failures``
    and ``all_within`` summarize how the computed cells compare at each
    cell's tolerance.
    """
    if table_id in _BOOLEAN_TABLES:
        return _boolean_table(table_id, seed)
    if table_id == 5:
        return _benchmark_table(n_samples, seed)
    raise SchemaError(f"unknown table id {table_id}; available: {TABLE_IDS}")
