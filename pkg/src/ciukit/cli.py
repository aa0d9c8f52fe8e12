"""Command-line front end: explain instances, reproduce reference tables,
render record files as bar charts, and ingest CSV background data.

Every artifact records the seed that produced it; re-running a command with
the same arguments writes byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .attribution import exhaustive_background, generate_grid
from .attribution import local_surrogate, shapley_values
from .bridge import ExternalModelBridge
from .core import (
    ExplainerError,
    FeatureDescriptor,
    FeatureSpace,
    Instance,
    SchemaError,
    UtilityMapping,
    validate_instance,
)
from .engine import (
    DEFAULT_INFLUENCE_RANGE,
    DEFAULT_NEUTRAL_CU,
    RangeCache,
    explain,
)
from .functions import BUILTIN_FUNCTIONS, get_function
from .ingest import ingest_csv
from .render import render_all
from .tables import TABLE_IDS, reproduce_table

_SURROGATE_SAMPLES = 200
_MC_SHAPLEY_SAMPLES = 200

_CSV_FIELDS = [
    "method", "model", "instance", "feature_set", "target_set", "output",
    "output_index", "n_samples", "seed", "ci", "cu", "influence",
    "ymin_studied", "ymax_studied", "ymin_target", "ymax_target", "y_context",
    "umin_studied", "umax_studied", "umin_target", "umax_target", "u_context",
    "degenerate_studied", "degenerate_target", "influence_range", "neutral_cu",
    "phi", "phi0", "mode", "samples", "fit_quality", "background_rows",
    "grid_step", "kernel_width", "scale_fraction",
]


def _parse_space_spec(text: str) -> tuple[FeatureSpace, list[dict]]:
    """Parse a feature-space declaration given inline as JSON or as a path."""
    raw = text.strip()
    if not raw.startswith("{"):
        raw = Path(text).read_text(encoding="utf-8")
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"feature-space declaration is not valid JSON: {exc}") from exc
    feats = []
    for item in spec.get("features", []):
        name = item.get("name")
        kind = item.get("kind")
        if kind == "numeric":
            lo, hi = item["range"]
            feats.append(FeatureDescriptor.numeric(name, lo, hi))
        elif kind == "categorical":
            feats.append(FeatureDescriptor.categorical(name, item["categories"]))
        else:
            raise SchemaError(f"feature {name!r}: kind must be numeric or categorical")
    if not feats:
        raise SchemaError("feature-space declaration lists no features")
    return FeatureSpace(tuple(feats)), list(spec.get("outputs", []))


def _parse_instance(text: str, space: FeatureSpace) -> Instance:
    tokens = [t.strip() for t in text.split(",")]
    if len(tokens) != len(space):
        raise SchemaError(
            f"instance has {len(tokens)} values, feature space has {len(space)}"
        )
    values = []
    for feat, token in zip(space.features, tokens):
        if feat.is_numeric:
            try:
                values.append(float(token))
            except ValueError:
                raise SchemaError(
                    f"feature {feat.name!r}: {token!r} is not numeric"
                ) from None
        else:
            match = next((c for c in feat.categories if str(c) == token), None)
            if match is None:
                raise SchemaError(
                    f"feature {feat.name!r}: unknown category {token!r}; "
                    f"expected one of {[str(c) for c in feat.categories]}"
                )
            values.append(match)
    return validate_instance(space, Instance(tuple(values)))


def _parse_feature_sets(text: str | None, space: FeatureSpace) -> list[list[str]]:
    if text is None or text == "":
        return [[name] for name in space.names]
    if text == "all":
        return [list(space.names)]
    sets = []
    for chunk in text.split(","):
        names = [n.strip() for n in chunk.split("+") if n.strip()]
        if not names:
            raise SchemaError(f"empty feature set in {text!r}")
        sets.append(names)
    return sets


def _parse_target(text: str | None, space: FeatureSpace) -> list[str] | None:
    if text is None or text in ("", "all"):
        return None
    return [n.strip() for n in text.split("+") if n.strip()]


def _utility_for(outputs: list[dict], output_index: int) -> UtilityMapping:
    if 0 <= output_index < len(outputs):
        rng = outputs[output_index].get("range")
        if rng is not None:
            return UtilityMapping.from_range(rng[0], rng[1])
    return UtilityMapping.identity()


def _jsonable_instance(instance: Instance) -> list:
    return [v.item() if hasattr(v, "item") else v for v in instance.values]


def _ciu_record(result, method, model_label, instance, output_name, args) -> dict:
    record = {
        "method": method,
        "model": model_label,
        "instance": _jsonable_instance(instance),
        "feature_set": result.label.split("+"),
        "target_set": result.target_label.split("+"),
        "output": output_name,
        "output_index": result.output_index,
        "n_samples": result.n_samples,
        "seed": result.seed,
        "ci": result.ci,
        "cu": result.cu,
        "influence": result.influence,
        "ymin_studied": result.ymin_studied,
        "ymax_studied": result.ymax_studied,
        "ymin_target": result.ymin_target,
        "ymax_target": result.ymax_target,
        "y_context": result.y_context,
        "umin_studied": result.umin_studied,
        "umax_studied": result.umax_studied,
        "umin_target": result.umin_target,
        "umax_target": result.umax_target,
        "u_context": result.u_context,
        "degenerate_studied": result.degenerate_studied,
        "degenerate_target": result.degenerate_target,
    }
    if method == "influence":
        record["influence_range"] = list(DEFAULT_INFLUENCE_RANGE)
        record["neutral_cu"] = DEFAULT_NEUTRAL_CU
    return record


def _write_output(content: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(content)
    else:
        Path(out).write_text(content, encoding="utf-8")


def _records_to_json(records: list[dict]) -> str:
    return json.dumps(records, sort_keys=True, indent=2) + "\n"


def _records_to_csv(records: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        row = {}
        for key in _CSV_FIELDS:
            value = record.get(key)
            if value is None:
                row[key] = ""
            elif isinstance(value, (list, tuple)):
                row[key] = "+".join(str(v) for v in value)
            else:
                row[key] = value
        writer.writerow(row)
    return buffer.getvalue()


def _emit_records(records: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        _write_output(_records_to_json(records), out)
    elif fmt == "csv":
        _write_output(_records_to_csv(records), out)
    elif fmt == "text-bars":
        _write_output(render_all(records, "text"), out)
    elif fmt == "svg":
        _write_output(render_all(records, "svg"), out)
    else:
        raise SchemaError(f"unknown output format {fmt!r}")


def cmd_explain(args: argparse.Namespace) -> int:
    bridge = None
    try:
        if args.model is not None:
            rf = get_function(args.model)
            model = rf.model()
            space = rf.space
            utility = rf.utility()
            model_label = args.model
            output_name = model.output_names[args.output_index]
        else:
            if args.space is None:
                raise SchemaError("--bridge-cmd requires --space with the feature declaration")
            space, outputs = _parse_space_spec(args.space)
            names = tuple(o.get("name", f"y{k + 1}") for k, o in enumerate(outputs)) or ("y",)
            bridge = ExternalModelBridge(args.bridge_cmd, output_names=names)
            model = bridge.as_model()
            utility = _utility_for(outputs, args.output_index)
            model_label = "bridge"
            output_name = names[args.output_index] if args.output_index < len(names) else "y"

        instance = _parse_instance(args.instance, space)
        feature_sets = _parse_feature_sets(args.features, space)
        target = _parse_target(args.target_concept, space)
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        known = {"ciu", "influence", "shapley", "surrogate"}
        unknown = [m for m in methods if m not in known]
        if unknown:
            raise SchemaError(f"unknown methods {unknown}; choose from {sorted(known)}")

        records: list[dict] = []
        if "ciu" in methods or "influence" in methods:
            cache = RangeCache()
            results = explain(
                model, space, instance, feature_sets,
                seed=args.seed, n_samples=args.N, target=target,
                output_index=args.output_index, utility=utility, cache=cache,
            )
            for method in ("ciu", "influence"):
                if method in methods:
                    records.extend(
                        _ciu_record(r, method, model_label, instance, output_name, args)
                        for r in results
                    )

        if "shapley" in methods or "surrogate" in methods:
            singles = [[name] for name in space.names]
            base = {
                "model": model_label,
                "instance": _jsonable_instance(instance),
                "output": output_name,
                "output_index": args.output_index,
                "seed": args.seed,
            }
            if "shapley" in methods:
                if space.numeric_only:
                    background = generate_grid(space, args.grid_step)
                    grid_step = args.grid_step
                else:
                    background = exhaustive_background(space)
                    grid_step = None
                if len(space) <= 12:
                    attribution = shapley_values(model, space, instance, background,
                                                 output_index=args.output_index)
                else:
                    attribution = shapley_values(
                        model, space, instance, background,
                        output_index=args.output_index, mode="monte-carlo",
                        samples=_MC_SHAPLEY_SAMPLES, seed=args.seed,
                    )
                for names_, phi in zip(singles, attribution.phi):
                    records.append({
                        **base, "method": "shapley", "feature_set": names_,
                        "phi": phi, "phi0": attribution.phi0,
                        "mode": attribution.diagnostics["mode"],
                        "samples": attribution.diagnostics["samples"],
                        "background_rows": attribution.diagnostics["background_rows"],
                        "grid_step": grid_step,
                    })
            if "surrogate" in methods:
                attribution = local_surrogate(
                    model, space, instance,
                    samples=_SURROGATE_SAMPLES, seed=args.seed,
                    output_index=args.output_index,
                )
                for names_, phi in zip(singles, attribution.phi):
                    records.append({
                        **base, "method": "surrogate", "feature_set": names_,
                        "phi": phi, "phi0": attribution.phi0,
                        "fit_quality": attribution.fit_quality,
                        "samples": attribution.diagnostics["samples"],
                        "kernel_width": attribution.diagnostics["kernel_width"],
                        "scale_fraction": attribution.diagnostics["scale_fraction"],
                    })

        _emit_records(records, args.format, args.out)
        return 0
    finally:
        if bridge is not None:
            bridge.close()


def cmd_reproduce_table(args: argparse.Namespace) -> int:
    report = reproduce_table(args.table, n_samples=args.N, seed=args.seed)
    if args.format == "json":
        _write_output(report.to_json(), args.out)
    else:
        _write_output(report.format_text(), args.out)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    raw = sys.stdin.read() if args.input in (None, "-") else Path(args.input).read_text(encoding="utf-8")
    try:
        records = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"record file is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise SchemaError("record file must hold a JSON array of records")
    if args.method is not None:
        records = [r for r in records if r.get("method") == args.method]
    content = render_all(records, args.format)
    _write_output(content, args.out)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    space = None
    if args.space is not None:
        space, _ = _parse_space_spec(args.space)
    background, space = ingest_csv(args.input, space)
    report = {
        "rows": background.n_rows,
        "provenance": background.provenance,
        "features": [
            {
                "name": f.name,
                "kind": f.kind,
                **(
                    {"range": list(f.numeric_range)}
                    if f.is_numeric
                    else {"categories": [str(c) for c in f.categories]}
                ),
            }
            for f in space.features
        ],
    }
    _write_output(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ciukit",
        description=(
            "Explain black-box tabular models with contextual importance and "
            "utility, contextual influence, Shapley values and a local linear "
            "surrogate."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="explain one instance of a model")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", choices=sorted(BUILTIN_FUNCTIONS),
                        help="builtin reference function")
    source.add_argument("--bridge-cmd", help="external model command (line-delimited JSON protocol)")
    p.add_argument("--space", help="feature-space declaration: inline JSON or a path")
    p.add_argument("--instance", required=True,
                   help="comma-separated feature values (use --instance=-1,2 for negatives)")
    p.add_argument("--features", help="comma-separated feature sets; join joint sets with '+' (default: each feature)")
    p.add_argument("--target-concept", help="target feature set joined with '+' (default: all features)")
    p.add_argument("--output-index", type=int, default=0)
    p.add_argument("--methods", default="ciu,influence",
                   help="comma list from: ciu, influence, shapley, surrogate")
    p.add_argument("--N", type=int, default=100, help="sample count per studied set")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--grid-step", type=float, default=0.05,
                   help="background grid step for shapley")
    p.add_argument("--format", default="json", choices=["json", "csv", "text-bars", "svg"])
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("reproduce-table", help="recompute a builtin reference table")
    p.add_argument("--table", type=int, required=True, choices=list(TABLE_IDS))
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--format", default="text", choices=["text", "json"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce_table)

    p = sub.add_parser("render", help="render an explanation record file as bars")
    p.add_argument("--in", dest="input", help="records JSON path (default: stdin)")
    p.add_argument("--method", help="render only this method's records")
    p.add_argument("--format", default="text", choices=["text", "svg"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("ingest", help="load a CSV and report its inferred schema")
    p.add_argument("--in", dest="input", required=True, help="CSV path")
    p.add_argument("--space", help="declared feature space: inline JSON or a path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExplainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
