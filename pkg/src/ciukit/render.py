"""Bar renderings of explanation records, as plain text or standalone SVG.

Axes are fixed, never rescaled to the data: importance bars span [0, 1] and
signed bars sit on a symmetric axis around zero. Rescaling to the data makes
near-zero attributions look like informative explanations, so the fixed axis
is stated in every rendering. Undefined values are drawn hatched/neutral with
an explicit label rather than as zero.
"""

from __future__ import annotations

from .core import SchemaError

TEXT_TRACK = 40  # characters per unit axis in text charts

_CU_BANDS = (
    (1 / 3, "unfavorable"),
    (2 / 3, "neutral"),
    (float("inf"), "favorable"),
)

_BAND_COLORS = {
    "unfavorable": "#c62828",
    "neutral": "#f9a825",
    "favorable": "#2e7d32",
    "undefined": "#9e9e9e",
}

_SIGNED_COLOR = {True: "#2e7d32", False: "#c62828"}

_SIGNED_METHODS = ("influence", "shapley", "surrogate")


def _cu_band(cu: float | None) -> str:
    if cu is None:
        return "undefined"
    for limit, name in _CU_BANDS:
        if cu < limit:
            return name
    return "favorable"


def _chart_meta(records: list[dict], method: str) -> tuple[str, str]:
    first = records[0]
    model = first.get("model", "?")
    instance = first.get("instance")
    instance_txt = (
        "(" + ", ".join(str(v) for v in instance) + ")" if instance else "?"
    )
    title = f"{method} | model={model} | instance={instance_txt}"
    if method == "ciu":
        note = "axis fixed: importance spans [0, 1]; color class from utility thirds"
    else:
        note = "axis fixed: symmetric around 0, not rescaled to the data"
    return title, note


def _axis_limit_for(records: list[dict], method: str, axis_limit: float | None) -> float:
    if axis_limit is not None:
        if axis_limit <= 0:
            raise SchemaError("axis_limit must be positive")
        return float(axis_limit)
    if method == "influence":
        limits = []
        for r in records:
            rng = r.get("influence_range") or (-1.0, 1.0)
            neutral = r.get("neutral_cu", 0.5)
            limits.append((rng[1] - rng[0]) * max(neutral, 1.0 - neutral))
        return max(limits) if limits else 1.0
    return 1.0


def _record_label(record: dict) -> str:
    fs = record.get("feature_set")
    if fs:
        return "+".join(str(f) for f in fs)
    return str(record.get("label", "?"))


def _record_value(record: dict, method: str) -> float | None:
    key = "phi" if method in ("shapley", "surrogate") else method
    if method == "ciu":
        key = "ci"
    return record.get(key)


def _validate(records: list[dict]) -> str:
    if not records:
        raise SchemaError("empty record set")
    methods = sorted({r.get("method", "?") for r in records})
    if len(methods) != 1:
        raise SchemaError(
            f"records mix methods {methods}; render one method at a time "
            "(filter with --method)"
        )
    instances = {tuple(r.get("instance", ())) for r in records}
    if len(instances) != 1:
        raise SchemaError("records mix instances; render one instance at a time")
    method = methods[0]
    if method not in ("ciu",) + _SIGNED_METHODS:
        raise SchemaError(f"cannot render method {method!r}")
    return method


# ---------------------------------------------------------------- text bars


def _text_bar_unit(value: float) -> str:
    filled = round(value * TEXT_TRACK)
    return "#" * filled + "." * (TEXT_TRACK - filled)


def _text_bar_signed(value: float, limit: float) -> str:
    half = TEXT_TRACK // 2
    cells = min(half, round(abs(value) / limit * half))
    left = "." * (half - cells) + "<" * cells if value < 0 else "." * half
    right = ">" * cells + "." * (half - cells) if value > 0 else "." * half
    return left + "|" + right


def _render_text(records: list[dict], method: str, axis_limit: float | None) -> str:
    title, note = _chart_meta(records, method)
    lines = [f"== {title} ==", note]
    width = max(len(_record_label(r)) for r in records)
    if method == "ciu":
        for r in records:
            label = _record_label(r).ljust(width)
            ci, cu = r.get("ci"), r.get("cu")
            if ci is None:
                lines.append(
                    f"{label}  [{' no effect measurable '.center(TEXT_TRACK, '/')}]"
                    "  CI undefined"
                )
                continue
            band = _cu_band(cu)
            cu_txt = "undefined" if cu is None else f"{cu:.3f}"
            lines.append(
                f"{label}  [{_text_bar_unit(ci)}]  CI={ci:.3f}  CU={cu_txt}  {band}"
            )
    else:
        limit = _axis_limit_for(records, method, axis_limit)
        lines[1] = f"{note} (limit {limit:g})"
        for r in records:
            label = _record_label(r).ljust(width)
            value = _record_value(r, method)
            if value is None:
                lines.append(
                    f"{label}  [{' undefined '.center(TEXT_TRACK + 1, '/')}]"
                    f"  {method} undefined"
                )
                continue
            lines.append(
                f"{label}  [{_text_bar_signed(value, limit)}]  {value:+.3f}"
            )
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- svg bars

_SVG_WIDTH = 720
_BAR_H = 24
_BAR_GAP = 10
_HEADER_H = 52
_FOOTER_H = 30
_LABEL_W = 150
_VALUE_W = 180
_FONT = "font-family=\"monospace\" font-size=\"13\""


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _svg_chart(records: list[dict], method: str, axis_limit: float | None, y0: int) -> tuple[list[str], int]:
    title, note = _chart_meta(records, method)
    track_x = _LABEL_W
    track_w = _SVG_WIDTH - _LABEL_W - _VALUE_W
    parts = [
        f'<text x="12" y="{y0 + 18}" {_FONT} font-weight="bold">{_escape(title)}</text>',
        f'<text x="12" y="{y0 + 36}" {_FONT} fill="#555555">{_escape(note)}</text>',
    ]
    y = y0 + _HEADER_H
    signed = method != "ciu"
    limit = _axis_limit_for(records, method, axis_limit) if signed else 1.0
    zero_x = track_x + track_w / 2 if signed else track_x

    for r in records:
        label = _record_label(r)
        value = r.get("ci") if method == "ciu" else _record_value(r, method)
        parts.append(
            f'<text x="{_LABEL_W - 10}" y="{y + _BAR_H - 8}" text-anchor="end" {_FONT}>'
            f"{_escape(label)}</text>"
        )
        parts.append(
            f'<rect x="{track_x}" y="{y}" width="{track_w}" height="{_BAR_H}" '
            'fill="#f2f2f2" stroke="#cccccc"/>'
        )
        if value is None:
            parts.append(
                f'<rect x="{track_x}" y="{y}" width="{track_w}" height="{_BAR_H}" '
                'fill="url(#hatch)"/>'
            )
            caption = "undefined (no effect measurable)" if method == "ciu" else "undefined"
            parts.append(
                f'<text x="{track_x + track_w + 10}" y="{y + _BAR_H - 8}" {_FONT}>'
                f"{caption}</text>"
            )
        elif not signed:
            cu = r.get("cu")
            band = _cu_band(cu)
            bar_w = max(0.0, min(1.0, value)) * track_w
            fill = "url(#hatch)" if band == "undefined" else _BAND_COLORS[band]
            parts.append(
                f'<rect x="{track_x}" y="{y}" width="{bar_w:.2f}" height="{_BAR_H}" '
                f'fill="{fill}"/>'
            )
            cu_txt = "undefined" if cu is None else f"{cu:.3f}"
            parts.append(
                f'<text x="{track_x + track_w + 10}" y="{y + _BAR_H - 8}" {_FONT}>'
                f"CI={value:.3f} CU={cu_txt} {band}</text>"
            )
        else:
            frac = max(-1.0, min(1.0, value / limit))
            bar_w = abs(frac) * track_w / 2
            bar_x = zero_x if frac >= 0 else zero_x - bar_w
            parts.append(
                f'<rect x="{bar_x:.2f}" y="{y}" width="{bar_w:.2f}" height="{_BAR_H}" '
                f'fill="{_SIGNED_COLOR[frac >= 0]}"/>'
            )
            parts.append(
                f'<text x="{track_x + track_w + 10}" y="{y + _BAR_H - 8}" {_FONT}>'
                f"{value:+.4f}</text>"
            )
        y += _BAR_H + _BAR_GAP

    if signed:
        parts.append(
            f'<line x1="{zero_x}" y1="{y0 + _HEADER_H - 4}" x2="{zero_x}" y2="{y}" '
            'stroke="#333333" stroke-width="1"/>'
        )
        ticks = ((track_x, -limit), (zero_x, 0.0), (track_x + track_w, limit))
    else:
        ticks = ((track_x, 0.0), (track_x + track_w / 2, 0.5), (track_x + track_w, 1.0))
    for tick_x, tick_v in ticks:
        parts.append(
            f'<text x="{tick_x:.2f}" y="{y + 18}" text-anchor="middle" {_FONT} '
            f'fill="#555555">{tick_v:g}</text>'
        )
    return parts, y + _FOOTER_H


_HATCH_DEF = (
    '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
    'patternTransform="rotate(45)"><rect width="6" height="6" fill="#eeeeee"/>'
    '<line x1="0" y1="0" x2="0" y2="6" stroke="#9e9e9e" stroke-width="2"/>'
    "</pattern></defs>"
)


def _svg_document(charts: list[tuple[list[str], int]]) -> str:
    height = charts[-1][1] if charts else 0
    body = "\n".join("\n".join(parts) for parts, _ in charts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{height}" viewBox="0 0 {_SVG_WIDTH} {height}">\n'
        f"{_HATCH_DEF}\n"
        f'<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>\n'
        f"{body}\n</svg>\n"
    )


# ------------------------------------------------------------------- public


def render_bars(records: list[dict], fmt: str, *, axis_limit: float | None = None) -> str:
    """Render records of one method for one instance as ``text`` or ``svg``."""
    method = _validate(records)
    if fmt == "text":
        return _render_text(records, method, axis_limit)
    if fmt == "svg":
        chart = _svg_chart(records, method, axis_limit, 0)
        return _svg_document([chart])
    raise SchemaError(f"unknown render format {fmt!r}; use 'text' or 'svg'")


def render_all(records: list[dict], fmt: str, *, axis_limit: float | None = None) -> str:
    """Render records grouped by method, stacking one chart per method."""
    if not records:
        raise SchemaError("empty record set")
    methods: list[str] = []
    for r in records:
        m = r.get("method", "?")
        if m not in methods:
            methods.append(m)
    groups = [[r for r in records if r.get("method") == m] for m in methods]
    if fmt == "text":
        return "\n".join(render_bars(g, "text", axis_limit=axis_limit) for g in groups)
    if fmt == "svg":
        charts = []
        y = 0
        for g in groups:
            method = _validate(g)
            chart, y = _svg_chart(g, method, axis_limit, y)
            charts.append((chart, y))
        return _svg_document(charts)
    raise SchemaError(f"unknown render format {fmt!r}; use 'text' or 'svg'")
