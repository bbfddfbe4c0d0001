"""Three figure kinds over the experiment CSV schemas.

exponent_sweep: stabilizable gain versus inverse channel budget, one
curve per crossover probability.  alpha_vs_p: analytic, capacity and
(optionally) empirical gain curves versus crossover probability.
error_decay: prefix-error curves on a log2 axis with the fitted
exponential bound overlaid as a straight line.

CSV files start with one or more ``#`` comment lines (the harness stamps
the config hash there), then a header row.  Identical inputs render
byte-identical images.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


class SpecError(ValueError):
    """Malformed plot spec or CSV missing required columns."""


FIGURE_KINDS = ("exponent_sweep", "alpha_vs_p", "error_decay")

_REQUIRED_COLUMNS = {
    "exponent_sweep": ("p", "inv_n", "alpha"),
    "alpha_vs_p": ("p", "alpha_analytic", "alpha_capacity"),
    "error_decay": ("t", "j", "empirical_error", "bound_value"),
}

_SCALES = ("linear", "log")


@dataclass
class PlotSpec:
    kind: str
    csv: str
    out: str
    x_scale: str = "linear"
    y_scale: str = "linear"
    title: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")
        if self.x_scale not in _SCALES or self.y_scale not in _SCALES:
            raise SpecError(f"axis scales must be one of {_SCALES}")

    @classmethod
    def from_file(cls, path) -> "PlotSpec":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecError(f"spec {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise SpecError(f"spec {path} must be a JSON object")
        known = {k: raw.pop(k) for k in ("kind", "csv", "out", "x_scale",
                                         "y_scale", "title") if k in raw}
        for req in ("kind", "csv", "out"):
            if req not in known:
                raise SpecError(f"spec {path} is missing required field {req!r}")
        spec = cls(extras=raw, **known)
        base = os.path.dirname(os.path.abspath(path))
        if not os.path.isabs(spec.csv):
            spec.csv = os.path.join(base, spec.csv)
        if not os.path.isabs(spec.out):
            spec.out = os.path.join(base, spec.out)
        return spec


def read_rows(path, required: tuple[str, ...]) -> list[dict]:
    """Rows of a harness CSV, skipping leading # comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise SpecError(f"{path} has no header row")
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise SpecError(f"{path} is missing required columns {missing} "
                        f"(found {header})")
    return list(reader)


def _fnum(value: str) -> float | None:
    if value is None or value == "":
        return None
    return float(value)


def _new_axes(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ax.set_xscale(spec.x_scale)
    ax.grid(True, alpha=0.3, linestyle="--")
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _plot_exponent_sweep(spec: PlotSpec, ax) -> None:
    rows = read_rows(spec.csv, _REQUIRED_COLUMNS["exponent_sweep"])
    by_p: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        p = _fnum(row["p"])
        inv_n = _fnum(row["inv_n"])
        alpha = _fnum(row["alpha"])
        if p is None or inv_n is None or alpha is None:
            continue
        by_p.setdefault(p, []).append((inv_n, alpha))
    for p in sorted(by_p):
        pts = sorted(by_p[p])
        ax.plot([x for x, _ in pts], [y for _, y in pts],
                marker=".", markersize=3, label=f"p = {p:g}")
    ax.set_xlabel("1/n  (bits per channel use)")
    ax.set_ylabel("max stabilizable gain")
    if by_p:
        ax.legend(fontsize=8)


def _plot_alpha_vs_p(spec: PlotSpec, ax) -> None:
    rows = read_rows(spec.csv, _REQUIRED_COLUMNS["alpha_vs_p"])
    ps, analytic, cap, emp = [], [], [], []
    for row in rows:
        p = _fnum(row["p"])
        if p is None:
            continue
        ps.append(p)
        analytic.append(_fnum(row["alpha_analytic"]))
        cap.append(_fnum(row["alpha_capacity"]))
        emp.append(_fnum(row.get("alpha_empirical", "")))
    ax.plot(ps, cap, "k--", label="capacity bound")
    ax.plot(ps, analytic, "C0-", marker=".", label="analytic")
    if any(v is not None for v in emp):
        pe = [(p, v) for p, v in zip(ps, emp) if v is not None]
        ax.plot([p for p, _ in pe], [v for _, v in pe], "C1s",
                markersize=4, label="empirical")
    ax.set_xlabel("crossover probability p")
    ax.set_ylabel("max stabilizable gain")
    if ps:
        ax.legend(fontsize=8)


def _plot_error_decay(spec: PlotSpec, ax) -> None:
    rows = read_rows(spec.csv, _REQUIRED_COLUMNS["error_decay"])
    by_j: dict[int, dict[str, list]] = {}
    for row in rows:
        t = _fnum(row["t"])
        err = _fnum(row["empirical_error"])
        bound = _fnum(row["bound_value"])
        if t is None or err is None:
            continue
        j = int(float(row["j"]))
        slot = by_j.setdefault(j, {"t": [], "err": [], "bt": [], "bound": []})
        if err > 0:
            slot["t"].append(t)
            slot["err"].append(math.log2(err))
        if bound is not None and bound > 0:
            slot["bt"].append(t)
            slot["bound"].append(math.log2(bound))
    for j in sorted(by_j):
        slot = by_j[j]
        ax.plot(slot["t"], slot["err"], marker=".", markersize=3,
                label=f"prefix j = {j}")
        if slot["bound"]:
            ax.plot(slot["bt"], slot["bound"], linestyle="--", linewidth=1,
                    label=f"bound (j = {j})")
    ax.set_xlabel("channel uses t")
    ax.set_ylabel("log2 prefix error probability")
    if by_j:
        ax.legend(fontsize=8)


_RENDERERS = {
    "exponent_sweep": _plot_exponent_sweep,
    "alpha_vs_p": _plot_alpha_vs_p,
    "error_decay": _plot_error_decay,
}


def plot_figure(spec: PlotSpec) -> str:
    """Render one figure; returns the written image path.

    Empty CSVs (header only) produce labeled empty axes.  Output bytes
    depend only on the input rows and the library versions.
    """
    fig, ax = _new_axes(spec)
    try:
        _RENDERERS[spec.kind](spec, ax)
        out_dir = os.path.dirname(spec.out)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        fig.savefig(spec.out, metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.out
