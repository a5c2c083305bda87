"""Figure rendering from experiment CSV outputs.

Consumes only the documented file formats: profile CSVs with columns
``x,<quantity...>,ref_<quantity...>``, mesh-history CSVs with columns
``step,x0..xN``, and loss CSVs with columns ``epoch,train_mae,val_mae``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("profile", "profile_zoom", "mesh_history", "loss_curves", "mesh_compare")

# Deterministic output: fixed style, fixed SVG hash salt, no timestamps.
plt.rcParams.update({
    "svg.hashsalt": "zoneplots",
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
})

_SERIES_STYLE = {
    "reference": dict(color="black", lw=1.2, ls="--"),
    "exact": dict(color="black", lw=1.2, ls="--"),
    "uniform": dict(color="tab:blue", lw=1.0),
    "mmpde_elliptic": dict(color="tab:orange", lw=1.0),
    "mmpde_parabolic": dict(color="tab:orange", lw=1.0, ls="-."),
    "dl_surrogate": dict(color="tab:green", lw=1.0),
}


class RenderError(ValueError):
    pass


@dataclass
class FigureSpec:
    """One figure request: what kind, which input files, where to write."""

    kind: str
    inputs: list
    output: str
    zoom: tuple | None = None
    quantity: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise RenderError("at least one input file is required")
        missing = [str(p) for p in self.inputs if not Path(p).exists()]
        if missing:
            raise RenderError(f"missing input files: {', '.join(missing)}")
        if self.zoom is not None:
            lo, hi = self.zoom
            if not lo < hi:
                raise RenderError(f"zoom range must satisfy lo < hi, got {self.zoom}")


def _read_csv_columns(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    columns = {}
    for j, name in enumerate(header):
        values = []
        for row in rows:
            cell = row[j]
            values.append(float(cell) if cell != "" else float("nan"))
        columns[name] = values
    return columns


def _series_label(path) -> str:
    stem = Path(path).stem.replace(".profile", "").replace(".mesh_history", "")
    for key in _SERIES_STYLE:
        if stem.endswith(key):
            return key
    return stem


def _style_for(label: str) -> dict:
    return _SERIES_STYLE.get(label, {"lw": 1.0})


def _save(fig, path) -> None:
    # SVG output embeds a creation date unless suppressed; determinism needs
    # byte-identical files for identical inputs.
    if str(path).endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)


def render_profiles(spec: FigureSpec) -> str:
    """Overlay final profiles from up to four runs, optional zoom panel.

    The reference column of the first file supplying one is drawn as the
    reference series; inputs lacking the requested quantity are skipped with
    a warning annotation on the figure.
    """
    panels = 2 if (spec.kind == "profile_zoom" or spec.zoom) else 1
    fig, axes = plt.subplots(1, panels, figsize=(6 * panels, 4))
    axes = [axes] if panels == 1 else list(axes)

    warnings = []
    reference_drawn = False
    quantity = spec.quantity
    for path in spec.inputs:
        cols = _read_csv_columns(path)
        if "x" not in cols:
            warnings.append(f"{Path(path).name}: no x column")
            continue
        if quantity is None:
            quantity = next(
                (c for c in cols if c != "x" and not c.startswith("ref_")), None
            )
        if quantity is None or quantity not in cols:
            warnings.append(f"{Path(path).name}: missing series")
            continue
        label = _series_label(path)
        for ax in axes:
            ax.plot(cols["x"], cols[quantity], label=label, **_style_for(label))
        ref_col = f"ref_{quantity}"
        if not reference_drawn and ref_col in cols:
            for ax in axes:
                ax.plot(cols["x"], cols[ref_col], label="reference",
                        **_style_for("reference"))
            reference_drawn = True

    for ax in axes:
        ax.set_xlabel("x")
        ax.set_ylabel(quantity or "value")
        ax.legend(fontsize=8)
    if spec.zoom and panels == 2:
        axes[1].set_xlim(*spec.zoom)
        axes[1].set_title(f"zoom [{spec.zoom[0]}, {spec.zoom[1]}]", fontsize=9)
    if warnings:
        fig.text(0.01, 0.01, "; ".join(warnings), fontsize=7, color="crimson")
    fig.tight_layout()
    _save(fig, spec.output)
    plt.close(fig)
    return spec.output


def _read_mesh_history(path):
    cols = _read_csv_columns(path)
    if "step" not in cols:
        raise RenderError(f"{path}: not a mesh-history CSV (no step column)")
    names = [c for c in cols if c.startswith("x")]
    names.sort(key=lambda s: int(s[1:]))
    return cols["step"], [cols[n] for n in names]


def render_mesh_history(spec: FigureSpec) -> str:
    """Node trajectories against step index, one panel per input file."""
    fig, axes = plt.subplots(1, len(spec.inputs),
                             figsize=(5.5 * len(spec.inputs), 4), squeeze=False)
    for ax, path in zip(axes[0], spec.inputs):
        steps, trajectories = _read_mesh_history(path)
        for traj in trajectories:
            ax.plot(traj, steps, color="tab:blue", lw=0.3)
        ax.set_xlabel("x")
        ax.set_ylabel("step")
        ax.set_title(_series_label(path), fontsize=9)
    fig.tight_layout()
    _save(fig, spec.output)
    plt.close(fig)
    return spec.output


def render_mesh_compare(spec: FigureSpec) -> str:
    """Final meshes of several runs as node rakes, one row per run."""
    fig, ax = plt.subplots(figsize=(7, 1.0 + 0.6 * len(spec.inputs)))
    labels = []
    for k, path in enumerate(spec.inputs):
        _, trajectories = _read_mesh_history(path)
        final = [traj[-1] for traj in trajectories]
        ax.plot(final, [k] * len(final), "|", markersize=10, color="tab:blue")
        labels.append(_series_label(path))
    ax.set_yticks(range(len(labels)), labels, fontsize=8)
    ax.set_ylim(-0.5, len(labels) - 0.5)
    ax.set_xlabel("x")
    fig.tight_layout()
    _save(fig, spec.output)
    plt.close(fig)
    return spec.output


def render_loss_curves(spec: FigureSpec) -> str:
    """Log-scale MAE against epoch; panels side by side for several files."""
    n = len(spec.inputs)
    fig, axes = plt.subplots(1, n, figsize=(5 * n, 3.6), squeeze=False)
    for ax, path in zip(axes[0], spec.inputs):
        cols = _read_csv_columns(path)
        if "epoch" not in cols or "train_mae" not in cols:
            raise RenderError(f"{path}: not a loss CSV")
        ax.semilogy(cols["epoch"], cols["train_mae"], label="train", color="tab:blue")
        val = cols.get("val_mae", [])
        if val and not all(v != v for v in val):  # any non-NaN
            ax.semilogy(cols["epoch"], val, label="validation", color="tab:orange")
        else:
            ax.text(0.5, 0.9, "no validation data", transform=ax.transAxes,
                    ha="center", fontsize=8, color="crimson")
        ax.set_xlabel("epoch")
        ax.set_ylabel("MAE")
        ax.set_title(Path(path).stem, fontsize=9)
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.output)
    plt.close(fig)
    return spec.output


RENDERERS = {
    "profile": render_profiles,
    "profile_zoom": render_profiles,
    "mesh_history": render_mesh_history,
    "mesh_compare": render_mesh_compare,
    "loss_curves": render_loss_curves,
}


def render(spec: FigureSpec) -> str:
    return RENDERERS[spec.kind](spec)
