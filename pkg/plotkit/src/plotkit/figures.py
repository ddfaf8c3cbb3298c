"""Figure renderers: overlay spectra, scan curves, phase-space maps, frames.

Each renderer takes a :class:`FigureJob` naming its input files and writes
one image (or one directory of numbered frame images).  Inputs are validated
before any axes are created; axis mismatches and missing columns are hard
errors naming the files involved.
"""

from __future__ import annotations

import os.path
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, load_frames, load_scan, load_spectrum

FIGURE_KINDS = (
    "spectrum_compare",
    "decomposition_inset",
    "gamma_scan",
    "phase_space",
    "animation",
)

_RECOIL_AXIS = "momentum offset  (hbar*omega/v0 units)"


@dataclass(frozen=True)
class FigureJob:
    """One rendering task.

    ``inputs`` are result files (a frames directory for the animation and
    phase-space kinds); ``style`` may carry ``labels`` (one per input),
    ``title``, ``xlim``, ``ylim``, and ``dpi``.
    """

    inputs: tuple
    figure_kind: str
    style: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"figure_kind must be one of {FIGURE_KINDS}, got {self.figure_kind!r}"
            )
        if not self.inputs:
            raise ValueError("job needs at least one input file")

    def label(self, i: int) -> str:
        labels = self.style.get("labels")
        if labels and i < len(labels):
            return labels[i]
        return Path(self.inputs[i]).stem.replace("_", " ")


def _apply_style(ax, job: FigureJob) -> None:
    if "title" in job.style:
        ax.set_title(job.style["title"])
    if "xlim" in job.style:
        ax.set_xlim(job.style["xlim"])
    if "ylim" in job.style:
        ax.set_ylim(job.style["ylim"])


def _save(fig, out_path, job: FigureJob) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=job.style.get("dpi", 150), bbox_inches="tight")
    plt.close(fig)
    return out_path


def _load_shared_axis_spectra(job: FigureJob) -> list:
    spectra = [load_spectrum(p) for p in job.inputs]
    axis0 = spectra[0][0]
    for path, (axis, _, _) in zip(job.inputs[1:], spectra[1:]):
        if axis.shape != axis0.shape or not np.allclose(axis, axis0, rtol=1e-9):
            raise SchemaError(
                f"momentum axes differ between {job.inputs[0]} and {path}"
            )
    return spectra


def _support_xlim(spectra, pad=0.15, floor=1e-6):
    """Axis range covering where any curve is non-negligible.

    Momentum grids are sized for the numerics, not the physics, so by
    default zoom to the union support (density above ``floor`` of the global
    peak), padded; an explicit ``xlim`` in the job style overrides this.
    """
    axis = spectra[0][0]
    stacked = np.abs(np.vstack([dens for _, dens, _ in spectra]))
    peak = stacked.max()
    if peak <= 0.0:
        return axis[0], axis[-1]
    alive = np.nonzero(stacked.max(axis=0) > floor * peak)[0]
    lo, hi = axis[alive[0]], axis[alive[-1]]
    margin = pad * (hi - lo) or 0.05 * (axis[-1] - axis[0])
    return max(axis[0], lo - margin), min(axis[-1], hi + margin)


def render_spectrum_compare(job: FigureJob, out_path) -> Path:
    """Overlay spectra sharing one momentum axis (numeric vs analytic)."""
    spectra = _load_shared_axis_spectra(job)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for i, (axis, dens, _) in enumerate(spectra):
        ls = "-" if i == 0 else "--"
        ax.plot(axis, dens, ls, lw=1.4, label=job.label(i))
    ax.set_xlim(*_support_xlim(spectra))
    ax.set_xlabel(_RECOIL_AXIS)
    ax.set_ylabel("momentum density")
    ax.legend(frameon=False)
    _apply_style(ax, job)
    return _save(fig, out_path, job)


def render_decomposition_inset(job: FigureJob, out_path) -> Path:
    """Spectra overlay with the redistribution pieces in an inset.

    The first two inputs fill the main panel; any further inputs (the
    first- and second-order pieces) go to the inset on the same axis.
    """
    spectra = _load_shared_axis_spectra(job)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xlim = _support_xlim(spectra)
    for i, (axis, dens, _) in enumerate(spectra[:2]):
        ls = "-" if i == 0 else "--"
        ax.plot(axis, dens, ls, lw=1.4, label=job.label(i))
    ax.set_xlim(*xlim)
    ax.set_xlabel(_RECOIL_AXIS)
    ax.set_ylabel("momentum density")
    ax.legend(frameon=False, loc="upper left")
    if len(spectra) > 2:
        inset = ax.inset_axes([0.62, 0.52, 0.36, 0.42])
        labels = [job.label(i) for i in range(2, len(spectra))]
        words = os.path.commonprefix([lab.split() for lab in labels])
        for (axis, dens, _), label in zip(spectra[2:], labels):
            short = " ".join(label.split()[len(words):])
            inset.plot(axis, dens, lw=1.0, label=short or label)
        inset.axhline(0.0, color="0.7", lw=0.6)
        inset.set_xlim(*xlim)
        inset.legend(frameon=False, fontsize=7)
        inset.tick_params(labelsize=7)
    _apply_style(ax, job)
    return _save(fig, out_path, job)


def render_gamma_scan(job: FigureJob, out_path) -> Path:
    """Shift-ratio scatter vs size parameter with the model-curve overlay.

    Feasible rows are filled markers, infeasible rows open markers placed on
    the model curve (their only finite column); the RMS of ratio-model over
    feasible rows is annotated.
    """
    cols = load_scan(job.inputs[0])
    feasible = cols["feasible"] > 0.5
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(cols["Gamma"], cols["model_ratio"], "-", color="crimson", lw=1.4,
            label="exp(-Gamma^2/2)")
    ax.plot(cols["Gamma"][feasible], cols["ratio"][feasible], "o",
            color="royalblue", ms=5, label=job.label(0))
    if np.any(~feasible):
        ax.plot(cols["Gamma"][~feasible], cols["model_ratio"][~feasible], "o",
                mfc="none", mec="royalblue", ms=5, label="infeasible")
    if np.any(feasible):
        rms = float(np.sqrt(np.mean(
            (cols["ratio"][feasible] - cols["model_ratio"][feasible]) ** 2
        )))
        ax.annotate(f"RMS = {rms:.2e}", xy=(0.97, 0.80),
                    xycoords="axes fraction", ha="right", fontsize=9)
    ax.set_xlabel("size parameter Gamma")
    ax.set_ylabel("dp_numeric / dp_point")
    ax.legend(frameon=False)
    _apply_style(ax, job)
    return _save(fig, out_path, job)


def _frame_matrix(frames, col_axis: int, col_dens: int):
    """Stack one density column over time on a common axis.

    Spatial axes are lab-frame and advance with the packet, so frames are
    resampled onto one axis spanning their union (zero-filled outside each
    frame's own range); a momentum axis is shared already and passes through
    unchanged.
    """
    starts = [f[3][0, col_axis] for f in frames]
    stops = [f[3][-1, col_axis] for f in frames]
    axis = np.linspace(min(starts), max(stops), frames[0][3].shape[0])
    dens = np.vstack([
        np.interp(axis, f[3][:, col_axis], f[3][:, col_dens], left=0.0, right=0.0)
        for f in frames
    ])
    times = np.array([
        f[1] if f[1] is not None else float(i) for i, f in enumerate(frames)
    ])
    return axis, times, dens


def render_phase_space(job: FigureJob, out_path) -> Path:
    """Time-resolved density maps from a frame sequence.

    Left: spatial density vs time (window in window-length units); right:
    momentum density vs time (recoil units).
    """
    frames = load_frames(job.inputs[0])
    fig, (ax_z, ax_p) = plt.subplots(1, 2, figsize=(9.6, 4.2), sharey=True)
    for ax, (c_ax, c_d), xlabel in (
        (ax_z, (0, 1), "z / L_I"),
        (ax_p, (2, 3), _RECOIL_AXIS),
    ):
        axis, times, dens = _frame_matrix(frames, c_ax, c_d)
        ax.imshow(
            dens, origin="lower", aspect="auto", cmap="magma",
            extent=(axis[0], axis[-1], times[0], times[-1]),
        )
        ax.set_xlim(*_support_xlim([(axis, row, "") for row in dens]))
        ax.set_xlabel(xlabel)
    ax_z.set_ylabel("t / transit time")
    if "title" in job.style:
        fig.suptitle(job.style["title"])
    return _save(fig, out_path, job)


def render_animation(job: FigureJob, out_dir) -> Path:
    """Two-panel frame images (spatial density + window | momentum density).

    Writes ``frame_NNNN.png`` per snapshot into ``out_dir`` — exactly one
    image per input frame — and assembles ``animation.mp4`` afterwards only
    when an ffmpeg encoder is on PATH (the frames are the deliverable).
    """
    frames = load_frames(job.inputs[0])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    z_axis, _, z_all = _frame_matrix(frames, 0, 1)
    p_axis, _, p_all = _frame_matrix(frames, 2, 3)
    z_top, p_top = 1.05 * z_all.max(), 1.05 * p_all.max()
    p_lo, p_hi = _support_xlim([(p_axis, row, "") for row in p_all])
    names = frames[0][2]
    shade_window = bool(names) and names[0] == "z_over_L_I"
    for idx, t_rel, _, data in frames:
        fig, (ax_z, ax_p) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        if shade_window:
            ax_z.axvspan(0.0, 1.0, color="gold", alpha=0.25, lw=0)
        ax_z.plot(data[:, 0], data[:, 1], color="navy", lw=1.2)
        ax_z.set_xlim(min(z_axis[0], 0.0), max(z_axis[-1], 1.0))
        ax_z.set_ylim(0.0, z_top)
        ax_z.set_xlabel("z / L_I")
        ax_z.set_ylabel("spatial density")
        ax_p.plot(data[:, 2], data[:, 3], color="firebrick", lw=1.2)
        ax_p.set_xlim(p_lo, p_hi)
        ax_p.set_ylim(0.0, p_top)
        ax_p.set_xlabel(_RECOIL_AXIS)
        ax_p.set_ylabel("momentum density")
        if t_rel is not None:
            fig.suptitle(f"t / transit = {t_rel:+.3f}")
        fig.savefig(out_dir / f"frame_{idx:04d}.png",
                    dpi=job.style.get("dpi", 110))
        plt.close(fig)
    encoder = shutil.which("ffmpeg")
    if encoder:
        cmd = [
            encoder, "-y", "-loglevel", "error", "-framerate", "12",
            "-i", str(out_dir / "frame_%04d.png"),
            "-pix_fmt", "yuv420p", str(out_dir / "animation.mp4"),
        ]
        try:
            subprocess.run(cmd, check=True, capture_output=True)
        except (OSError, subprocess.CalledProcessError) as err:
            print(f"frame assembly skipped: {err}", file=sys.stderr)
    return out_dir


_RENDERERS = {
    "spectrum_compare": render_spectrum_compare,
    "decomposition_inset": render_decomposition_inset,
    "gamma_scan": render_gamma_scan,
    "phase_space": render_phase_space,
    "animation": render_animation,
}


def render(job: FigureJob, out_path) -> Path:
    """Dispatch a job to its renderer; returns the written path."""
    return _RENDERERS[job.figure_kind](job, out_path)
