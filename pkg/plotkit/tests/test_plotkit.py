"""Schema validation, each renderer, CLI discovery, and the live pipeline."""

import json
import subprocess
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from plotkit.cli import discover_inputs, main
from plotkit.figures import FigureJob, render
from plotkit.io import (
    SchemaError,
    load_detuning,
    load_frames,
    load_scan,
    load_spectrum,
    read_table,
)

SCAN_HEADER = "# Gamma\tdp_numeric\tdp_analytic\tdp_point\tratio\tmodel_ratio\tfeasible"


def write_rows(path, header_lines, rows):
    text = "\n".join(header_lines + ["\t".join(f"{v:.12e}" for v in r) for r in rows])
    Path(path).write_text(text + "\n")
    return Path(path)


def write_spectrum(path, x, y, axis_name="p_offset_over_p_rec0"):
    return write_rows(
        path, [f"# {axis_name}\tdensity_times_p_rec0"], list(zip(x, y))
    )


def write_frame(path, t_rel, z, dz, p, dp):
    return write_rows(
        path,
        [
            f"# t_over_transit = {t_rel:.12e}",
            "# z_over_L_I\tdensity_times_L_I\tp_offset_over_p_rec0\tdensity_times_p_rec0",
        ],
        list(zip(z, dz, p, dp)),
    )


@pytest.fixture
def spectra_dir(tmp_path):
    x = np.linspace(-3.0, 3.0, 301)
    bump = np.exp(-(x**2) * 4.0)
    write_spectrum(tmp_path / "run_spectrum_numeric.tsv", x, bump)
    write_spectrum(tmp_path / "run_spectrum_total.tsv", x, 0.98 * bump)
    write_spectrum(tmp_path / "run_spectrum_ladder.tsv", x, 0.99 * bump)
    write_spectrum(tmp_path / "run_spectrum_rho1.tsv", x, 0.01 * x * bump)
    write_spectrum(tmp_path / "run_spectrum_rho0_plus_rho2.tsv", x, 0.97 * bump)
    return tmp_path


@pytest.fixture
def frames_dir(tmp_path):
    d = tmp_path / "run_frames"
    d.mkdir()
    z = np.linspace(-0.5, 1.5, 101)
    p = np.linspace(-3.0, 3.0, 101)
    for i in range(4):
        center = -0.2 + 0.4 * i
        write_frame(
            d / f"frame_{i:04d}.tsv", i / 3.0,
            z, np.exp(-((z - center) ** 2) * 40.0), p, np.exp(-(p**2) * 2.0),
        )
    return d


# ---------------------------------------------------------------------- io


def test_read_table_names_meta_data(tmp_path):
    path = write_rows(
        tmp_path / "t.tsv",
        ["# epsilon = 40", "# a\tb"],
        [(1.0, 2.0), (3.0, 4.0)],
    )
    names, meta, data = read_table(path)
    assert names == ["a", "b"]
    assert meta["epsilon"] == 40.0
    assert data.shape == (2, 2) and data[1, 1] == 4.0


def test_read_table_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.tsv"
    empty.write_text("# a\tb\n")
    with pytest.raises(SchemaError, match="empty table"):
        read_table(empty)
    ragged = tmp_path / "ragged.tsv"
    ragged.write_text("# a\tb\n1\t2\n1\t2\t3\n")
    with pytest.raises(SchemaError, match="ragged"):
        read_table(ragged)
    words = tmp_path / "words.tsv"
    words.write_text("# a\tb\n1\ttwo\n")
    with pytest.raises(SchemaError, match="non-numeric"):
        read_table(words)
    narrow = tmp_path / "narrow.tsv"
    narrow.write_text("# a\tb\tc\n1\t2\n")
    with pytest.raises(SchemaError, match="header names 3"):
        read_table(narrow)


def test_load_spectrum_schema(tmp_path):
    x = np.linspace(-1, 1, 5)
    path = write_spectrum(tmp_path / "s.tsv", x, x**2)
    axis, dens, name = load_spectrum(path)
    assert np.array_equal(axis, x) and name.startswith("p")
    four = write_rows(tmp_path / "f.tsv", ["# a\tb\tc\td"], [(1, 2, 3, 4)])
    with pytest.raises(SchemaError, match="2 columns"):
        load_spectrum(four)
    wrong = write_rows(tmp_path / "w.tsv", ["# who\twhat"], [(1, 2)])
    with pytest.raises(SchemaError, match="momentum axis"):
        load_spectrum(wrong)


def test_load_scan_columns(tmp_path):
    good = write_rows(
        tmp_path / "g.tsv", [SCAN_HEADER],
        [(0.2, 1.5, 1.5, 1.6, 0.98, 0.98, 1.0)],
    )
    cols = load_scan(good)
    assert cols["Gamma"][0] == 0.2 and cols["feasible"][0] == 1.0
    bad = write_rows(tmp_path / "b.tsv", ["# Gamma\tratio"], [(0.2, 0.9)])
    with pytest.raises(SchemaError, match="missing columns"):
        load_scan(bad)


def test_load_detuning(tmp_path):
    path = write_rows(
        tmp_path / "d.tsv",
        ["# epsilon = 0.01", "# theta_bar\tdp2\tdp2_classical"],
        [(-1.0, 0.1, 0.11), (1.0, -0.1, -0.11)],
    )
    cols = load_detuning(path)
    assert cols["epsilon"] == 0.01
    assert cols["dp2"][1] == -0.1


def test_load_frames_gap_detection(frames_dir):
    frames = load_frames(frames_dir)
    assert [f[0] for f in frames] == [0, 1, 2, 3]
    assert frames[1][1] == pytest.approx(1.0 / 3.0)
    (frames_dir / "frame_0002.tsv").unlink()
    with pytest.raises(SchemaError, match=r"gap.*\[2\]"):
        load_frames(frames_dir)


def test_load_frames_empty_dir(tmp_path):
    with pytest.raises(SchemaError, match="no frame"):
        load_frames(tmp_path)


# ------------------------------------------------------------------- jobs


def test_figure_job_validation():
    with pytest.raises(ValueError, match="figure_kind"):
        FigureJob(inputs=("x.tsv",), figure_kind="sculpture")
    with pytest.raises(ValueError, match="at least one"):
        FigureJob(inputs=(), figure_kind="gamma_scan")


def test_render_spectrum_compare(spectra_dir, tmp_path):
    job = FigureJob(
        inputs=(
            spectra_dir / "run_spectrum_numeric.tsv",
            spectra_dir / "run_spectrum_ladder.tsv",
        ),
        figure_kind="spectrum_compare",
        style={"labels": ["numeric", "model"], "title": "t"},
    )
    out = render(job, tmp_path / "fig.png")
    assert out.exists() and out.stat().st_size > 0


def test_render_single_spectrum(spectra_dir, tmp_path):
    job = FigureJob(
        inputs=(spectra_dir / "run_spectrum_numeric.tsv",),
        figure_kind="spectrum_compare",
    )
    assert render(job, tmp_path / "one.png").exists()


def test_mismatched_axes_name_both_files(spectra_dir, tmp_path):
    other = write_spectrum(
        tmp_path / "other.tsv", np.linspace(-2, 2, 301), np.zeros(301)
    )
    job = FigureJob(
        inputs=(spectra_dir / "run_spectrum_numeric.tsv", other),
        figure_kind="spectrum_compare",
    )
    with pytest.raises(SchemaError, match="run_spectrum_numeric.*other"):
        render(job, tmp_path / "no.png")


def test_render_decomposition_inset(spectra_dir, tmp_path):
    job = FigureJob(
        inputs=(
            spectra_dir / "run_spectrum_numeric.tsv",
            spectra_dir / "run_spectrum_total.tsv",
            spectra_dir / "run_spectrum_rho1.tsv",
            spectra_dir / "run_spectrum_rho0_plus_rho2.tsv",
        ),
        figure_kind="decomposition_inset",
    )
    assert render(job, tmp_path / "inset.png").exists()


def test_render_gamma_scan_with_infeasible_rows(tmp_path):
    nan = float("nan")
    table = write_rows(
        tmp_path / "x_scan.tsv", [SCAN_HEADER],
        [
            (0.2, nan, nan, nan, nan, 0.9802, 0.0),
            (1.0, 0.97, 0.97, 1.6, 0.6065, 0.6065, 1.0),
            (2.0, 0.22, 0.22, 1.6, 0.1353, 0.1353, 1.0),
        ],
    )
    job = FigureJob(inputs=(table,), figure_kind="gamma_scan")
    assert render(job, tmp_path / "scan.png").exists()


def test_render_phase_space(frames_dir, tmp_path):
    job = FigureJob(inputs=(frames_dir,), figure_kind="phase_space")
    assert render(job, tmp_path / "map.png").exists()


def test_render_animation_frame_count(frames_dir, tmp_path):
    job = FigureJob(inputs=(frames_dir,), figure_kind="animation")
    out = render(job, tmp_path / "anim")
    pngs = sorted(out.glob("frame_*.png"))
    assert len(pngs) == len(list(frames_dir.glob("frame_*.tsv")))


def test_render_animation_single_frame(tmp_path):
    d = tmp_path / "one_frames"
    d.mkdir()
    z = np.linspace(-0.5, 1.5, 51)
    write_frame(d / "frame_0000.tsv", 0.0, z, np.exp(-(z**2)), z, np.exp(-(z**2)))
    out = render(FigureJob(inputs=(d,), figure_kind="animation"), tmp_path / "a")
    assert len(list(out.glob("frame_*.png"))) == 1


# -------------------------------------------------------------------- CLI


def test_cli_discovery_and_exit_codes(spectra_dir, frames_dir, tmp_path):
    picked = discover_inputs(spectra_dir, "spectrum_compare")
    assert [Path(p).name for p in picked] == [
        "run_spectrum_numeric.tsv", "run_spectrum_ladder.tsv"
    ]
    assert main([
        "--in", str(spectra_dir), "--kind", "spectrum_compare",
        "--out", str(tmp_path / "a.png"),
    ]) == 0
    assert (tmp_path / "a.png").exists()
    assert main([
        "--in", str(frames_dir.parent), "--kind", "animation",
        "--out", str(tmp_path / "anim"),
    ]) == 0
    assert main([
        "--in", str(tmp_path / "void"), "--kind", "gamma_scan",
        "--out", str(tmp_path / "no.png"),
    ]) == 2


# ------------------------------------------------- live pipeline (end-to-end)


ewave = pytest.importorskip("ewave", reason="simulation package not installed")


@pytest.fixture(scope="module")
def live_outputs(tmp_path_factory):
    """Run the simulation CLI on small configs; plotkit sees only the files."""
    tmp = tmp_path_factory.mktemp("live")

    def run(name, body):
        cfg = tmp / f"{name}.yaml"
        cfg.write_text(textwrap.dedent(body))
        out = tmp / name
        proc = subprocess.run(
            [sys.executable, "-m", "ewave.cli", "run",
             "--config", str(cfg), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return out

    pinem = run("pinem", """
        scenario:
          name: pin
          kind: pinem
          beam: {gamma0: 1.4}
          drive: {beta0_lambda: "2 um", interaction_length: "8 um", upsilon: 0.2}
          source: {gamma_size: 3.0}
        numerics: {n: 2048, snapshot_every: 4}
        emit: [spectra, snapshots, params]
    """)
    accel = run("accel", """
        scenario:
          name: acc
          kind: phase_accel
          beam: {gamma0: 1.4}
          drive: {beta0_lambda: "2 um", interaction_length: "8 um", upsilon: 0.2}
          source: {gamma_size: 0.6}
        numerics: {n: 2048, snapshot_every: 4}
        emit: [spectra, snapshots, params]
    """)
    scan = run("scan", """
        scenario:
          name: sc
          kind: gamma_scan
          beam: {gamma0: 1.4}
          drive: {beta0_lambda: "2 um", interaction_length: "8 um", upsilon: 0.8}
          source: {}
          sweep: {name: Gamma, values: [0.2, 1.4, 3.0]}
        numerics: {n: 2048}
        emit: [scan_table, params]
    """)
    return {"pinem": pinem, "accel": accel, "scan": scan}


def test_live_all_figure_kinds(live_outputs, tmp_path):
    for in_dir, kind in (
        (live_outputs["pinem"], "spectrum_compare"),
        (live_outputs["accel"], "decomposition_inset"),
        (live_outputs["scan"], "gamma_scan"),
        (live_outputs["accel"], "phase_space"),
    ):
        out = tmp_path / f"{kind}.png"
        assert main(["--in", str(in_dir), "--kind", kind, "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 0


def test_live_animation_matches_snapshot_count(live_outputs, tmp_path):
    out = tmp_path / "anim"
    assert main([
        "--in", str(live_outputs["pinem"]), "--kind", "animation",
        "--out", str(out),
    ]) == 0
    manifest = json.loads((live_outputs["pinem"] / "manifest.json").read_text())
    n_snapshots = sum(1 for row in manifest["files"] if row["role"] == "frame")
    assert len(list(out.glob("frame_*.png"))) == n_snapshots >= 4
