"""Command-line entry point: resolve a config, run scenarios, write artifacts.

Subcommands: ``derive`` (parameter report only), ``run`` (execute and write
files), ``scan`` (run, requiring a swept scenario; honors --threads), and
``list-presets``.  ``--config`` accepts a YAML path or the name of a shipped
preset.  Exit codes: 0 success, 2 configuration error, 3 physical-regime
error, 4 numerical-invariant or cross-check failure, 1 anything else.

All momentum columns are written in recoil units (offsets over hbar*omega/v0,
densities times the same quantum) unless ``--si-units`` selects absolute SI
columns.  Outputs are deterministic: identical configs give identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    SCHEMA_VERSION,
    ConfigError,
    ResultManifest,
    RunConfig,
    list_presets,
    load_config,
    preset_path,
)
from .constants import NATURAL, SCALES
from .params import beam_from_gamma, critical_drift_length, cutoff_wavelength, interaction_params
from .scenarios import (
    ScenarioError,
    ScenarioSpec,
    resolve_drive,
    resolve_source,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_NUMERIC = 4

_FLOAT_FMT = "%.12e"


# ------------------------------------------------------------------ writers


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _table_text(header: list, columns: list, comments: list = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append("# " + "\t".join(header))
    n = len(columns[0])
    for i in range(n):
        cells = []
        for col in columns:
            v = col[i]
            cells.append(str(v) if isinstance(v, (int, np.integer)) else _FLOAT_FMT % v)
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _spectrum_text(offsets, density, pr: float, p0: float, si: bool) -> str:
    if si:
        axis = (p0 + offsets) * SCALES.momentum
        dens = density / SCALES.momentum
        header = ["p_kg_m_per_s", "density_per_kg_m_per_s"]
    else:
        axis = offsets / pr
        dens = density * pr
        header = ["p_offset_over_p_rec0", "density_times_p_rec0"]
    return _table_text(header, [axis, dens])


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class _Artifacts:
    """Collects (role, path, checksum) triples under one output directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files = []

    def add(self, role: str, rel: str, text: str) -> None:
        path = self.out_dir / rel
        _write(path, text)
        self.files.append((role, rel, _sha256(path)))


# ------------------------------------------------------- parameter reports


def _params_payload(spec: ScenarioSpec) -> dict:
    beam = beam_from_gamma(spec.gamma0)
    k = beam.constants
    lam = 2.0 * math.pi / spec.omega
    z_g = critical_drift_length(beam, lam)
    payload = {
        "scenario": {"name": spec.name, "kind": spec.kind},
        "beam": {
            "gamma0": beam.gamma0,
            "beta0": beam.beta0,
            "v0": beam.v0,
            "p0": beam.p0,
            "m_star": beam.m_star,
        },
        "drive": {
            "omega": spec.omega,
            "wavelength_m": lam * SCALES.length,
            "upsilon": spec.upsilon,
            "phi0": spec.phi0,
            "theta_bar": spec.theta_bar,
            "interaction_length_m": (
                None if spec.interaction_length is None
                else spec.interaction_length * SCALES.length
            ),
        },
        "derived": {
            "p_rec0": k.hbar * spec.omega / beam.v0,
            "critical_drift_length_m": z_g * SCALES.length,
            "cutoff_wavelength_m": cutoff_wavelength(beam) * SCALES.length,
            "gamma_min": spec.gamma_min(beam),
            "size_mode": spec.size_mode,
        },
    }
    if spec.kind == "gamma_scan":
        rows = []
        for g in spec.sweep.values:
            src = resolve_source(spec, beam, g)
            rows.append(
                {
                    "Gamma": g,
                    "feasible": src is not None,
                    "sigma_z0_m": None if src is None else src.sigma_z0 * SCALES.length,
                    "sigma_z_tD_m": None if src is None else src.sigma_z_tD * SCALES.length,
                    "t_D_s": None if src is None else src.t_D * SCALES.time,
                }
            )
        payload["sweep"] = {"name": "Gamma", "rows": rows}
    elif spec.kind == "fel_detuning":
        rows = []
        for eps in spec.epsilons:
            length = eps * 2.0 * beam.m_star * beam.v0**3 / (k.hbar * spec.omega**2)
            rows.append({"epsilon": eps, "interaction_length_m": length * SCALES.length})
        payload["epsilon_table"] = rows
        src = resolve_source(spec, beam, spec.gamma_size)
        payload["source"] = {"Gamma": spec.gamma_size, "sigma_z_tD_m": src.sigma_z_tD * SCALES.length}
    else:
        src = resolve_source(spec, beam, spec.gamma_size)
        if src is None:
            raise ValueError("gamma_size below the size_mode's feasibility bound")
        drive = resolve_drive(spec, beam, spec.interaction_length)
        pars = interaction_params(beam, drive, src)
        payload["source"] = {
            "sigma_z0_m": src.sigma_z0 * SCALES.length,
            "sigma_z_tD_m": src.sigma_z_tD * SCALES.length,
            "t_D_s": src.t_D * SCALES.time,
            "t_R_par_s": src.t_R_par * SCALES.time,
            "sigma_p0": src.sigma_p0,
        }
        payload["interaction"] = {
            "upsilon": pars.upsilon,
            "theta_bar": pars.theta_bar,
            "delta_small": pars.delta_small,
            "epsilon": pars.epsilon,
            "theta_e": pars.theta_e,
            "theta_a": pars.theta_a,
            "p_rec_e": pars.p_rec_e,
            "p_rec_a": pars.p_rec_a,
            "p_rec0": pars.p_rec0,
            "Gamma": pars.Gamma,
        }
    return payload


def _print_params(payload: dict) -> None:
    beam, drv = payload["beam"], payload["drive"]
    print(f"scenario {payload['scenario']['name']} ({payload['scenario']['kind']})")
    print(f"  beam: gamma0={beam['gamma0']:g} beta0={beam['beta0']:.6f} p0={beam['p0']:.6f}")
    print(
        f"  drive: lambda={drv['wavelength_m']:.4e} m upsilon={drv['upsilon']:g} "
        f"phi0={drv['phi0']:g} theta_bar={drv['theta_bar']:g}"
    )
    der = payload["derived"]
    print(
        f"  derived: p_rec0={der['p_rec0']:.6e} z_G={der['critical_drift_length_m']:.4e} m "
        f"lambda_cutoff={der['cutoff_wavelength_m']:.4e} m gamma_min={der['gamma_min']:.4f}"
    )
    if "interaction" in payload:
        ip = payload["interaction"]
        print(f"  interaction: Gamma={ip['Gamma']:.4f} epsilon={ip['epsilon']:.4e}")
    if "sweep" in payload:
        print("  Gamma    feasible  sigma_z(t_D) [m]")
        for row in payload["sweep"]["rows"]:
            size = "-" if row["sigma_z_tD_m"] is None else f"{row['sigma_z_tD_m']:.4e}"
            print(f"  {row['Gamma']:<8.4f} {str(row['feasible']):<9} {size}")
    if "epsilon_table" in payload:
        for row in payload["epsilon_table"]:
            print(f"  epsilon={row['epsilon']:g}: L_I={row['interaction_length_m']:.4e} m")


# ---------------------------------------------------------- run artifacts


def _emit_single_run(spec, result, art: _Artifacts, emit, si: bool) -> dict:
    """Write spectra/snapshots for pinem and phase_accel; return summary."""
    report = result.report
    beam = beam_from_gamma(spec.gamma0)
    pr = report.p_rec0
    offs = report.momentum_offsets
    dens_num = report.snapshots[-1][1]
    spectrum = result.spectrum
    summary = {"dp_numeric_over_p_rec0": report.dp_numeric / pr,
               "norm_drift": report.norm_drift, "n_steps": report.n_steps}
    if "spectra" in emit:
        art.add("spectrum_numeric", f"{spec.name}_spectrum_numeric.tsv",
                _spectrum_text(offs, dens_num, pr, beam.p0, si))
        art.add("spectrum_total", f"{spec.name}_spectrum_total.tsv",
                _spectrum_text(offs, spectrum.total, pr, beam.p0, si))
        art.add("spectrum_rho0_plus_rho2", f"{spec.name}_spectrum_rho0_plus_rho2.tsv",
                _spectrum_text(offs, spectrum.rho0 + spectrum.rho2, pr, beam.p0, si))
        if spec.kind == "pinem":
            art.add("spectrum_ladder", f"{spec.name}_spectrum_ladder.tsv",
                    _spectrum_text(offs, result.ladder, pr, beam.p0, si))
        else:
            art.add("spectrum_rho1", f"{spec.name}_spectrum_rho1.tsv",
                    _spectrum_text(offs, spectrum.rho1, pr, beam.p0, si))
    if "snapshots" in emit:
        length = spec.interaction_length
        for idx, (t, dens_p, dens_z) in enumerate(report.snapshots):
            z_lab = report.z + report.frame_velocity * t
            if si:
                cols = [z_lab * SCALES.length, dens_z / SCALES.length,
                        (beam.p0 + offs) * SCALES.momentum, dens_p / SCALES.momentum]
                header = ["z_m", "density_per_m", "p_kg_m_per_s", "density_per_kg_m_per_s"]
            else:
                cols = [z_lab / length, dens_z * length, offs / pr, dens_p * pr]
                header = ["z_over_L_I", "density_times_L_I",
                          "p_offset_over_p_rec0", "density_times_p_rec0"]
            art.add(
                "frame", f"{spec.name}_frames/frame_{idx:04d}.tsv",
                _table_text(header, cols, comments=[
                    f"t_over_transit = {_FLOAT_FMT % (t * beam.v0 / length)}",
                    f"window = [0, L_I], L_I = {_FLOAT_FMT % (length * SCALES.length)} m",
                ]),
            )
        summary["frames"] = len(report.snapshots)
    if spec.kind == "pinem":
        summary["weights_numeric"] = {str(k): v for k, v in sorted(result.weights_numeric.items())}
        summary["weights_ladder"] = {str(k): v for k, v in sorted(result.weights_analytic.items())}
    else:
        summary["dp_analytic_over_p_rec0"] = result.dp_analytic / pr
        summary["dp_point_over_p_rec0"] = result.dp_point / pr
        summary["ratio_to_point"] = result.dp_numeric / result.dp_point
    return summary


def _emit_scan(spec, rows, art: _Artifacts, emit, si: bool) -> dict:
    beam = beam_from_gamma(spec.gamma0)
    pr = NATURAL.hbar * spec.omega / beam.v0
    scale = SCALES.momentum if si else 1.0 / pr
    if "scan_table" in emit:
        cols = [
            np.array([r.sweep_value for r in rows]),
            np.array([r.dp_numeric * scale for r in rows]),
            np.array([r.dp_analytic * scale for r in rows]),
            np.array([r.dp_point * scale for r in rows]),
            np.array([r.ratio for r in rows]),
            np.array([r.model_ratio for r in rows]),
            [int(r.feasible) for r in rows],
        ]
        unit = "kg_m_per_s" if si else "p_rec0_units"
        art.add(
            "scan_table", f"{spec.name}_scan.tsv",
            _table_text(
                [spec.sweep.name, "dp_numeric", "dp_analytic", "dp_point",
                 "ratio", "model_ratio", "feasible"],
                cols,
                comments=[f"momenta in {unit}"],
            ),
        )
    feas = [r for r in rows if r.feasible]
    rms = (
        math.sqrt(sum((r.ratio - r.model_ratio) ** 2 for r in feas) / len(feas))
        if feas else float("nan")
    )
    return {"rows": len(rows), "feasible": len(feas), "rms_vs_model": rms}


def _emit_detuning(spec, tables, art: _Artifacts, emit, si: bool) -> dict:
    beam = beam_from_gamma(spec.gamma0)
    pr = NATURAL.hbar * spec.omega / beam.v0
    scale = SCALES.momentum if si else 1.0 / pr
    unit = "kg_m_per_s" if si else "p_rec0_units"
    summary = {"tables": len(tables)}
    for table in tables:
        tag = f"{table.epsilon:g}".replace(".", "p")
        if "detuning_table" in emit:
            art.add(
                "detuning_table", f"{spec.name}_eps{tag}_detuning.tsv",
                _table_text(
                    ["theta_bar", "dp2", "dp2_classical"],
                    [table.theta_bar, table.dp_second_order * scale,
                     table.dp_classical * scale],
                    comments=[f"epsilon = {table.epsilon:g}; momenta in {unit}"],
                ),
            )
        i = int(np.argmax(table.dp_second_order))
        summary[f"eps_{table.epsilon:g}"] = {
            "peak_theta_bar": float(table.theta_bar[i]),
            "peak_dp2_over_p_rec0": float(table.dp_second_order[i] / pr),
        }
    return summary


def _execute(cfg: RunConfig, out_dir: Path, threads, si: bool) -> ResultManifest:
    art = _Artifacts(out_dir)
    for spec in cfg.specs:
        result = run_scenario(spec, workers=threads)
        if spec.kind in ("pinem", "phase_accel"):
            summary = _emit_single_run(spec, result, art, cfg.emit, si)
        elif spec.kind == "gamma_scan":
            summary = _emit_scan(spec, result, art, cfg.emit, si)
        else:
            summary = _emit_detuning(spec, result, art, cfg.emit, si)
        if "params" in cfg.emit:
            art.add("params", f"{spec.name}_params.json", _json_text(_params_payload(spec)))
        art.add("report", f"{spec.name}_report.json", _json_text(summary))
        print(f"{spec.name}: " + ", ".join(
            f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in summary.items() if not isinstance(v, dict)
        ))
    manifest = ResultManifest(
        config_echo=cfg.raw,
        versions={"code": __version__, "schema": SCHEMA_VERSION},
        files=tuple(sorted(art.files)),
    )
    _write(out_dir / "manifest.json", manifest.to_json())
    print(f"wrote {len(manifest.files)} files to {out_dir}")
    return manifest


# --------------------------------------------------------------- commands


def _resolve_config_arg(arg: str) -> RunConfig:
    if os.path.exists(arg):
        return load_config(arg)
    if "/" not in arg and not arg.endswith(".yaml"):
        return load_config(preset_path(arg))
    raise ConfigError(f"config file {arg!r} not found")


def _resolve_threads(value) -> int | None:
    if value is None:
        value = int(os.environ.get("EWAVE_THREADS", "0"))
    return None if value <= 0 else value


def cmd_derive(cfg: RunConfig, out_dir: Path) -> int:
    art = _Artifacts(out_dir)
    for spec in cfg.specs:
        payload = _params_payload(spec)
        _print_params(payload)
        art.add("params", f"{spec.name}_params.json", _json_text(payload))
    print(f"wrote {len(art.files)} parameter reports to {out_dir}")
    return EXIT_OK


def cmd_run(cfg: RunConfig, out_dir: Path, threads, si: bool, require_sweep: bool) -> int:
    if require_sweep and any(s.kind not in ("gamma_scan", "fel_detuning") for s in cfg.specs):
        raise ConfigError("scan requires a sweeping scenario (gamma_scan or fel_detuning)")
    _execute(cfg, out_dir, threads, si)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewave",
        description="Stimulated electron-photon interaction: analytic spectra "
        "and split-operator runs.",
    )
    parser.add_argument("--version", action="version", version=f"ewave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("derive", "resolve parameters and write the derived-quantity report"),
        ("run", "execute the configured scenario and write its artifacts"),
        ("scan", "like run, but requires a swept scenario; honors --threads"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True,
                       help="YAML config path or shipped preset name")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for scans (0 = auto; env EWAVE_THREADS)")
        p.add_argument("--si-units", action="store_true",
                       help="write absolute SI columns instead of recoil units")
    sub.add_parser("list-presets", help="list shipped preset configs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name:<18} {desc}")
            return EXIT_OK
        cfg = _resolve_config_arg(args.config)
        out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
        if args.command == "derive":
            return cmd_derive(cfg, out_dir)
        threads = _resolve_threads(args.threads)
        return cmd_run(cfg, out_dir, threads, args.si_units,
                       require_sweep=args.command == "scan")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"regime error: {err}", file=sys.stderr)
        return EXIT_REGIME
    except RuntimeError as err:
        print(f"numerical invariant violated: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as err:  # pragma: no cover - last-resort diagnostics
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
