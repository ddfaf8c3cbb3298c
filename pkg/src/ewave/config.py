"""Run configuration: strict YAML schema, SI unit suffixes, presets, manifest.

All physical inputs cross the I/O boundary here.  Dimensioned quantities
must be strings with an explicit SI unit suffix (``"8 um"``, ``"63.5 nm"``);
bare numbers are accepted only for dimensionless fields.  Unknown keys are
rejected anywhere in the tree, with the offending dotted path named.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources

import yaml

from .constants import NATURAL, SCALES
from .scenarios import SCENARIO_KINDS, ScenarioSpec, SweepAxis

__all__ = [
    "ConfigError",
    "RunConfig",
    "ResultManifest",
    "SCHEMA_VERSION",
    "parse_config",
    "load_config",
    "serialize_config",
    "parse_quantity",
    "parse_angle",
    "list_presets",
    "preset_path",
    "load_preset",
]

SCHEMA_VERSION = "1"

_EMIT_TOKENS = ("spectra", "snapshots", "scan_table", "detuning_table", "params")
_DEFAULT_EMIT = {
    "pinem": ("spectra", "params"),
    "phase_accel": ("spectra", "params"),
    "gamma_scan": ("scan_table", "params"),
    "fel_detuning": ("detuning_table", "params"),
}


class ConfigError(ValueError):
    """Schema or unit violation; the message names the offending field."""


_QUANTITY = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ/]+)\s*$")
_LENGTH_UNITS = {
    "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6,
    "nm": 1e-9, "pm": 1e-12, "fm": 1e-15,
}
_TIME_UNITS = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6,
    "ns": 1e-9, "ps": 1e-12, "fs": 1e-15,
}
_FIELD_UNITS = {"V/m": 1.0, "kV/m": 1e3, "MV/m": 1e6, "GV/m": 1e9, "TV/m": 1e12}
_UNIT_KINDS = {
    "length": (_LENGTH_UNITS, SCALES.length),
    "time": (_TIME_UNITS, SCALES.time),
    "e_field": (_FIELD_UNITS, SCALES.e_field),
}


def parse_quantity(value, kind: str, where: str) -> float:
    """Parse ``"8 um"``-style SI input and return it in natural units."""
    table, scale = _UNIT_KINDS[kind]
    if not isinstance(value, str):
        raise ConfigError(
            f"{where}: expected a string with an SI {kind} suffix "
            f"(e.g. '8 {next(iter(table))}'), got {value!r}"
        )
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"{where}: malformed quantity {value!r}")
    number, suffix = m.groups()
    if suffix not in table:
        raise ConfigError(
            f"{where}: unknown {kind} unit {suffix!r} "
            f"(allowed: {', '.join(sorted(table))})"
        )
    return float(number) * table[suffix] / scale


_ANGLE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*(pi|deg|rad)?\s*$")


def parse_angle(value, where: str) -> float:
    """Angles in radians; strings may use ``deg``, ``rad``, or ``pi`` units."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _ANGLE.match(value)
        if m and (m.group(1) or m.group(2)):
            number = float(m.group(1)) if m.group(1) not in ("", "+", "-") else (
                -1.0 if m.group(1) == "-" else 1.0
            )
            unit = m.group(2)
            if unit == "deg":
                return math.radians(number)
            if unit == "pi":
                return number * math.pi
            return number
    raise ConfigError(f"{where}: expected an angle (number, 'X deg', or 'X pi'), got {value!r}")


def _section(node, where: str, required=(), optional=()) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = sorted(set(node) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    missing = [k for k in required if k not in node]
    if missing:
        raise ConfigError(f"{where}: missing required keys {missing}")
    return node


def _number(node, where: str, minimum=None) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {node!r}")
    v = float(node)
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return v


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration.

    ``specs`` are the scenario definitions in natural units (one per swept
    coupling value), ``emit`` the artifact set, and ``raw`` the normalized
    configuration tree (defaults applied, SI strings preserved) that
    ``serialize_config`` round-trips.
    """

    specs: tuple
    emit: tuple
    output_dir: str
    raw: dict


@dataclass(frozen=True)
class ResultManifest:
    """Inventory of one run: configuration echo, versions, file checksums."""

    config_echo: dict
    versions: dict
    files: tuple  # (role, relative path, sha256) triples

    def to_json(self) -> str:
        payload = {
            "config_echo": self.config_echo,
            "versions": self.versions,
            "files": [
                {"role": role, "path": path, "sha256": digest}
                for role, path, digest in self.files
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "ResultManifest":
        data = json.loads(text)
        return ResultManifest(
            config_echo=data["config_echo"],
            versions=data["versions"],
            files=tuple(
                (f["role"], f["path"], f["sha256"]) for f in data["files"]
            ),
        )


def _parse_sweep(node, where: str) -> SweepAxis:
    sec = _section(node, where, required=("name",), optional=("values", "start", "stop", "count"))
    name = sec["name"]
    if "values" in sec:
        if not isinstance(sec["values"], list):
            raise ConfigError(f"{where}.values: expected a list")
        extra = [k for k in ("start", "stop", "count") if k in sec]
        if extra:
            raise ConfigError(f"{where}: give either values or start/stop/count, not both")
        vals = tuple(_number(v, f"{where}.values[{i}]") for i, v in enumerate(sec["values"]))
    else:
        for k in ("start", "stop", "count"):
            if k not in sec:
                raise ConfigError(f"{where}: needs values or start/stop/count")
        start = _number(sec["start"], f"{where}.start")
        stop = _number(sec["stop"], f"{where}.stop")
        count = sec["count"]
        if not isinstance(count, int) or count < 2:
            raise ConfigError(f"{where}.count: expected an integer >= 2")
        step = (stop - start) / (count - 1)
        vals = tuple(start + i * step for i in range(count))
    try:
        return SweepAxis(name=name, values=vals)
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from err


def _resolve_scenario(node, numerics: dict, emit: tuple) -> list:
    sec = _section(
        node, "scenario",
        required=("name", "kind", "beam", "drive", "source"),
        optional=("sweep", "epsilons"),
    )
    name, kind = sec["name"], sec["kind"]
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"scenario.kind: unknown kind {kind!r} (allowed: {SCENARIO_KINDS})")

    beam_sec = _section(sec["beam"], "scenario.beam", required=("gamma0",))
    gamma0 = _number(beam_sec["gamma0"], "scenario.beam.gamma0", minimum=1.0 + 1e-12)
    beta0 = math.sqrt(1.0 - 1.0 / gamma0**2)

    drive_sec = _section(
        sec["drive"], "scenario.drive",
        optional=(
            "wavelength", "beta0_lambda", "upsilon", "e_field",
            "interaction_length", "phi0", "theta_bar",
        ),
    )
    if ("wavelength" in drive_sec) == ("beta0_lambda" in drive_sec):
        raise ConfigError("scenario.drive: give exactly one of wavelength or beta0_lambda")
    if "wavelength" in drive_sec:
        lam = parse_quantity(drive_sec["wavelength"], "length", "scenario.drive.wavelength")
    else:
        lam = parse_quantity(
            drive_sec["beta0_lambda"], "length", "scenario.drive.beta0_lambda"
        ) / beta0
    omega = 2.0 * math.pi / lam
    length = None
    if "interaction_length" in drive_sec:
        length = parse_quantity(
            drive_sec["interaction_length"], "length", "scenario.drive.interaction_length"
        )
    if ("upsilon" in drive_sec) == ("e_field" in drive_sec):
        raise ConfigError("scenario.drive: give exactly one of upsilon or e_field")
    if "upsilon" in drive_sec:
        ups_node = drive_sec["upsilon"]
        if isinstance(ups_node, list):
            upsilons = [
                _number(v, f"scenario.drive.upsilon[{i}]", minimum=0.0)
                for i, v in enumerate(ups_node)
            ]
        else:
            upsilons = [_number(ups_node, "scenario.drive.upsilon", minimum=0.0)]
    else:
        if length is None:
            raise ConfigError("scenario.drive.e_field needs interaction_length")
        e0 = parse_quantity(drive_sec["e_field"], "e_field", "scenario.drive.e_field")
        k = NATURAL
        upsilons = [k.e_charge * e0 * length / (2.0 * k.hbar * omega)]
    phi0 = parse_angle(drive_sec.get("phi0", 0.0), "scenario.drive.phi0")
    theta_bar = parse_angle(drive_sec.get("theta_bar", 0.0), "scenario.drive.theta_bar")

    src_sec = _section(
        sec["source"], "scenario.source",
        optional=("gamma_size", "sigma_z0", "drift_length", "mode"),
    )
    sigma_z0 = drift_length = None
    if "sigma_z0" in src_sec:
        sigma_z0 = parse_quantity(src_sec["sigma_z0"], "length", "scenario.source.sigma_z0")
    if "drift_length" in src_sec:
        drift_length = parse_quantity(
            src_sec["drift_length"], "length", "scenario.source.drift_length"
        )
    if sigma_z0 is not None and drift_length is not None:
        raise ConfigError("scenario.source: sigma_z0 and drift_length are exclusive")
    inferred = "drift" if sigma_z0 is not None else (
        "fixed_drift" if drift_length is not None else "waist"
    )
    mode = src_sec.get("mode", inferred)
    if mode != inferred:
        raise ConfigError(
            f"scenario.source.mode: {mode!r} inconsistent with the given size "
            f"fields (implied {inferred!r})"
        )
    gamma_size = None
    if "gamma_size" in src_sec:
        gamma_size = _number(src_sec["gamma_size"], "scenario.source.gamma_size", minimum=0.0)

    sweep = _parse_sweep(sec["sweep"], "scenario.sweep") if "sweep" in sec else None
    epsilons = ()
    if "epsilons" in sec:
        if kind != "fel_detuning":
            raise ConfigError("scenario.epsilons: only valid for fel_detuning")
        if not isinstance(sec["epsilons"], list):
            raise ConfigError("scenario.epsilons: expected a list")
        epsilons = tuple(
            _number(v, f"scenario.epsilons[{i}]")
            for i, v in enumerate(sec["epsilons"])
        )

    specs = []
    for ups in upsilons:
        spec_name = name if len(upsilons) == 1 else f"{name}_u{ups:g}".replace(".", "p")
        try:
            specs.append(
                ScenarioSpec(
                    name=spec_name,
                    kind=kind,
                    omega=omega,
                    upsilon=ups,
                    gamma0=gamma0,
                    interaction_length=length,
                    phi0=phi0,
                    theta_bar=theta_bar,
                    gamma_size=gamma_size,
                    sigma_z0=sigma_z0,
                    drift_length=drift_length,
                    size_mode=mode,
                    sweep=sweep,
                    epsilons=epsilons,
                    outputs=emit,
                    **numerics,
                )
            )
        except ValueError as err:
            raise ConfigError(f"scenario: {err}") from err
    return specs


_NUMERIC_KEYS = (
    "n", "span_factor", "dt_fraction", "snapshot_every",
    "envelope", "edge_fraction", "include_gradient_term",
)


def _resolve_numerics(node) -> dict:
    sec = _section(node, "numerics", optional=_NUMERIC_KEYS)
    out = {}
    if "n" in sec:
        if not isinstance(sec["n"], int):
            raise ConfigError("numerics.n: expected an integer")
        out["n"] = sec["n"]
    for key in ("span_factor", "dt_fraction", "edge_fraction"):
        if key in sec:
            out[key] = _number(sec[key], f"numerics.{key}", minimum=0.0)
    if "snapshot_every" in sec:
        if not isinstance(sec["snapshot_every"], int) or sec["snapshot_every"] < 0:
            raise ConfigError("numerics.snapshot_every: expected an integer >= 0")
        out["snapshot_every"] = sec["snapshot_every"]
    if "envelope" in sec:
        out["envelope"] = sec["envelope"]
    if "include_gradient_term" in sec:
        if not isinstance(sec["include_gradient_term"], bool):
            raise ConfigError("numerics.include_gradient_term: expected a boolean")
        out["include_gradient_term"] = sec["include_gradient_term"]
    return out


def parse_config(data) -> RunConfig:
    """Validate a parsed YAML tree and resolve it to natural units."""
    top = _section(
        data, "config",
        required=("scenario",),
        optional=("numerics", "output_dir", "emit"),
    )
    numerics = _resolve_numerics(top.get("numerics", {}))
    output_dir = top.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir: expected a non-empty string")

    scenario_sec = top["scenario"]
    if not isinstance(scenario_sec, dict) or "kind" not in scenario_sec:
        raise ConfigError("scenario: expected a mapping with a 'kind'")
    kind = scenario_sec["kind"]
    if "emit" in top:
        if not isinstance(top["emit"], list):
            raise ConfigError("emit: expected a list")
        emit = tuple(top["emit"])
        bad = sorted(set(emit) - set(_EMIT_TOKENS))
        if bad:
            raise ConfigError(f"emit: unknown tokens {bad} (allowed: {_EMIT_TOKENS})")
    else:
        emit = _DEFAULT_EMIT.get(kind, ("params",))

    specs = _resolve_scenario(scenario_sec, numerics, emit)

    raw = {
        "scenario": _normalized(scenario_sec),
        "numerics": _normalized(top.get("numerics", {})),
        "emit": list(emit),
        "output_dir": output_dir,
    }
    return RunConfig(specs=tuple(specs), emit=emit, output_dir=output_dir, raw=raw)


def _normalized(node):
    if isinstance(node, dict):
        return {k: _normalized(node[k]) for k in sorted(node)}
    if isinstance(node, list):
        return [_normalized(v) for v in node]
    return node


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML in {path!r}: {err}") from err
    return parse_config(data)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical YAML for a resolved configuration; parses back equal."""
    return yaml.safe_dump(cfg.raw, sort_keys=True, default_flow_style=False)


# ----------------------------------------------------------------- presets


def _preset_dir():
    return resources.files("ewave") / "presets"


def list_presets() -> list:
    """(name, one-line description) pairs for the shipped preset configs."""
    out = []
    for entry in sorted(_preset_dir().iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".yaml"):
            continue
        first = entry.read_text(encoding="utf-8").splitlines()[0]
        desc = first.lstrip("# ").strip() if first.startswith("#") else ""
        out.append((entry.name[:-5], desc))
    return out


def preset_path(name: str):
    """Filesystem path of a shipped preset; raises ConfigError if unknown."""
    entry = _preset_dir() / f"{name}.yaml"
    if not entry.is_file():
        known = ", ".join(n for n, _ in list_presets())
        raise ConfigError(f"unknown preset {name!r} (shipped: {known})")
    return entry


def load_preset(name: str) -> RunConfig:
    entry = preset_path(name)
    data = yaml.safe_load(entry.read_text(encoding="utf-8"))
    return parse_config(data)
