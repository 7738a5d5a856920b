"""Command-line front end: named experiments, sweeps, presets and config checks.

Config files are YAML with an explicit ``schema_version``.  Physical
quantities carry their unit in the key name (``*_km``, ``*_us``, ``*_ns``,
``*_mhz``).  Frequencies in ``*_mhz`` keys are ordinary frequencies; the
angular value used internally is ``2 pi f``.

Exit codes: 0 success, 2 invalid config, 3 solver non-convergence, 4 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cqed import (
    EmitterCavityParams,
    IntegrationError,
    PulseParams,
    cooperativity,
    material_presets,
    saturation_sweep,
    simulate,
)
from .czgate import CZParams, GateConditionError, cz_error_curve, gate_channel
from .entangle import (
    GEOMETRIES,
    LinkParams,
    QuadratureError,
    entanglement_fidelity,
    fidelity_ps_curve,
    link_transmission,
    optimize_d,
    post_selected_state,
    small_angle_gamma1,
    success_probability,
)
from .repeater import (
    NetworkConfig,
    PhysicalNoise,
    ProtocolError,
    SimulationStalled,
    choose_policy,
    rate_study,
    run_simulation,
)

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4
TOP_LEVEL_KEYS = {"schema_version", "experiment", "seed", "format", "parameters", "presets", "version"}
FORMATS = ("csv", "json")
TWO_PI_MHZ = 2 * math.pi * 1e6


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Param:
    default: object
    kind: str  # int, float, floats, str, strs
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()


def _logspace(a, b, n):
    return [float(x) for x in np.logspace(a, b, n)]


def _linspace(a, b, n):
    return [float(x) for x in np.linspace(a, b, n)]


_NETWORK = {
    "spacing_km": Param(10.0, "float", 1e-9),
    "slot_time_us": Param(50.0, "float", 1e-9),
    "n_deliver": Param(30, "int", 7),
}

_SWEEP = {
    "alpha_omega0_values": Param([300.0, 3000.0], "floats", 1e-9),
    "sigma_p_over_tau_values": Param([0.1, 1.0, 3.0], "floats", 1e-9),
    "saturation_values": Param(_logspace(-1, 2, 13), "floats", 1e-9),
}

EXPERIMENTS: dict[str, dict[str, Param]] = {
    "fig2": {
        "n_segments": Param(16, "int", 1),
        "qubits_per_station": Param(16, "int", 2),
        "eps_init_values": Param([0.05, 0.30], "floats", 0.0, 1.0),
        "eps_gate": Param(0.005, "float", 0.0, 1.0),
        "ps_values": Param([0.001, 0.0033, 0.011, 0.036, 0.12, 0.36], "floats", 1e-9, 1.0),
        "target_fidelity": Param(0.95, "float", 0.25, 1.0),
        "n_seeds": Param(3, "int", 1),
        **_NETWORK,
    },
    "fig5": {
        "ell_over_ell0_values": Param([0.2, 0.4, 0.8, 1.6], "floats", 0.0),
        "pc_values": Param(_linspace(0.05, 2.0, 40), "floats", 1e-9),
        "geometry": Param("end", "str", choices=GEOMETRIES),
    },
    "fig6": {
        "transmission": Param(0.67, "float", 1e-9, 1.0),
        "pc_values": Param(_linspace(0.0, 2.0, 9), "floats", 0.0),
        "d_values": Param(_linspace(0.05, 4.0, 80), "floats", 0.0),
    },
    "fig7": {
        "theta_values": Param([0.001, 0.01, 0.1], "floats", 1e-9, 0.3),
        "loss_values": Param(_logspace(-4, -0.5, 15), "floats", 0.0, 0.95),
    },
    "fig8": {
        "n_segments": Param(128, "int", 1),
        "qubits_per_station": Param(16, "int", 2),
        "ell0_km": Param(25.0, "float", 1e-9),
        "pc": Param(0.5, "float", 1e-9),
        "theta": Param(0.01, "float", 1e-9, 0.3),
        "gate_transmission": Param(0.999, "float", 0.05, 1.0),
        "target_fidelity_values": Param([0.85, 0.9, 0.95], "floats", 0.25, 1.0),
        **_NETWORK,
    },
    "fig9": {"presets": Param(["si"], "strs", choices=("si", "znse", "ion")), **_SWEEP},
    "fig10": {
        "presets": Param(["znse", "ion"], "strs", choices=("si", "znse", "ion")),
        **_SWEEP,
        "alpha_omega0_values": Param([300.0, 3000.0], "floats", 1e-9),
        "sigma_p_over_tau_values": Param([4.0, 10.0, 20.0], "floats", 1e-9),
        "saturation_values": Param(_logspace(-0.5, 1.5, 10), "floats", 1e-9),
    },
}

# Custom runs have no defaults; every key of the chosen module is required.
CUSTOM_MODULES: dict[str, dict[str, Param]] = {
    "link": {
        "alpha": Param(None, "float", 0.0),
        "theta1": Param(None, "float", -math.pi, math.pi),
        "theta2": Param(None, "float", -math.pi, math.pi),
        "transmission": Param(None, "float", 1e-9, 1.0),
        "pc": Param(None, "float", 1e-9),
        "geometry": Param(None, "str", choices=GEOMETRIES),
    },
    "cz": {
        "alpha_values": Param(None, "floats"),
        "theta_values": Param(None, "floats", -math.pi, math.pi),
        "transmission_values": Param(None, "floats", 1e-9, 1.0),
    },
    "cqed": {
        "preset": Param(None, "str", choices=("si", "znse", "ion")),
        "alpha": Param(None, "float", 0.0),
        "omega0_mhz": Param(None, "float", 0.0),
        "sigma_p_ns": Param(None, "float", 1e-12),
    },
}

# Preset override key -> (field, multiplier to SI).
PRESET_KEYS = {
    "g_mhz": ("g", TWO_PI_MHZ),
    "kappa_mhz": ("kappa", TWO_PI_MHZ),
    "gamma_mhz": ("gamma_cav", TWO_PI_MHZ),
    "omega0_mhz": ("omega0", TWO_PI_MHZ),
    "delta_mhz": ("delta", TWO_PI_MHZ),
    "tau_r_ns": ("tau_r", 1e-9),
    "tau_nr_ns": ("tau_nr", 1e-9),
}


@dataclass
class ExperimentSpec:
    name: str
    parameters: dict
    presets: dict = field(default_factory=dict)
    seed: int = 0
    format: str = "csv"
    output_path: str | None = None


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    """Parse a YAML (or JSON sidecar) config; parse errors carry line and column."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {exc.problem or exc.context}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _coerce(key: str, param: Param, value):
    """Return (value, error) with the value converted to the declared kind."""
    def num(x, integer):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise TypeError
        if integer:
            if isinstance(x, float) and not x.is_integer():
                raise TypeError
            return int(x)
        return float(x)

    try:
        if param.kind in ("int", "float"):
            v = num(value, param.kind == "int")
            items = [v]
        elif param.kind == "floats":
            if not isinstance(value, (list, tuple)) or not value:
                raise TypeError
            v = [num(x, False) for x in value]
            items = v
        elif param.kind == "str":
            if not isinstance(value, str):
                raise TypeError
            v, items = value, []
        elif param.kind == "strs":
            if isinstance(value, str):
                value = [value]
            if not isinstance(value, (list, tuple)) or not value or not all(isinstance(x, str) for x in value):
                raise TypeError
            v, items = list(value), []
        else:
            raise AssertionError(param.kind)
    except TypeError:
        return None, f"{key}: expected {param.kind}, got {value!r}"
    if param.choices:
        bad = [x for x in (v if isinstance(v, list) else [v]) if x not in param.choices]
        if bad:
            return None, f"{key}: {bad[0]!r} not one of {list(param.choices)}"
    for x in items:
        if not math.isfinite(x):
            return None, f"{key}: value {x} is not finite"
        if param.lo is not None and x < param.lo:
            return None, f"{key}: value {x} below minimum {param.lo}"
        if param.hi is not None and x > param.hi:
            return None, f"{key}: value {x} above maximum {param.hi}"
    return v, None


def _schema_for(name: str, raw_params: dict) -> dict[str, Param]:
    if name != "custom":
        return EXPERIMENTS[name]
    module = raw_params.get("module")
    schema = {"module": Param(None, "str", choices=tuple(CUSTOM_MODULES))}
    if module in CUSTOM_MODULES:
        schema.update(CUSTOM_MODULES[module])
    return schema


def _semantic_errors(name: str, params: dict) -> list[str]:
    errors = []
    if "n_segments" in params:
        try:
            NetworkConfig(params["n_segments"], params.get("spacing_km", 10.0),
                          params.get("slot_time_us", 50.0) * 1e-6, params.get("qubits_per_station"))
        except ProtocolError as exc:
            errors.append(f"network: {exc}")
    if name == "fig2" and len(params.get("ps_values", [])) < 4:
        errors.append("ps_values: need at least four success probabilities to fit an exponent")
    if name == "custom" and params.get("module") == "cz":
        for key in ("alpha_values", "theta_values", "transmission_values"):
            if key in params and len(params[key]) != 4:
                errors.append(f"{key}: need exactly 4 entries")
    return errors


def resolve_preset(name: str, overrides: dict | None = None) -> EmitterCavityParams:
    presets = material_presets()
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    changes = {}
    for key, value in (overrides or {}).items():
        if key not in PRESET_KEYS:
            raise ConfigError(f"presets.{name}.{key}: unknown key; choose from {sorted(PRESET_KEYS)}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError(f"presets.{name}.{key}: expected a positive number, got {value!r}")
        attr, scale = PRESET_KEYS[key]
        changes[attr] = float(value) * scale
    try:
        return presets[name].with_(**changes)
    except ValueError as exc:
        raise ConfigError(f"presets.{name}: {exc}") from exc


def preset_echo(p: EmitterCavityParams) -> dict:
    """Preset in config units plus derived quantities."""
    out = {key: getattr(p, attr) / scale for key, (attr, scale) in PRESET_KEYS.items()}
    out.update({
        "g_prime_mhz": p.g_prime / TWO_PI_MHZ,
        "tau_ns": p.tau / 1e-9,
        "cooperativity": cooperativity(p),
        "externally_sourced": p.externally_sourced,
    })
    return out


def _apply_override(raw: dict, text: str) -> None:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, value = text.split("=", 1)
    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {key}: cannot parse {value!r}") from exc
    parts = key.strip().split(".")
    if parts[0] == "presets" and len(parts) == 3:
        raw.setdefault("presets", {}).setdefault(parts[1], {})[parts[2]] = parsed
    elif parts[0] in ("seed", "format"):
        raw[parts[0]] = parsed
    else:
        raw.setdefault("parameters", {})[key.strip()] = parsed


def _check_top_level(raw: dict) -> list[str]:
    errors = [f"unknown top-level key {k!r}" for k in raw if k not in TOP_LEVEL_KEYS]
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION})")
    for key in ("parameters", "presets"):
        if key in raw and raw[key] is not None and not isinstance(raw[key], dict):
            errors.append(f"{key} must be a mapping")
    return errors


def resolve_spec(name: str, raw: dict, overrides=(), seed=None, fmt=None, output=None) -> ExperimentSpec:
    """Merge defaults, config and overrides into a checked ExperimentSpec."""
    raw = json.loads(json.dumps(raw))  # private copy
    for text in overrides:
        _apply_override(raw, text)
    errors = _check_top_level(raw)
    if raw.get("experiment") not in (None, name):
        errors.append(f"config is for experiment {raw['experiment']!r}, not {name!r}")
    given = raw.get("parameters") or {}
    if not isinstance(given, dict):
        given = {}
    schema = _schema_for(name, given)
    params = {}
    for key, param in schema.items():
        if key in given:
            value, err = _coerce(key, param, given[key])
            if err:
                errors.append(err)
            else:
                params[key] = value
        elif param.default is None:
            errors.append(f"{key}: required")
        else:
            params[key] = json.loads(json.dumps(param.default))
    errors += [f"unknown parameter {k!r} for {name}" for k in given if k not in schema]
    if not errors:
        errors += _semantic_errors(name, params)
    presets = raw.get("presets") or {}
    if isinstance(presets, dict):
        for pname, over in presets.items():
            try:
                resolve_preset(pname, over if isinstance(over, dict) else {})
            except ConfigError as exc:
                errors += exc.errors
    seed = raw.get("seed", 0) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        errors.append(f"seed must be a non-negative integer, got {seed!r}")
    fmt = fmt or raw.get("format", "csv")
    if fmt not in FORMATS:
        errors.append(f"format must be one of {list(FORMATS)}")
    if errors:
        raise ConfigError(errors)
    return ExperimentSpec(name, params, presets if isinstance(presets, dict) else {}, seed, fmt, output)


def validate_config(path, experiment: str | None = None) -> dict:
    """Report on a config file without running anything or touching files."""
    report = {"path": str(path), "ok": True, "errors": [], "unknown_keys": [], "resolved": {}, "presets": {}}
    try:
        raw = load_config(path)
    except ConfigError as exc:
        report.update(ok=False, errors=exc.errors)
        return report
    name = experiment or raw.get("experiment")
    known_names = list(EXPERIMENTS) + ["custom"]
    if name is not None and name not in known_names:
        report.update(ok=False, errors=[f"unknown experiment {name!r}"])
        return report
    given = raw.get("parameters") or {}
    if isinstance(given, dict):
        if name is None:
            all_keys = set().union(*EXPERIMENTS.values())
        else:
            all_keys = set(_schema_for(name, given))
        report["unknown_keys"] = sorted(k for k in given if k not in all_keys)
        report["unknown_keys"] += sorted(k for k in raw if k not in TOP_LEVEL_KEYS)
    names = [name] if name else list(EXPERIMENTS)
    for n in names:
        sub = dict(raw)
        sub.pop("experiment", None)
        if name is None and isinstance(given, dict):
            # Without a named experiment each schema sees only its own keys.
            sub["parameters"] = {k: v for k, v in given.items() if k in _schema_for(n, given)}
        try:
            spec = resolve_spec(n, sub)
            report["resolved"][n] = spec.parameters
        except ConfigError as exc:
            report["errors"] += [f"{n}: {e}" for e in exc.errors] if name is None else exc.errors
    report["errors"] = sorted(set(report["errors"]), key=report["errors"].index)
    overrides = raw.get("presets") or {}
    for pname in material_presets():
        try:
            report["presets"][pname] = preset_echo(resolve_preset(pname, overrides.get(pname)))
        except (ConfigError, AttributeError):
            pass
    report["ok"] = not report["errors"] and not report["unknown_keys"]
    return report


# ---------------------------------------------------------------- experiments


def _preset_for(spec: ExperimentSpec, name: str) -> EmitterCavityParams:
    return resolve_preset(name, spec.presets.get(name))


def _network(spec: ExperimentSpec) -> NetworkConfig:
    p = spec.parameters
    return NetworkConfig(p["n_segments"], p["spacing_km"], p["slot_time_us"] * 1e-6, p["qubits_per_station"])


def _run_fig2(spec, mapper):
    p = spec.parameters
    cfg = _network(spec)
    rows = []
    for i, eps in enumerate(p["eps_init_values"]):
        study = rate_study(cfg, eps, p["eps_gate"], p["ps_values"], target=p["target_fidelity"],
                           n_deliver=p["n_deliver"], n_seeds=p["n_seeds"], seed=[spec.seed, i], mapper=mapper)
        for r in study["rows"]:
            rows.append({"eps_init": eps, "f_init": 1 - 0.75 * eps, "ps": r["ps"], "rate_hz": r["rate_hz"],
                         "final_fidelity": r["final_fidelity"], "mean_interval_s": r["mean_interval_s"],
                         "exponent": study["exponent"], "exponent_stderr": study["exponent_stderr"],
                         "policy": study["policy"]})
    return rows


def _run_fig5(spec, mapper):
    p = spec.parameters
    rows = []
    for ell in p["ell_over_ell0_values"]:
        rows += fidelity_ps_curve(ell, p["pc_values"], p["geometry"])
    return rows


def _run_fig6(spec, mapper):
    p = spec.parameters
    t = p["transmission"]
    rows = []
    for pc in p["pc_values"]:
        for d in p["d_values"]:
            rows.append({"transmission": t, "pc": pc, "d": d, "ps": success_probability(d, t, pc),
                         "fidelity": entanglement_fidelity(d, t, pc, small_angle_gamma1(d, t))})
    return rows


def _run_fig7(spec, mapper):
    p = spec.parameters
    return cz_error_curve(p["theta_values"], p["loss_values"])


def _fig8_point(args):
    cfg, noise, target, n_deliver, seed, levels = args
    policy = choose_policy(levels, noise, target)
    res = run_simulation(cfg, policy, noise, n_deliver, seed)
    return {"target_fidelity": target, "policy": policy.purification_rounds, "rate_hz": res.rate_hz,
            "mean_interval_s": res.mean_interval_s, "std_interval_s": res.std_interval_s,
            "final_fidelity": res.final_fidelity, "pairs_delivered": res.pairs_delivered}


def _run_fig8(spec, mapper):
    p = spec.parameters
    cfg = _network(spec)
    t = link_transmission(p["spacing_km"] / p["ell0_km"])
    d_star, _ = optimize_d(t, p["pc"])
    link = LinkParams.from_distinguishability(d_star, t, p["pc"], p["theta"])
    channel = gate_channel(CZParams.semi_ideal_params(p["gate_transmission"], p["theta"]))
    noise = PhysicalNoise(link, channel)
    targets = p["target_fidelity_values"]
    streams = np.random.SeedSequence(spec.seed).spawn(len(targets))
    tasks = [(cfg, noise, f, p["n_deliver"], s, cfg.levels) for f, s in zip(targets, streams)]
    return list(mapper(_fig8_point, tasks))


def _run_sweep(spec, mapper):
    p = spec.parameters
    rows = []
    for name in p["presets"]:
        preset = _preset_for(spec, name)
        sigmas = [s * preset.tau for s in p["sigma_p_over_tau_values"]]
        for r, rel in zip(saturation_sweep(preset, p["alpha_omega0_values"], sigmas, p["saturation_values"],
                                           mapper=mapper),
                          _sweep_labels(p)):
            rows.append({"preset": name, "sigma_p_over_tau": rel, **r})
    return rows


def _sweep_labels(p):
    return [s for _ in p["alpha_omega0_values"] for s in p["sigma_p_over_tau_values"]
            for _ in p["saturation_values"]]


def _run_custom(spec, mapper):
    p = spec.parameters
    module = p["module"]
    if module == "link":
        link = LinkParams(p["alpha"], p["theta1"], p["theta2"], p["transmission"], p["pc"], p["geometry"])
        res = post_selected_state(link)
        return [{"module": module, "ps": res.ps, "fidelity": res.fidelity}]
    if module == "cz":
        ch = gate_channel(CZParams(p["alpha_values"], p["theta_values"], p["transmission_values"]))
        return [{"module": module, "kraus_index": i, "lambda": float(lam)} for i, lam in enumerate(ch.lambdas)]
    preset = _preset_for(spec, p["preset"]).with_(omega0=p["omega0_mhz"] * TWO_PI_MHZ)
    res = simulate(preset, PulseParams(p["alpha"], p["sigma_p_ns"] * 1e-9))
    return [{"module": module, "theta": res.theta, "L": res.L, "d": res.d, "F": res.F, "D": res.D,
             "loss_identity_error": res.loss_identity_error}]


RUNNERS = {
    "fig2": _run_fig2, "fig5": _run_fig5, "fig6": _run_fig6, "fig7": _run_fig7,
    "fig8": _run_fig8, "fig9": _run_sweep, "fig10": _run_sweep, "custom": _run_custom,
}


def run_rows(spec: ExperimentSpec, workers: int = 1) -> list[dict]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return RUNNERS[spec.name](spec, lambda f, xs: pool.map(f, xs))
    return RUNNERS[spec.name](spec, map)


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    if isinstance(v, (tuple, list)):
        return "-".join(str(x) for x in v)
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def format_rows(rows: list[dict], fmt: str, name: str) -> str:
    if fmt == "json":
        return json.dumps({"experiment": name, "rows": _plain(rows)}, indent=1) + "\n"
    columns = []
    for r in rows:
        columns += [k for k in r if k not in columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) if c in r else "" for c in columns])
    return buf.getvalue()


def sidecar_record(spec: ExperimentSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": spec.name,
        "seed": spec.seed,
        "format": spec.format,
        "parameters": _plain(spec.parameters),
        "presets": _plain(spec.presets),
        "version": __version__,
    }


def sidecar_path(output) -> Path:
    out = Path(output)
    return out.with_name(out.name + ".meta.json")


def run_experiment(spec: ExperimentSpec, workers: int = 1, stdout=None) -> int:
    """Compute the experiment and write the data file and its sidecar."""
    rows = run_rows(spec, workers)
    text = format_rows(rows, spec.format, spec.name)
    if spec.output_path is None:
        (stdout or sys.stdout).write(text)
        return EXIT_OK
    out = Path(spec.output_path)
    out.write_text(text)
    sidecar_path(out).write_text(json.dumps(sidecar_record(spec), indent=1, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- argparse


def _experiment_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config or a sidecar .meta.json to replay")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--output", help="data file; a .meta.json sidecar is written next to it")
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="parameter override; presets.<name>.<key>=value edits a preset")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridrep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _experiment_flags()
    for name in list(EXPERIMENTS) + ["custom"]:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    pr = sub.add_parser("presets", help="material presets")
    pr.add_argument("action", choices=["list"])
    pr.add_argument("--config", help="config whose preset overrides are applied")
    va = sub.add_parser("validate", help="check a config file")
    va.add_argument("path")
    va.add_argument("--experiment", choices=list(EXPERIMENTS) + ["custom"])
    return parser


def _err(msg: str) -> None:
    print(f"hybridrep: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            if not Path(args.path).is_file():
                _err(f"cannot read {args.path}")
                return EXIT_IO
            report = validate_config(args.path, args.experiment)
            print(json.dumps(_plain(report), indent=1))
            return EXIT_OK if report["ok"] else EXIT_CONFIG
        if args.command == "presets":
            raw = load_config(args.config) if args.config else {}
            overrides = raw.get("presets") or {}
            listing = {n: preset_echo(resolve_preset(n, overrides.get(n))) for n in material_presets()}
            print(json.dumps(listing, indent=1))
            return EXIT_OK
        raw = load_config(args.config) if args.config else {}
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.output is not None:
            out = Path(args.output)
            if out.is_dir() or not out.parent.exists():
                _err(f"cannot write {args.output}")
                return EXIT_IO
        spec = resolve_spec(args.command, raw, args.override, args.seed, args.format, args.output)
        return run_experiment(spec, args.workers)
    except ConfigError as exc:
        for e in exc.errors:
            _err(e)
        return EXIT_CONFIG
    except (IntegrationError, QuadratureError, SimulationStalled) as exc:
        _err(f"solver did not converge: {exc}")
        return EXIT_SOLVER
    except (GateConditionError, ProtocolError, ValueError) as exc:
        _err(f"invalid parameters: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
