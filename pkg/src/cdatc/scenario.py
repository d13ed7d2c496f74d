"""Scenario files: TOML with one table per module.

Example::

    [network]
    nodes = 7
    edges = [[1, 2], [1, 3], [2, 3], [4, 1]]   # 1-based labels

    [energy]
    harvest_prob = 0.4

Only ``nodes`` and ``edges`` are required; every other key falls back to its
default. Unknown tables or keys are rejected.
"""

from __future__ import annotations

import re
from dataclasses import fields
from importlib import resources
from pathlib import Path

import tomli
import tomli_w

from .censoring import CensorParams
from .diffusion import DiffusionParams
from .energy import EnergyParams
from .errors import CdatcError, ConfigInvalid, ParseError, UnknownPreset, ValidationError
from .network import from_labels
from .signal_model import SignalParams, default_noise_profile
from .simulator import SimConfig

PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b", "unconstrained")

_NUM = (int, float)

# table -> key -> (expected python types, dataclass field or None)
_SCHEMA = {
    "network": {"nodes": (int, None), "edges": (list, None)},
    "signal": {
        "taps": (int, "taps"), "signal_power": (_NUM, "signal_power"),
        "noise_variances": (list, "noise_variances"), "jump_step": (int, "jump_step"),
    },
    "diffusion": {
        "mu": (_NUM, "mu"), "delta": (_NUM, "delta"), "combiner": (str, "combiner"),
        "ls_smoothing": (_NUM, "ls_smoothing"),
    },
    "energy": {
        "battery": (_NUM, "capacity"), "sense_cost": (_NUM, "sense_cost"),
        "tx_cost": (_NUM, "tx_cost"), "harvest_prob": (_NUM, "harvest_prob"),
        "harvest_range": (list, "harvest_range"),
        "initial_battery": ((int, float, list), "initial_battery"),
    },
    "censoring": {
        "censoring": (str, "enabled"), "alpha_x": (_NUM, "alpha_x"), "eta": (_NUM, "eta"),
        "tau_init": (_NUM, "tau_init"), "rho_smoothing": (_NUM, "rho_smoothing"),
        "rho_clamp": (list, "rho_clamp"),
    },
    "sim": {"schemes": (list, "schemes"), "steps": (int, "n_steps"), "runs": (int, "runs"),
            "seed": (int, "seed")},
}


def _check_type(key, value, types):
    if isinstance(value, bool) or not isinstance(value, types):
        raise ValidationError(key, f"wrong type {type(value).__name__}")
    if isinstance(value, list):
        for item in value:
            if isinstance(item, bool):
                raise ValidationError(key, "booleans are not allowed")


def _numbers(key, value, length=None):
    if length is not None and len(value) != length:
        raise ValidationError(key, f"expects {length} values, got {len(value)}")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, _NUM):
            raise ValidationError(key, f"non-numeric entry {v!r}")
    return tuple(float(v) for v in value)


def config_from_dict(doc: dict) -> SimConfig:
    """Validate a parsed scenario mapping and build the :class:`SimConfig`."""
    for table, body in doc.items():
        if table not in _SCHEMA:
            raise ValidationError(table, "unknown table")
        if not isinstance(body, dict):
            raise ValidationError(table, "must be a table")
        for key, value in body.items():
            if key not in _SCHEMA[table]:
                raise ValidationError(key, f"unknown key in [{table}]")
            _check_type(key, value, _SCHEMA[table][key][0])

    def kwargs(table):
        out = {}
        for key, value in doc.get(table, {}).items():
            out[_SCHEMA[table][key][1]] = value
        return out

    net = doc.get("network", {})
    for key in ("nodes", "edges"):
        if key not in net:
            raise ValidationError(key, "required key missing from [network]")
    edges = net["edges"]
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)):
            raise ValidationError("edges", f"entry {e!r} is not a pair of node labels")
    try:
        topology = from_labels(net["nodes"], edges)
    except CdatcError as exc:
        raise ValidationError("edges", str(exc)) from exc

    sig = kwargs("signal")
    if "noise_variances" in sig:
        sig["noise_variances"] = _numbers("noise_variances", sig["noise_variances"])
    elif topology.n_nodes == 7:
        sig["noise_variances"] = tuple(default_noise_profile())
    else:
        raise ValidationError("noise_variances", "required unless the network has 7 nodes")
    if len(sig["noise_variances"]) != topology.n_nodes:
        raise ValidationError("noise_variances", f"needs one value per node ({topology.n_nodes})")

    en = kwargs("energy")
    if "harvest_range" in en:
        en["harvest_range"] = _numbers("harvest_range", en["harvest_range"], 2)
    if isinstance(en.get("initial_battery"), list):
        en["initial_battery"] = _numbers("initial_battery", en["initial_battery"], topology.n_nodes)
    cen = kwargs("censoring")
    if "enabled" in cen:
        if cen["enabled"] not in ("on", "off"):
            raise ValidationError("censoring", "must be 'on' or 'off'")
        cen["enabled"] = cen["enabled"] == "on"
    if "rho_clamp" in cen:
        cen["rho_clamp"] = _numbers("rho_clamp", cen["rho_clamp"], 2)
    sim = kwargs("sim")
    if "schemes" in sim:
        sim["schemes"] = tuple(sim["schemes"])

    try:
        return SimConfig(
            topology=topology,
            signal=SignalParams(**sig),
            diffusion=DiffusionParams(**kwargs("diffusion")),
            energy=EnergyParams(**en),
            censoring=CensorParams(**cen),
            **sim,
        )
    except ValidationError:
        raise
    except ConfigInvalid as exc:
        key = str(exc).split(":", 1)[0]
        raise ValidationError(key, str(exc).split(":", 1)[-1].strip()) from exc


def _decode(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        msg = getattr(exc, "msg", str(exc))
        raise ParseError(msg, line) from None


def parse_scenario_text(text: str) -> SimConfig:
    return config_from_dict(_decode(text))


def parse_scenario(path) -> SimConfig:
    """Read and validate a scenario file.

    Raises ``ParseError`` (with line number) for malformed TOML and
    ``ValidationError`` (naming the key) for bad values.
    """
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))


def config_to_dict(config: SimConfig) -> dict:
    """Effective configuration with every default spelled out."""
    def pick(table, obj):
        out = {}
        for key, (_, attr) in _SCHEMA[table].items():
            value = getattr(obj, attr)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    cen = pick("censoring", config.censoring)
    cen["censoring"] = "on" if config.censoring.enabled else "off"
    return {
        "network": {"nodes": config.topology.n_nodes, "edges": config.topology.edge_labels()},
        "signal": pick("signal", config.signal),
        "diffusion": pick("diffusion", config.diffusion),
        "energy": pick("energy", config.energy),
        "censoring": cen,
        "sim": pick("sim", config),
    }


def dump_scenario(config: SimConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("cdatc.scenarios").joinpath(f"{name}.toml").read_text(encoding="utf-8")


def load_preset(name: str) -> SimConfig:
    return parse_scenario_text(preset_text(name))
