"""Run configuration: one TOML file, sections mirroring the module split.

Sections and keys:

    [system]   cell_radius, lambda_u, lambda_r, lambda_b,
               block_len_min, block_len_max, threshold
    [radio]    alpha, beta, p0, noise_power, n_bs, n_u, n_r, bandwidth_hz
    [mc]       n_scenes, n_fading_per_scene, seed, mode, parallel_shards
    [sweep]    variable, grid
    [engines]  analytic, mc_model_faithful, mc_physical
    [outputs]  csv, json

Every key is optional; an empty file yields the documented defaults.
Unknown sections or keys are rejected rather than ignored, so typos fail
loudly.  After the file is read, environment variables of the form
``RISCOV_<SECTION>__<KEY>`` override individual values (values are parsed
with TOML literal syntax, e.g. ``RISCOV_SYSTEM__LAMBDA_R=3.18e-4``).
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analytic import SystemParams
from .channel import RadioParams
from .montecarlo import McConfig

__all__ = [
    "ConfigError",
    "SweepSpec",
    "EngineFlags",
    "OutputPaths",
    "RunConfig",
    "default_config",
    "load_config",
    "save_config",
    "ENV_PREFIX",
]

ENV_PREFIX = "RISCOV_"

SWEEP_VARIABLES = ("lambda_r", "lambda_b", "threshold")


class ConfigError(ValueError):
    """Malformed, unknown, or invalid configuration input."""


@dataclass(frozen=True)
class SweepSpec:
    """Which system parameter to sweep and over which grid."""

    variable: str = "lambda_r"
    grid: tuple = (0.0, 1.59e-4, 3.18e-4, 6.37e-4, 9.55e-4, 1.59e-3)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {SWEEP_VARIABLES}, "
                f"got {self.variable!r}")
        grid = tuple(float(g) for g in self.grid)
        if len(grid) == 0:
            raise ConfigError("sweep grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class EngineFlags:
    """Which engines a sweep evaluates at each grid point."""

    analytic: bool = True
    mc_model_faithful: bool = True
    mc_physical: bool = False


@dataclass(frozen=True)
class OutputPaths:
    """Artifact destinations; None suppresses the artifact."""

    csv: str | None = None
    json: str | None = None


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    mc: McConfig
    sweep: SweepSpec
    engines: EngineFlags
    outputs: OutputPaths


_SYSTEM_KEYS = ("cell_radius", "lambda_u", "lambda_r", "lambda_b",
                "block_len_min", "block_len_max", "threshold")
_RADIO_KEYS = ("alpha", "beta", "p0", "noise_power", "n_bs", "n_u", "n_r",
               "bandwidth_hz")
_MC_KEYS = ("n_scenes", "n_fading_per_scene", "seed", "mode",
            "parallel_shards")
_SECTION_KEYS = {
    "system": _SYSTEM_KEYS,
    "radio": _RADIO_KEYS,
    "mc": _MC_KEYS,
    "sweep": ("variable", "grid"),
    "engines": ("analytic", "mc_model_faithful", "mc_physical"),
    "outputs": ("csv", "json"),
}
_INT_KEYS = {"n_bs", "n_u", "n_r", "n_scenes", "n_fading_per_scene", "seed",
             "parallel_shards"}


def default_config() -> RunConfig:
    """The documented default scenario (100 m cell, see README)."""
    return RunConfig(params=SystemParams(), mc=McConfig(), sweep=SweepSpec(),
                     engines=EngineFlags(), outputs=OutputPaths())


def _check_sections(data: dict) -> None:
    for section, content in data.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table of keys")
        for key in content:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")


def _coerce(section: str, key: str, value):
    """Light type normalization with loud failures."""
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return value
    if section == "engines":
        if not isinstance(value, bool):
            raise ConfigError(f"[engines] {key} must be true or false")
        return value
    if key in ("mode", "variable", "csv", "json"):
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string")
        return value
    if key == "grid":
        if not isinstance(value, (list, tuple)):
            raise ConfigError("[sweep] grid must be a list of numbers")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError("[sweep] grid must be a list of numbers")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number")
    return float(value)


def _apply_env_overrides(data: dict) -> dict:
    for name, raw in sorted(os.environ.items()):
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section, _, key = name[len(ENV_PREFIX):].partition("__")
        section = section.lower()
        key = key.lower()
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section in env var {name}")
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in env var {name}")
        try:
            parsed = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            parsed = raw
        data.setdefault(section, {})[key] = parsed
    return data


def _build(data: dict) -> RunConfig:
    _check_sections(data)
    norm = {
        section: {k: _coerce(section, k, v) for k, v in content.items()}
        for section, content in data.items()
    }
    try:
        radio = RadioParams(**norm.get("radio", {}))
        params = SystemParams(radio=radio, **norm.get("system", {}))
        mc = McConfig(**norm.get("mc", {}))
        sweep = SweepSpec(**norm.get("sweep", {}))
        engines = EngineFlags(**norm.get("engines", {}))
        outputs = OutputPaths(**norm.get("outputs", {}))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(params=params, mc=mc, sweep=sweep, engines=engines,
                     outputs=outputs)


def load_config(path: str | None = None) -> RunConfig:
    """Parse, validate, and default-fill a run configuration.

    ``path=None`` starts from an empty file (all defaults); environment
    overrides apply either way.  All failures raise ConfigError.
    """
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}")
    return _build(_apply_env_overrides(data))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def save_config(config: RunConfig, path: str) -> None:
    """Write a config file that load_config rereads to an equal RunConfig.

    Floats are written with shortest round-trip precision, so grids and
    densities survive the cycle bit-exactly.
    """
    if not isinstance(config.params.lambda_u, float):
        raise ConfigError("radial user-density profiles are programmatic "
                          "and cannot be written to a config file")
    sections: list[tuple[str, list[tuple[str, object]]]] = []
    sections.append(("system", [
        (k, getattr(config.params, k)) for k in _SYSTEM_KEYS]))
    sections.append(("radio", [
        (k, getattr(config.params.radio, k)) for k in _RADIO_KEYS]))
    sections.append(("mc", [(k, getattr(config.mc, k)) for k in _MC_KEYS]))
    sections.append(("sweep", [("variable", config.sweep.variable),
                               ("grid", config.sweep.grid)]))
    sections.append(("engines", [
        (f.name, getattr(config.engines, f.name))
        for f in fields(EngineFlags)]))
    out_items = [(f.name, getattr(config.outputs, f.name))
                 for f in fields(OutputPaths)
                 if getattr(config.outputs, f.name) is not None]
    lines = []
    for name, items in sections + [("outputs", out_items)]:
        if name == "outputs" and not items:
            continue
        lines.append(f"[{name}]")
        for key, value in items:
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
