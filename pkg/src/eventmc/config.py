"""Flat ``key = value`` config files and problem assembly.

The format is deliberately trivial: one assignment per line, ``#`` starts a
comment, keys are flat.  Unknown keys are a hard error that names the key
and its line.  Command-line flags override file values; defaults fill the
rest.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import presets, xslib
from .errors import ConfigurationError
from .geometry import (DEFAULT_FUEL_RADIUS, DEFAULT_HEIGHT, DEFAULT_PITCH,
                       Pincell)
from .transport import RunConfig

_BOOL_TRUE = {"true", "on", "yes", "1"}
_BOOL_FALSE = {"false", "off", "no", "0"}

# key -> (type tag, default); None default means "derived later"
KEYS = {
    "seed": ("int", 42),
    "particles": ("int", 1000),
    "inactive": ("int", 2),
    "active": ("int", 5),
    "mode": ("str", "event"),
    "sort": ("bool", True),
    "sort_every_n": ("int", 1),
    "max_in_flight": ("int", 10000),
    "tally_mode": ("str", "fused"),
    "accel": ("str", "binary"),
    "workers": ("int", 1),
    "reduction": ("str", "deterministic"),
    "alpha_scatter": ("float", 0.5),
    "fission_temperature": ("float", 1.3e6),
    "fuel_radius": ("float", DEFAULT_FUEL_RADIUS),
    "pitch": ("float", DEFAULT_PITCH),
    "height": ("float", DEFAULT_HEIGHT),
    "n_axial": ("int", None),
    "preset": ("str", "depleted_pincell"),
    "library": ("str", None),
    "fuel_nuclides": ("int", presets.DEFAULT_FUEL_NUCLIDES),
    "moderator_nuclides": ("int", presets.DEFAULT_MODERATOR_NUCLIDES),
    "gridpoints": ("int", presets.DEFAULT_GRIDPOINTS),
}


def _convert(key: str, raw: str, where: str):
    kind, _ = KEYS[key]
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"{where}: key '{key}' needs an integer, "
                                     f"got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"{where}: key '{key}' needs a number, "
                                     f"got {raw!r}") from None
    if kind == "bool":
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigurationError(f"{where}: key '{key}' needs a boolean, "
                                 f"got {raw!r}")
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse key = value lines; unknown keys name the key and line."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{source}, line {lineno}: expected 'key = value', "
                f"got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in KEYS:
            raise ConfigurationError(
                f"{source}, line {lineno}: unknown config key '{key}'")
        values[key] = _convert(key, raw, f"{source}, line {lineno}")
    return values


def parse_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    return parse_config_text(text, source=path)


def defaults() -> dict:
    return {k: v for k, (_, v) in KEYS.items()}


@dataclass
class Problem:
    """A fully assembled run: parameters, data, geometry."""

    run: RunConfig
    library: object
    pincell: Pincell


def build_problem(values: dict) -> Problem:
    """Assemble RunConfig + library + geometry from merged key values."""
    v = defaults()
    v.update(values)
    run = RunConfig(
        particles_per_batch=v["particles"],
        inactive_batches=v["inactive"],
        active_batches=v["active"],
        mode=v["mode"],
        sort_enabled=v["sort"],
        sort_every_n=v["sort_every_n"],
        max_in_flight=v["max_in_flight"],
        tally_mode=v["tally_mode"],
        accel=v["accel"],
        workers=v["workers"],
        seed=v["seed"],
        reduction=v["reduction"],
        alpha_scatter=v["alpha_scatter"],
        fission_temperature=v["fission_temperature"],
        perturb_particle=v.get("perturb_particle", -1),
    )
    run.validate()

    if v["library"] is not None:
        library = xslib.load_library(v["library"])
        if library.n_materials < 2:
            raise ConfigurationError(
                "library files need at least 2 materials (fuel + moderator)")
        n_axial = v["n_axial"] if v["n_axial"] is not None else 10
        n_fuel_mats = library.n_materials - 1
        pincell = Pincell(
            fuel_radius=v["fuel_radius"], pitch=v["pitch"],
            height=v["height"], n_axial=n_axial,
            fuel_material_ids=[k % n_fuel_mats for k in range(n_axial)],
            moderator_material_id=library.n_materials - 1)
        return Problem(run, library, pincell)

    preset = v["preset"]
    if preset == "depleted_pincell":
        n_axial = v["n_axial"] if v["n_axial"] is not None else presets.DEFAULT_N_AXIAL
        library, base = presets.depleted_pincell(
            n_fuel_nuclides=v["fuel_nuclides"],
            n_moderator_nuclides=v["moderator_nuclides"],
            gridpoints=v["gridpoints"], n_axial=n_axial)
        pincell = Pincell(
            fuel_radius=v["fuel_radius"], pitch=v["pitch"],
            height=v["height"], n_axial=n_axial,
            fuel_material_ids=base.fuel_material_ids,
            moderator_material_id=base.moderator_material_id)
        return Problem(run, library, pincell)
    if preset == "analytic_k":
        library, pincell = presets.analytic_infinite_medium()
        return Problem(run, library, pincell)
    raise ConfigurationError(f"unknown preset {preset!r}")
