"""Declarative run configuration: strict YAML loading and resolution.

A config file fully determines a run.  Loading is strict: unknown keys
are rejected, and every omitted optional key is filled with its
documented default, so the resolved dictionary echoed into the JSON
sidecar regenerates the same outputs bit for bit.
"""
from __future__ import annotations

from importlib import resources

import yaml

from .geometry import Annulus, Disk, ElectrodeGeometry, Rectangle, preset_geometry
from .kernels import CorrelationKernel, DipoleOrientation


class ConfigError(ValueError):
    pass


_AXES = ("x", "y", "z")
_SOURCE_KINDS = ("dipole", "monopole")
_SECTION_KEYS = {
    None: {"description", "geometry", "motion_axis", "orientation", "source_kind",
           "kernel", "grid", "sweep", "scaling", "chain", "oracle", "output"},
    "geometry": {"preset", "scale", "regions"},
    "kernel": {"kind", "xi", "patch_seed"},
    "grid": {"resolution", "refine_factor"},
    "sweep": {"variable", "height", "separation", "range", "points", "with_modes"},
    "scaling": {"range", "points", "nodes_per_height", "window"},
    "chain": {"n_ions", "height", "range", "points", "omega0"},
    "oracle": {"separation", "height", "samples", "seed", "corrupt_sign"},
    "output": {"basename"},
}
_REGION_KEYS = {
    "rectangle": {"type", "x_min", "x_max", "z_min", "z_max"},
    "disk": {"type", "cx", "cz", "radius"},
    "annulus": {"type", "cx", "cz", "r_inner", "r_outer"},
}


def _check_keys(section, mapping):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {section or 'top level'!r} must be a mapping")
    allowed = _SECTION_KEYS[section]
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {section or 'top level'}"
        )


def _number(cfg, section, key, default=None, required=False, positive=False):
    val = cfg.get(key, default)
    if val is None:
        if required:
            raise ConfigError(f"{section}.{key} is required")
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{section}.{key} must be positive, got {val}")
    return float(val)


def _integer(cfg, section, key, default=None, required=False, minimum=None):
    val = cfg.get(key, default)
    if val is None:
        if required:
            raise ConfigError(f"{section}.{key} is required")
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{section}.{key} must be >= {minimum}, got {val}")
    return int(val)


def _range_pair(cfg, section, key):
    val = cfg.get(key)
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val)):
        raise ConfigError(f"{section}.{key} must be a [lo, hi] number pair")
    lo, hi = float(val[0]), float(val[1])
    if not (0 < lo < hi):
        raise ConfigError(f"{section}.{key} must satisfy 0 < lo < hi")
    return [lo, hi]


def _build_region(entry):
    if not isinstance(entry, dict) or "type" not in entry:
        raise ConfigError(f"region entries need a 'type' key, got {entry!r}")
    kind = entry["type"]
    if kind not in _REGION_KEYS:
        raise ConfigError(f"unknown region type {kind!r}")
    unknown = set(entry) - _REGION_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in region {kind}")
    missing = _REGION_KEYS[kind] - set(entry)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in region {kind}")
    params = {k: v for k, v in entry.items() if k != "type"}
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"region {kind}.{k} must be a number")
    cls = {"rectangle": Rectangle, "disk": Disk, "annulus": Annulus}[kind]
    return cls(**{k: float(v) for k, v in params.items()})


def _resolve_geometry(cfg):
    _check_keys("geometry", cfg)
    has_preset = "preset" in cfg
    has_regions = "regions" in cfg
    if has_preset == has_regions:
        raise ConfigError("geometry needs exactly one of 'preset' or 'regions'")
    if has_preset:
        scale = _number(cfg, "geometry", "scale", default=1.0, positive=True)
        try:
            geo = preset_geometry(cfg["preset"], scale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return geo, {"preset": cfg["preset"], "scale": scale}
    entries = cfg["regions"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("geometry.regions must be a non-empty list")
    regions = tuple(_build_region(e) for e in entries)
    return ElectrodeGeometry(regions, name="custom"), {"regions": entries}


def _resolve_orientations(cfg, source_kind):
    raw = cfg.get("orientation")
    if source_kind == "monopole":
        if raw is not None:
            raise ConfigError("monopole sources take no orientation")
        return [None], None
    if raw is None:
        raise ConfigError("dipole sources need an orientation")
    if (isinstance(raw, list) and len(raw) == 3
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)):
        raw_list = [raw]
    elif isinstance(raw, list) and all(isinstance(v, list) for v in raw):
        raw_list = raw
    else:
        raise ConfigError("orientation must be a 3-vector or a list of 3-vectors")
    out = []
    for vec in raw_list:
        if len(vec) != 3:
            raise ConfigError(f"orientation {vec!r} is not a 3-vector")
        try:
            out.append(DipoleOrientation(*(float(c) for c in vec)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return out, [[o.ux, o.uy, o.uz] for o in out]


def _resolve_axes(cfg):
    raw = cfg.get("motion_axis")
    if raw is None:
        raise ConfigError("motion_axis is required")
    axes = [raw] if isinstance(raw, str) else raw
    if not isinstance(axes, list) or not axes or any(a not in _AXES for a in axes):
        raise ConfigError(f"motion_axis must be one or more of {_AXES}, got {raw!r}")
    return axes


def _resolve_kernel(cfg):
    sec = cfg.get("kernel")
    if sec is None:
        raise ConfigError("kernel section is required")
    _check_keys("kernel", sec)
    kind = sec.get("kind")
    xi = _number(sec, "kernel", "xi", default=None, positive=True)
    seed = _integer(sec, "kernel", "patch_seed", default=0)
    try:
        kernel = CorrelationKernel(kind=kind, xi=xi)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if kind == "patch" and xi is None:
        raise ConfigError("patch kernel needs xi (the patch scale)")
    return kernel, {"kind": kind, "xi": xi, "patch_seed": seed}


def resolve_config(raw: dict, mode: str) -> dict:
    """Validate a parsed config for a run mode and fill in every default.

    Returns a plain dictionary that is also the sidecar payload; feeding
    it back through this function is the identity.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    _check_keys(None, raw)
    if mode not in ("sweep", "scaling", "chain", "oracle-check"):
        raise ConfigError(f"unknown run mode {mode!r}")

    source_kind = raw.get("source_kind", "dipole")
    if source_kind not in _SOURCE_KINDS:
        raise ConfigError(f"source_kind must be one of {_SOURCE_KINDS}")
    axes = _resolve_axes(raw)
    _, orient_echo = _resolve_orientations(raw, source_kind)
    _, kernel_echo = _resolve_kernel(raw)

    grid = raw.get("grid", {})
    _check_keys("grid", grid)
    grid_echo = {
        "resolution": _number(grid, "grid", "resolution", default=4.0, positive=True),
        "refine_factor": _integer(grid, "grid", "refine_factor", default=2, minimum=2),
    }

    out_sec = raw.get("output", {})
    _check_keys("output", out_sec)
    basename = out_sec.get("basename", mode.replace("-", "_"))
    if not isinstance(basename, str) or not basename:
        raise ConfigError("output.basename must be a non-empty string")

    resolved = {
        "description": raw.get("description", ""),
        "motion_axis": axes,
        "orientation": orient_echo,
        "source_kind": source_kind,
        "kernel": kernel_echo,
        "grid": grid_echo,
        "output": {"basename": basename},
    }
    if not isinstance(resolved["description"], str):
        raise ConfigError("description must be a string")

    needs_geometry = mode in ("sweep", "chain", "oracle-check")
    if needs_geometry:
        if "geometry" not in raw:
            raise ConfigError(f"{mode} runs need a geometry section")
        _, geo_echo = _resolve_geometry(raw["geometry"])
        resolved["geometry"] = geo_echo
    elif "geometry" in raw:
        _, geo_echo = _resolve_geometry(raw["geometry"])
        resolved["geometry"] = geo_echo

    if mode == "sweep":
        sec = raw.get("sweep")
        if sec is None:
            raise ConfigError("sweep runs need a sweep section")
        _check_keys("sweep", sec)
        variable = sec.get("variable", "ion_separation")
        if variable not in ("ion_separation", "ion_height"):
            raise ConfigError(f"unknown sweep variable {variable!r}")
        separation = _number(sec, "sweep", "separation", default=None, positive=True)
        if variable == "ion_height" and separation is None:
            raise ConfigError("sweep over ion_height needs sweep.separation")
        resolved["sweep"] = {
            "variable": variable,
            "height": _number(sec, "sweep", "height", default=1.0, positive=True),
            "separation": separation,
            "range": _range_pair(sec, "sweep", "range"),
            "points": _integer(sec, "sweep", "points", required=True, minimum=2),
            "with_modes": bool(sec.get("with_modes", False)),
        }
    elif mode == "scaling":
        sec = raw.get("scaling")
        if sec is None:
            raise ConfigError("scaling runs need a scaling section")
        _check_keys("scaling", sec)
        if len(axes) != 1:
            raise ConfigError("scaling runs take a single motion_axis")
        resolved["scaling"] = {
            "range": _range_pair(sec, "scaling", "range"),
            "points": _integer(sec, "scaling", "points", required=True, minimum=2),
            "nodes_per_height": _number(sec, "scaling", "nodes_per_height",
                                        default=4.0, positive=True),
            "window": _integer(sec, "scaling", "window", default=5, minimum=3),
        }
    elif mode == "chain":
        sec = raw.get("chain")
        if sec is None:
            raise ConfigError("chain runs need a chain section")
        _check_keys("chain", sec)
        resolved["chain"] = {
            "n_ions": _integer(sec, "chain", "n_ions", required=True, minimum=2),
            "height": _number(sec, "chain", "height", default=1.0, positive=True),
            "range": _range_pair(sec, "chain", "range"),
            "points": _integer(sec, "chain", "points", required=True, minimum=2),
            "omega0": _number(sec, "chain", "omega0", default=1.0, positive=True),
        }
        if len(axes) != 1:
            raise ConfigError("chain runs take a single motion_axis")
        if len(orient_echo or [None]) != 1:
            raise ConfigError("chain runs take a single orientation")
    else:
        sec = raw.get("oracle")
        if sec is None:
            raise ConfigError("oracle-check runs need an oracle section")
        _check_keys("oracle", sec)
        resolved["oracle"] = {
            "separation": _number(sec, "oracle", "separation", default=1.0,
                                  positive=True),
            "height": _number(sec, "oracle", "height", default=1.0, positive=True),
            "samples": _integer(sec, "oracle", "samples", required=True, minimum=2),
            "seed": _integer(sec, "oracle", "seed", default=0),
            "corrupt_sign": bool(sec.get("corrupt_sign", False)),
        }
        if len(axes) != 1:
            raise ConfigError("oracle-check runs take a single motion_axis")
        if len(orient_echo or [None]) != 1:
            raise ConfigError("oracle-check runs take a single orientation")

    return resolved


def preset_names() -> list[str]:
    files = resources.files("ionnoise").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def load_config(path_or_name: str) -> dict:
    """Parse YAML from a file path or a shipped preset name."""
    presets = resources.files("ionnoise").joinpath("presets")
    candidate = presets.joinpath(path_or_name + ".yaml")
    if "/" not in path_or_name and candidate.is_file():
        text = candidate.read_text()
    else:
        try:
            with open(path_or_name) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path_or_name!r}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path_or_name!r}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config {path_or_name!r} is empty")
    return data


def geometry_from_resolved(echo: dict) -> ElectrodeGeometry:
    if "preset" in echo:
        return preset_geometry(echo["preset"], echo["scale"])
    regions = tuple(_build_region(e) for e in echo["regions"])
    return ElectrodeGeometry(regions, name="custom")


def kernel_from_resolved(echo: dict) -> CorrelationKernel:
    return CorrelationKernel(kind=echo["kind"], xi=echo["xi"])


def orientations_from_resolved(echo) -> list:
    if echo is None:
        return [None]
    return [DipoleOrientation(*vec) for vec in echo]
