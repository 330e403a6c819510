"""Command-line front end: config-driven sweeps, scaling fits, chain
studies and oracle checks, emitted as CSV with JSON sidecars.

Every output CSV gets a sidecar <stem>.json holding the fully resolved
configuration (defaults filled in, overrides applied) plus the package
version, so re-running that configuration regenerates the file content
bit for bit.  Exit codes: 0 success, 1 numerical failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    StudySpec,
    chain_noise_sweep,
    ratio_sweep,
    scaling_exponent,
    scaling_sweep,
)
from .config import (
    ConfigError,
    geometry_from_resolved,
    kernel_from_resolved,
    load_config,
    orientations_from_resolved,
    preset_names,
    resolve_config,
)
from .geometry import build_grid, make_patch_map
from .mc import mc_ensemble_noise
from .modes import chain_modes, two_ion_basis
from .noise import IonConfiguration, noise_matrix


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _write_sidecar(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _ori_label(echo_vec, index: int) -> str:
    for axis, unit in zip("xyz", ([1, 0, 0], [0, 1, 0], [0, 0, 1])):
        if all(abs(c - u) < 1e-12 for c, u in zip(echo_vec, unit)):
            return "u" + axis
    return f"u{index}"


def _cases(resolved):
    """(axis, orientation_echo, suffix) per output file."""
    axes = resolved["motion_axis"]
    oris = resolved["orientation"]
    ori_list = oris if oris is not None else [None]
    out = []
    for ax in axes:
        for i, ov in enumerate(ori_list):
            parts = []
            if len(axes) > 1:
                parts.append(ax)
            if len(ori_list) > 1:
                parts.append(_ori_label(ov, i))
            suffix = ("_" + "_".join(parts)) if parts else ""
            out.append((ax, ov, suffix))
    return out


def _case_config(resolved, axis, ori_echo) -> dict:
    """The resolved config specialized to one (axis, orientation) case."""
    case = dict(resolved)
    case["motion_axis"] = [axis]
    case["orientation"] = None if ori_echo is None else [list(ori_echo)]
    return case


def _spec_for(resolved, axis, ori_echo, geometry, kernel, height, separation,
              threads) -> StudySpec:
    ori = None if ori_echo is None else orientations_from_resolved([ori_echo])[0]
    return StudySpec(
        geometry=geometry,
        motion_axis=axis,
        orientation=ori,
        kernel=kernel,
        height=height,
        separation=separation,
        source_kind=resolved["source_kind"],
        resolution=resolved["grid"]["resolution"],
        refine_factor=resolved["grid"]["refine_factor"],
        patch_seed=resolved["kernel"]["patch_seed"],
        num_threads=threads,
    )


def _run_sweep(resolved, out_dir: Path, threads: int) -> int:
    geometry = geometry_from_resolved(resolved["geometry"])
    kernel = kernel_from_resolved(resolved["kernel"])
    sw = resolved["sweep"]
    basis = two_ion_basis() if sw["with_modes"] else None
    outputs = []
    for axis, ori_echo, suffix in _cases(resolved):
        spec = _spec_for(resolved, axis, ori_echo, geometry, kernel,
                         sw["height"], sw["separation"], threads)
        result = ratio_sweep(spec, sw["variable"], tuple(sw["range"]),
                             sw["points"], basis=basis)
        header = [sw["variable"], "S_self", "S_cross", "ratio"]
        cols = [result.values, result.s_self, result.s_cross, result.ratio]
        if basis is not None:
            for j, par in enumerate(basis.parity):
                header.append(f"S_mode{j}_{par}")
                cols.append(result.mode_s[:, j])
        outputs.append((suffix, axis, ori_echo, header, list(zip(*cols))))
    base = resolved["output"]["basename"]
    for suffix, axis, ori_echo, header, rows in outputs:
        stem = out_dir / (base + suffix)
        _write_csv(stem.with_suffix(".csv"), header, rows)
        _write_sidecar(stem.with_suffix(".json"), {
            "mode": "sweep",
            "version": __version__,
            "csv": stem.with_suffix(".csv").name,
            "columns": header,
            "config": _case_config(resolved, axis, ori_echo),
        })
    return 0


def _local_slopes(d: np.ndarray, s: np.ndarray) -> np.ndarray:
    t, y = np.log(d), np.log(s)
    out = np.empty_like(t)
    out[1:-1] = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    out[0] = (y[1] - y[0]) / (t[1] - t[0])
    out[-1] = (y[-1] - y[-2]) / (t[-1] - t[-2])
    return out


def _run_scaling(resolved, out_dir: Path, threads: int) -> int:
    kernel = kernel_from_resolved(resolved["kernel"])
    sc = resolved["scaling"]
    axis = resolved["motion_axis"][0]
    oris = resolved["orientation"]
    ori_list = oris if oris is not None else [None]
    header = ["ion_height"]
    cols = []
    fits = {}
    for i, ov in enumerate(ori_list):
        ori = None if ov is None else orientations_from_resolved([ov])[0]
        result = scaling_sweep(
            axis, ori, kernel, tuple(sc["range"]), sc["points"],
            nodes_per_height=sc["nodes_per_height"],
            source_kind=resolved["source_kind"],
            refine_factor=resolved["grid"]["refine_factor"],
            num_threads=threads,
        )
        label = "" if len(ori_list) == 1 else "_" + _ori_label(ov, i)
        if not cols:
            cols.append(result.values)
        header += [f"S{label}", f"slope{label}"]
        cols += [result.s_self, _local_slopes(result.values, result.s_self)]
        fit = scaling_exponent(result, window=sc["window"])
        fits[f"window_fit{label}"] = {
            "centers": [float(c) for c in fit.centers],
            "slopes": [float(v) for v in fit.slopes],
            "window": fit.window,
            "break_point": fit.break_point,
        }
    base = resolved["output"]["basename"]
    stem = out_dir / base
    _write_csv(stem.with_suffix(".csv"), header, list(zip(*cols)))
    _write_sidecar(stem.with_suffix(".json"), {
        "mode": "scaling",
        "version": __version__,
        "csv": stem.with_suffix(".csv").name,
        "columns": header,
        "config": resolved,
        **fits,
    })
    return 0


def _run_chain(resolved, out_dir: Path, threads: int) -> int:
    geometry = geometry_from_resolved(resolved["geometry"])
    kernel = kernel_from_resolved(resolved["kernel"])
    ch = resolved["chain"]
    axis = resolved["motion_axis"][0]
    ori_echo = None if resolved["orientation"] is None else resolved["orientation"][0]
    basis = chain_modes(ch["n_ions"], spacing=1.0, omega0=ch["omega0"])
    spec = _spec_for(resolved, axis, ori_echo, geometry, kernel,
                     ch["height"], None, threads)
    result = chain_noise_sweep(spec, basis, tuple(ch["range"]), ch["points"])
    header = ["ion_spacing"] + [
        f"S_mode{j}_{par}" for j, par in enumerate(basis.parity)
    ]
    rows = list(zip(result.values, *result.mode_s.T))
    base = resolved["output"]["basename"]
    stem = out_dir / base
    _write_csv(stem.with_suffix(".csv"), header, rows)
    _write_sidecar(stem.with_suffix(".json"), {
        "mode": "chain",
        "version": __version__,
        "csv": stem.with_suffix(".csv").name,
        "columns": header,
        "parity": list(basis.parity),
        "config": resolved,
    })
    return 0


def _run_oracle_check(resolved, out_dir: Path, threads: int) -> int:
    geometry = geometry_from_resolved(resolved["geometry"])
    kernel = kernel_from_resolved(resolved["kernel"])
    oc = resolved["oracle"]
    axis = resolved["motion_axis"][0]
    ori_echo = None if resolved["orientation"] is None else resolved["orientation"][0]
    ori = None if ori_echo is None else orientations_from_resolved([ori_echo])[0]
    grid = build_grid(geometry, resolved["grid"]["resolution"])
    if kernel.kind == "patch":
        grid = grid.with_patch_map(
            make_patch_map(grid, kernel.xi, resolved["kernel"]["patch_seed"])
        )
    ions = IonConfiguration.two_ions(oc["separation"], oc["height"], axis)
    nm = noise_matrix(ions, grid, ori, kernel,
                      source_kind=resolved["source_kind"], num_threads=threads)
    s_det = nm.s.copy()
    if oc["corrupt_sign"]:
        # fault-injection hook: emulate a sign error in one ion's field
        s_det[0, 1] *= -1.0
        s_det[1, 0] *= -1.0
    est = mc_ensemble_noise(ions, grid, ori, kernel, oc["samples"], oc["seed"],
                            source_kind=resolved["source_kind"])
    z = (s_det - est.s_hat) / est.stderr
    entries = [
        {"i": i, "j": j, "z": float(z[i, j]), "pass": bool(abs(z[i, j]) <= 3.0)}
        for i in range(2) for j in range(2)
    ]
    verdict = bool(all(e["pass"] for e in entries))
    payload = {
        "mode": "oracle-check",
        "version": __version__,
        "pass": verdict,
        "max_abs_z": float(np.max(np.abs(z))),
        "entries": entries,
        "deterministic": s_det.tolist(),
        "estimate": est.s_hat.tolist(),
        "stderr": est.stderr.tolist(),
        "clipped_mass": est.clipped_mass,
        "n_nodes": grid.n_nodes,
        "config": resolved,
    }
    stem = out_dir / resolved["output"]["basename"]
    _write_sidecar(stem.with_suffix(".json"), payload)
    return 0 if verdict else 1


_RUNNERS = {
    "sweep": _run_sweep,
    "scaling": _run_scaling,
    "chain": _run_chain,
    "oracle-check": _run_oracle_check,
}


def _list_presets() -> int:
    for name in preset_names():
        raw = load_config(name)
        desc = raw.get("description", "") if isinstance(raw, dict) else ""
        print(f"{name:14s} {desc}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ionnoise",
        description="Correlated electric-field noise studies for trapped ions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run a {name} configuration")
        p.add_argument("--config", required=True,
                       help="YAML config path or shipped preset name")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=0,
                       help="cap worker threads (0 = library default)")
        p.add_argument("--resolution", type=float, default=None,
                       help="override grid resolution (nodes per unit length)")
    sub.add_parser("presets", help="list shipped figure presets")
    args = parser.parse_args(argv)

    if args.command == "presets":
        return _list_presets()

    try:
        raw = load_config(args.config)
        resolved = resolve_config(raw, args.command)
        if args.resolution is not None:
            if not args.resolution > 0:
                raise ConfigError("--resolution must be positive")
            resolved["grid"]["resolution"] = float(args.resolution)
        out_dir = Path(args.out)
        if out_dir.exists() and not out_dir.is_dir():
            raise ConfigError(f"output path {args.out!r} is not a directory")
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    try:
        return _RUNNERS[args.command](resolved, out_dir, args.threads)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error[numerical]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
