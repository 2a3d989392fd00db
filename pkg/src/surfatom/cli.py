"""Command-line pipeline: config in, CSV (plus JSON sidecar) out.

Subcommands mirror the library layers: ``validity`` (potential landmarks),
``solve-levels`` (bound energies), ``fc-matrix`` (transition overlaps),
``level-rates`` (per-level decay), ``spectrum`` (detuning sweep with peak
extraction), ``dynamics-check`` (reduced-ODE vs adiabatic populations).

Every run emits a resolved-config echo: next to the output file as
``<stem>.resolved.json`` when writing to a file, on stderr otherwise.
Numbers are printed with 12 significant digits so reruns from a warm
cache are byte-identical.

Exit codes: 0 success, 2 configuration/parameter errors, 3 numerical
failures, 4 cache corruption (the offending entry is already removed;
rerunning recomputes it).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ENV_CACHE_DIR, EigenstateCache
from .config import RunConfig, build_profile, build_runconfig, load_config
from .dynamics import standard_checks
from .eigensolver import Channel, LevelSet, make_channels
from .errors import (
    CacheCorruptionError,
    ConfigError,
    ParameterError,
    ProfileFormatError,
    SurfatomError,
)
from .franck_condon import build_matrix
from .model import boltzmann_energy_hz, reflection_coefficient
from .potential import SurfacePotential, centrifugal_radius
from .rates import level_rates
from .spectrum import (
    SpectrumRequest,
    flat_bound_mixture,
    sweep,
    thermal_mixture,
)

_EXIT_CONFIG = 2
_EXIT_NUMERICAL = 3
_EXIT_CACHE = 4


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _emit(args, header: tuple[str, ...], rows, resolved: dict) -> None:
    """Write one CSV table plus the resolved-config echo."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    echo = json.dumps(resolved, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        out.with_suffix(".resolved.json").write_text(echo)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
        sys.stderr.write(echo)


def _runconfig(args) -> RunConfig:
    rc = build_runconfig(load_config(args.config))
    if getattr(args, "threads", None):
        rc.resolved["threads"] = args.threads
    if getattr(args, "cache_dir", None):
        rc.resolved["cache_dir"] = str(args.cache_dir)
    return rc


def _cache(rc: RunConfig) -> EigenstateCache:
    return EigenstateCache(rc.resolved["cache_dir"])


def _parse_nu_range(text: str) -> range:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ParameterError(f"--nu expects N or N..M, got {text!r}") from None
    if lo > hi or lo < 0:
        raise ParameterError(f"--nu range {text!r} must be 0 <= lo <= hi")
    return range(lo, hi + 1)


def _mixture_and_channelset(rc: RunConfig, cache: EigenstateCache,
                            chg: Channel, che: Channel):
    """Initial mixture plus the ground-side description for CSV headers."""
    mix_cfg = rc.resolved["mixture"]
    if mix_cfg["kind"] == "thermal-free":
        free = rc.resolved["basis"]["free"]
        temp_k = mix_cfg["temperature_uK"] * 1e-6
        kt = boltzmann_energy_hz(temp_k)
        mixture = thermal_mixture(
            rc.atom, SurfacePotential(rc.atom.ground), temp_k,
            e_cut_hz=free["e_cut_over_kT"] * kt,
            n_nodes=free["n_nodes"],
            e_min_hz=free["e_min_kHz"] * 1e3,
            channel=chg, cache=cache)
        return mixture, "E_b_MHz"
    levels = cache.bound_levels(chg, rc.nu_b, label="ground")
    return flat_bound_mixture(levels, mix_cfg["nu_min"], mix_cfg["nu_max"]), "nu_b"


def _excited(rc: RunConfig, cache: EigenstateCache, che: Channel) -> LevelSet:
    return cache.bound_levels(che, rc.nu_a, label="excited")


# -- subcommands -----------------------------------------------------------


def _cmd_validity(args) -> int:
    rc = _runconfig(args)
    lz = args.lz if args.lz is not None else rc.resolved["lz"]
    rows = []
    for name, params in (("ground", rc.atom.ground), ("excited", rc.atom.excited)):
        pot = SurfacePotential(params)
        xb, vb = pot.barrier_top
        xm, vm = pot.well_minimum
        rows += [(f"x_wall_{name}_nm", xb), (f"V_barrier_{name}_Hz", vb),
                 (f"x_min_{name}_nm", xm), (f"V_min_{name}_THz", vm / 1e12)]
    rows.append(("r_c_nm", centrifugal_radius(
        rc.atom.ground.c3_hz_nm3, rc.atom.kinetic_coeff, lz)))
    rows.append(("l_z", lz))
    rows.append(("reflection_R", rc.field.reflection_r))
    rows.append(("wavelength_nm", 2.0 * np.pi / rc.field.k_inv_nm))
    _emit(args, ("quantity", "value"), rows, rc.resolved)
    return 0


def _cmd_solve_levels(args) -> int:
    rc = _runconfig(args)
    chg, che = make_channels(rc.atom, rc.policy)
    ch = chg if args.state == "ground" else che
    nus = _parse_nu_range(args.nu) if args.nu else (
        rc.nu_b if args.state == "ground" else rc.nu_a)
    levels = _cache(rc).bound_levels(ch, nus, label=args.state)
    rows = [(st.nu, st.energy_hz / 1e6, st.x_outer_nm) for st in levels.states]
    _emit(args, ("nu", "energy_MHz", "x_outer_nm"), rows, rc.resolved)
    return 0


def _cmd_fc_matrix(args) -> int:
    rc = _runconfig(args)
    cache = _cache(rc)
    chg, che = make_channels(rc.atom, rc.policy)
    excited = _excited(rc, cache, che)
    mixture, bcol = _mixture_and_channelset(rc, cache, chg, che)
    fc = build_matrix(excited, mixture.states, rc.field.k_inv_nm,
                      threads=rc.resolved["threads"])
    rows = []
    for i, sa in enumerate(excited.states):
        for j, sb in enumerate(mixture.states):
            bkey = sb.nu if bcol == "nu_b" else sb.energy_hz / 1e6
            f = fc.values[i, j]
            rows.append((sa.nu, bkey, f.real, f.imag, abs(f) ** 2))
    _emit(args, ("nu_a", bcol, "Re_F", "Im_F", "absF2"), rows, rc.resolved)
    return 0


def _cmd_level_rates(args) -> int:
    rc = _runconfig(args)
    chg, che = make_channels(rc.atom, rc.policy)
    excited = _excited(rc, _cache(rc), che)
    profile = build_profile(rc.resolved["profile"], rc.atom.gamma0_hz)
    rates = level_rates(profile, excited)
    rows = [(nu, g / 1e6, gc / 1e6) for nu, g, gc in
            zip(rates.nus, rates.gamma_hz, rates.gamma_channel_hz)]
    _emit(args, ("nu_a", "gamma_a_MHz", "gamma_channel_MHz"), rows, rc.resolved)
    return 0


def _cmd_spectrum(args) -> int:
    rc = _runconfig(args)
    cache = _cache(rc)
    chg, che = make_channels(rc.atom, rc.policy)
    excited = _excited(rc, cache, che)
    mixture, _ = _mixture_and_channelset(rc, cache, chg, che)
    profile = build_profile(rc.resolved["profile"], rc.atom.gamma0_hz)
    rates = level_rates(profile, excited)
    det = rc.resolved["detuning"]
    spec = rc.resolved["spectrum"]
    req = SpectrumRequest(
        field=rc.field, mixture=mixture, excited=excited, rates=rates,
        gamma0_hz=rc.atom.gamma0_hz,
        delta_min_hz=det["min_MHz"] * 1e6, delta_max_hz=det["max_MHz"] * 1e6,
        delta_step_hz=det["step_MHz"] * 1e6,
        channel=spec["channel"], use_reflection=spec["use_reflection"],
        fc_threads=rc.resolved["threads"])
    result = sweep(req)

    out = Path(args.out or rc.resolved["output"]["path"] or "spectrum.csv")
    args.out = str(out)
    rows = list(zip(result.delta_hz / 1e6, result.gamma_hz))
    _emit(args, ("delta_MHz", "Gamma_Hz"), rows, rc.resolved)
    sidecar = {
        "delta_peak_MHz": None if result.delta_peak_hz is None
        else result.delta_peak_hz / 1e6,
        "fwhm_MHz": None if result.fwhm_hz is None else result.fwhm_hz / 1e6,
        "asymmetry": result.asymmetry,
        "peak_at_boundary": result.peak_at_boundary,
        "edge_warning": result.edge_warning,
        "provenance": result.metadata,
        "resolved_config": rc.resolved,
    }
    side = out.with_suffix(".json")
    side.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=float) + "\n")
    peak = sidecar["delta_peak_MHz"]
    width = sidecar["fwhm_MHz"]
    print(f"delta_peak_MHz={'' if peak is None else f'{peak:.4f}'} "
          f"fwhm_MHz={'' if width is None else f'{width:.4f}'} "
          f"sidecar={side}")
    return 0


def _cmd_dynamics_check(args) -> int:
    rc = _runconfig(args)
    refl = rc.field.reflection_r if rc.resolved["spectrum"]["use_reflection"] else 0.0
    rows = standard_checks(rc.atom.gamma0_hz,
                           saturation_s=rc.field.saturation_s,
                           reflection_r=refl)
    _emit(args, ("case", "level", "rel_error"),
          [(case, lvl, err) for case, lvl, err in rows], rc.resolved)
    worst = max(err for _, _, err in rows)
    print(f"worst rel_error={worst:.3e}", file=sys.stderr)
    return 0


# -- entry point ------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config (defaults used if omitted)")
    p.add_argument("--cache-dir",
                   help=f"eigenstate cache directory (default: ${ENV_CACHE_DIR} "
                        "or ~/.cache/surfatom)")
    p.add_argument("--threads", type=int, help="worker threads for matrix fills")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="surfatom",
        description="Translational levels, transition factors, and excitation "
                    "spectra of an atom in a surface potential.")
    ap.add_argument("--version", action="version", version=f"surfatom {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validity",
                       help="potential landmarks, centrifugal radius, reflection")
    p.add_argument("--lz", type=int, help="azimuthal quantum number for r_c")
    _add_common(p)
    p.set_defaults(func=_cmd_validity)

    p = sub.add_parser("solve-levels", help="bound-level energies for one state")
    p.add_argument("--state", choices=("ground", "excited"), required=True)
    p.add_argument("--nu", help="level range N..M (default: config basis)")
    _add_common(p)
    p.set_defaults(func=_cmd_solve_levels)

    p = sub.add_parser("fc-matrix",
                       help="transition matrix elements excited x initial basis")
    _add_common(p)
    p.set_defaults(func=_cmd_fc_matrix)

    p = sub.add_parser("level-rates", help="per-level decay rates under the profile")
    _add_common(p)
    p.set_defaults(func=_cmd_level_rates)

    p = sub.add_parser("spectrum", help="detuning sweep with peak extraction")
    _add_common(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("dynamics-check",
                       help="reduced-ODE vs adiabatic populations on toy bases")
    _add_common(p)
    p.set_defaults(func=_cmd_dynamics_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, ProfileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except CacheCorruptionError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return _EXIT_CACHE
    except SurfatomError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
