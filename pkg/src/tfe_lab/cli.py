"""Command-line front end: one subcommand per experiment.

Every run writes its artifacts (CSV, JSON, SVG) into ``<out>/<subcommand>/``
together with ``manifest.json`` holding the resolved configuration, the
SHA-256 of every artifact, library versions and the wall-clock time. Exit
codes: 0 success, 2 invalid parameters, 3 numerical failure.

Configuration precedence is command-line flags, then a flat JSON file given by
``--config``, then built-in defaults. A manifest is also accepted as a config
file, which reproduces the run that wrote it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import PlotStyle, dumps_csv, dumps_json, render_svg, sha256_hex
from .errors import NumericalError, ParameterError

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_NUMERICAL = 3
FORMATS = ("csv", "json", "svg")
DEFAULT_OUT = "out"
OUT_ENV = "TFE_LAB_OUT"
FIGURE1_EXPONENTS = (0.25, 0.5, 0.75, 1.0)
FIGURE3_EXPONENTS = (0.0, 0.2, 0.5, 1.0, 1.5)
FIGURE3_CURVATURES = (-0.3379890, -0.3414702, -0.3490986, -0.3697143, -0.4052680)
PRESETS = ("figure-1", "figure-3")


@dataclass(frozen=True)
class Option:
    """One configuration key with its type, default and help text."""

    name: str
    kind: str
    default: object
    help: str
    flags: tuple = ()

    @property
    def flag_names(self) -> tuple:
        return self.flags or ("--" + self.name.replace("_", "-"),)


def _parse_value(kind: str, raw, name: str):
    """Convert a flag string or JSON value to the option's type.

    Raises
    ------
    ParameterError
        Value of the wrong type.
    """
    try:
        if kind == "float":
            if isinstance(raw, bool):
                raise ValueError
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == "int":
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError
            return int(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "str":
            if not isinstance(raw, (str, int, float)) or isinstance(raw, bool):
                raise ValueError
            return str(raw)
        if kind == "floats":
            items = raw.split(",") if isinstance(raw, str) else list(raw)
            return [float(x) for x in items if str(x).strip() != ""]
        if kind == "formats":
            items = raw.split(",") if isinstance(raw, str) else list(raw)
            out = [str(x).strip().lower() for x in items if str(x).strip()]
            if not out or any(x not in FORMATS for x in out):
                raise ValueError
            return sorted(set(out), key=FORMATS.index)
    except (TypeError, ValueError):
        raise ParameterError(f"invalid value {raw!r} for {name}") from None
    raise ParameterError(f"unknown option kind {kind}")


COMMON = (
    Option("out", "str", None, "output directory (default $TFE_LAB_OUT or ./out)"),
    Option("formats", "formats", list(FORMATS), "comma-separated subset of csv,json,svg"),
)


# --------------------------------------------------------------------------
# runners: each returns (artifacts, results); artifacts maps file name -> text


def _profile_artifacts(profile, stem: str, cfg: dict, title: str, points=None):
    table = profile.table() if points is None else profile.resampled(points)
    out = {f"{stem}.csv": dumps_csv(("y", "F", "dF", "d2F", "d3F"), table),
           f"{stem}.json": dumps_json(profile.as_dict())}
    style = PlotStyle(title=title, xlabel="y", ylabel="F")
    y = np.concatenate([-table[::-1, 0], table[1:, 0]])
    F = np.concatenate([table[::-1, 1], table[1:, 1]])
    out[f"{stem}.svg"] = render_svg([("", y, F)], style)
    return out


def _profile_results(profile) -> dict:
    return {"interface": profile.interface if math.isfinite(profile.interface) else None,
            "mass": profile.mass, "second_deriv_origin": profile.second_deriv_origin,
            "zero_count": profile.zero_count, "normalization": profile.normalization}


def run_profile_explicit(cfg: dict):
    from .profiles import explicit_profile_2m_n1, explicit_profile_n1

    if cfg["n"] != 1.0:
        raise ParameterError("the explicit profile exists for n = 1 only")
    if cfg["m"] == 2:
        profile = explicit_profile_n1(cfg["N"], points=cfg["points"])
    else:
        profile = explicit_profile_2m_n1(cfg["m"], cfg["N"], points=cfg["points"])
    c0 = profile.metadata["c0"]
    resid = float(np.max(np.abs(profile.ode_residual()))) if cfg["m"] == 2 else \
        profile.metadata["max_residual"]
    results = {"c0": f"{c0.numerator}/{c0.denominator}", "c0_value": float(c0),
               "max_residual": resid, **_profile_results(profile)}
    return _profile_artifacts(profile, "profile", cfg, f"explicit profile, N={cfg['N']}"), results


def run_profile_fbp(cfg: dict):
    from .params import ProblemParams
    from .profiles import shoot_fbp_profile

    profile = shoot_fbp_profile(ProblemParams(n=cfg["n"], N=cfg["N"]), rtol=cfg["rtol"],
                                points=cfg["points"])
    results = {"max_residual": float(np.max(np.abs(profile.ode_residual()))),
               **_profile_results(profile)}
    return _profile_artifacts(profile, "profile", cfg, f"FBP profile, n={cfg['n']:g}"), results


def run_profile_cp(cfg: dict):
    from .profiles import shoot_cp_profile

    profile = shoot_cp_profile(cfg["n"], rtol=cfg["rtol"], points=cfg["points"])
    return _profile_artifacts(profile, "profile", cfg, f"CP profile, n={cfg['n']:g}"), \
        _profile_results(profile)


def run_kernel(cfg: dict):
    from .profiles import fundamental_kernel

    profile, bundle = fundamental_kernel(cfg["tol"], points=cfg["points"])
    results = {**_profile_results(profile), "bundle": bundle.as_dict()}
    return _profile_artifacts(profile, "kernel", cfg, "fundamental kernel"), results


def run_kernel_sequence(cfg: dict):
    from .profiles import fbp_kernel_sequence, fundamental_kernel, sup_distance

    if cfg["k_max"] < 1:
        raise ParameterError("k_max must be at least 1")
    kernel, _ = fundamental_kernel()
    rows, series = [], [("kernel", kernel.grid, kernel.values)]
    for k in range(1, cfg["k_max"] + 1):
        prof = fbp_kernel_sequence(k, rtol=cfg["rtol"], points=cfg["points"])
        dist = sup_distance(prof, kernel, cfg["window"])
        rows.append((k, prof.interface, prof.metadata["asymptotic_ratio"], prof.zero_count, dist))
        series.append((f"k={k}", prof.grid, prof.values))
    header = ("k", "support", "asymptotic_ratio", "zero_count", "sup_distance")
    table = [dict(zip(header, r)) for r in rows]
    arts = {"sequence.csv": dumps_csv(header, rows), "sequence.json": dumps_json(table),
            "sequence.svg": render_svg(series, PlotStyle(title="kernel sequence", ylabel="F"))}
    return arts, {"sequence": table}


def run_spectrum(cfg: dict):
    from .params import ProblemParams
    from .spectral import discretize_operator, eigenvalues_closed_form, minimal_index, \
        polynomial_eigenfunctions

    params = ProblemParams(n=cfg["n"], N=cfg["N"], m=cfg["m"])
    ks = [k for k in range(minimal_index(params.m), cfg["k_max"] + 1, 2)]
    results = {"params": params.as_dict()}
    if params.n == 1.0:
        results["closed_form"] = {str(k): eigenvalues_closed_form(params.m, params.N, k) for k in ks}
    rows = []
    arts = {}
    if params.n == 1.0 and params.m == 2:
        spectrum = polynomial_eigenfunctions(params.N, cfg["k_max"])
        gram = spectrum.gram_matrix()
        results["gram_error"] = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
        results["b0"] = spectrum.b0
        arts["eigenfunctions.json"] = dumps_json(spectrum.as_dict())
    discrete = []
    if cfg["grid_size"] > 0 and params.m == 2:
        op = discretize_operator(params, cfg["grid_size"])
        discrete = [float(x) for x in op.eigenvalues(cfg["count"])]
        results["discrete"] = discrete
        results["symmetry_defect"] = op.symmetry_defect() if op.symmetric else None
    for i, lam in enumerate(discrete):
        k = 2 * i
        exact = results.get("closed_form", {}).get(str(k))
        rows.append((k, lam, exact if exact is not None else float("nan")))
    if rows:
        arts["eigenvalues.csv"] = dumps_csv(("k", "discrete", "closed_form"), rows)
        arts["eigenvalues.svg"] = render_svg(
            [("discrete", [r[0] for r in rows], [max(r[1], 1e-300) for r in rows])],
            PlotStyle(title="spectrum", xlabel="k", ylabel="eigenvalue", log_y=True))
    arts["spectrum.json"] = dumps_json(results)
    return arts, results


def run_symmetry_check(cfg: dict):
    from .spectral import symmetry_certificate

    try:
        n = Fraction(cfg["n"])
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"n must be a rational such as 1/2, got {cfg['n']!r}") from None
    verdict = symmetry_certificate(n, cfg["order"])
    data = verdict.as_dict()
    return {"certificate.json": dumps_json(data)}, {"verdict": verdict.verdict,
                                                      "matched_through": verdict.matched_through}


def run_centre(cfg: dict):
    from .centre import PatternEvaluator, gamma_coefficients
    from .params import ProblemParams

    coeffs = gamma_coefficients(ProblemParams(n=cfg["n"], N=cfg["N"], m=cfg["m"]))
    pattern = PatternEvaluator(coeffs.params, coeffs.a_star)
    y = np.linspace(-1.1 * coeffs.a_star, 1.1 * coeffs.a_star, 401)
    F = pattern.profile(y)
    arts = {"centre.json": dumps_json(coeffs.as_dict()),
            "pattern.csv": dumps_csv(("y", "F_star"), zip(y, F)),
            "pattern.svg": render_svg([("", y, F)], PlotStyle(title="limiting profile", ylabel="F*"))}
    return arts, coeffs.as_dict()


def _orbit_artifacts(orbit, title: str):
    s = orbit.phase_grid
    rows = np.column_stack([s, orbit.samples])
    data = {"n": orbit.n, "mu": orbit.mu, "period": orbit.period,
            "section_state": orbit.section_state, "floquet_moduli": orbit.floquet_moduli,
            "phase_multiplier": orbit.phase_multiplier, "closure_defect": orbit.closure_defect,
            "int_dphi_sq": orbit.int_dphi_sq, "int_d2phi_sq": orbit.int_d2phi_sq,
            "energy_identity_defect": orbit.energy_identity_defect(), "amplitude": orbit.amplitude}
    arts = {"orbit.csv": dumps_csv(("s", "phi", "dphi", "d2phi"), rows),
            "orbit.json": dumps_json(data),
            "orbit.svg": render_svg([("phi", s, orbit.samples[:, 0])],
                                    PlotStyle(title=title, xlabel="s", ylabel="phi"))}
    return arts, {k: data[k] for k in ("n", "period", "floquet_moduli", "energy_identity_defect")}


def run_orbit(cfg: dict):
    from .orbits import find_periodic_orbit

    orbit = find_periodic_orbit(cfg["n"], transient=cfg["transient"], samples=cfg["samples"],
                                rtol=cfg["rtol"])
    return _orbit_artifacts(orbit, f"periodic orbit, n={cfg['n']:g}")


def run_orbit_exact(cfg: dict):
    from .orbits import exact_orbit_n1

    return _orbit_artifacts(exact_orbit_n1(cfg["samples"]), "exact orbit, n=1")


def _parse_range(text: str) -> tuple[float, float]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ParameterError(f"range must look like lo:hi, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ParameterError(f"range must look like lo:hi, got {text!r}") from None


def run_bifurcate(cfg: dict):
    from .orbits import heteroclinic_connection_exponent, trace_heteroclinic_bifurcation

    trace = trace_heteroclinic_bifurcation(_parse_range(cfg["range"]), cfg["period_cap"],
                                           cfg["step"], cfg["tol"])
    results = {"n_h_estimate": trace.n_h_estimate, "bracket": list(trace.bracket),
               "period_cap": trace.threshold,
               "failure_reasons": {format(k, ".17g"): v for k, v in sorted(trace.failure_reasons.items())}}
    if cfg["cross_check"]:
        results["connection_exponent"] = heteroclinic_connection_exponent()
    rows = list(zip(trace.n_values, trace.periods))
    arts = {"bifurcation.csv": dumps_csv(("n", "period"), rows),
            "bifurcation.json": dumps_json(results),
            "bifurcation.svg": render_svg([("T(n)", trace.n_values, trace.periods)],
                                          PlotStyle(title="period vs n", xlabel="n", ylabel="T"))}
    return arts, results


def _trace_artifacts(trace, title: str):
    arrays = trace.arrays()
    arts = {"trace.csv": trace.to_csv(), "trace.json": dumps_json(trace.summary()),
            "trace.svg": render_svg([("b_amp", arrays["tau"][1:], arrays["b_amp"][1:])],
                                    PlotStyle(title=title, xlabel="tau", ylabel="sup v",
                                              log_x=True, log_y=True))}
    for t in sorted(trace.snapshots):
        arts[f"snapshot_tau{format(t, '.6g')}.csv"] = trace.snapshots[t].snapshot_csv()
    return arts


def run_simulate_critical(cfg: dict):
    from .pdesim import run_critical_experiment

    trace = run_critical_experiment(cfg["tau_max"], n=cfg["n"], radius=cfg["radius"],
                                    amplitude=cfg["amplitude"], cells_per_radius=cfg["cells_per_radius"],
                                    dtau_max=cfg["dtau_max"],
                                    check_regularization=cfg["check_regularization"],
                                    snapshot_times=tuple(cfg["snapshot_times"]))
    return _trace_artifacts(trace, "critical absorption"), dict(trace.metadata)


def run_simulate_supercritical(cfg: dict):
    from .pdesim import run_supercritical_experiment

    trace = run_supercritical_experiment(cfg["p"], cfg["tau_max"], n=cfg["n"], radius=cfg["radius"],
                                         amplitude=cfg["amplitude"],
                                         cells_per_radius=cfg["cells_per_radius"],
                                         dtau_max=cfg["dtau_max"],
                                         check_regularization=cfg["check_regularization"])
    return _trace_artifacts(trace, f"supercritical absorption, p={cfg['p']:g}"), dict(trace.metadata)


def _figure1_member(n: float):
    from .params import ProblemParams
    from .profiles import shoot_fbp_profile

    return shoot_fbp_profile(ProblemParams(n=n))


def _figure3_member(n: float):
    from .profiles import shoot_cp_profile

    return shoot_cp_profile(n)


def _fan_out(worker, values, workers: int):
    if workers == 1:
        return [worker(v) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, values))


def run_preset(cfg: dict):
    name = cfg["name"]
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    workers = cfg["workers"] or min(len(FIGURE3_EXPONENTS), os.cpu_count() or 1)
    if workers < 1:
        raise ParameterError("workers must be positive")
    exponents = FIGURE1_EXPONENTS if name == "figure-1" else FIGURE3_EXPONENTS
    worker = _figure1_member if name == "figure-1" else _figure3_member
    profiles = _fan_out(worker, exponents, workers)
    arts, series, table = {}, [], []
    for i, (n, prof) in enumerate(zip(exponents, profiles)):
        sub = f"run-{i:02d}-n{format(n, 'g')}"
        if name == "figure-1":
            grid, values = prof.grid, prof.values
        else:
            grid, values = prof.grid, prof.values / prof.values[0]
        arts[f"{sub}/profile.csv"] = dumps_csv(("y", "F", "dF", "d2F", "d3F"), prof.table())
        arts[f"{sub}/profile.json"] = dumps_json(prof.as_dict())
        series.append((f"n={format(n, 'g')}", np.concatenate([-grid[::-1], grid[1:]]),
                       np.concatenate([values[::-1], values[1:]])))
        row = {"n": n, "second_deriv_origin": prof.second_deriv_origin,
               "interface": prof.interface if math.isfinite(prof.interface) else None}
        if name == "figure-3":
            row["reference"] = FIGURE3_CURVATURES[i]
            row["difference"] = prof.second_deriv_origin - FIGURE3_CURVATURES[i]
        table.append(row)
    header = tuple(table[0].keys())
    arts["table.csv"] = dumps_csv(header, [[("" if r[h] is None else r[h]) for h in header] for r in table])
    arts["table.json"] = dumps_json(table)
    title = "FBP profiles, F(0)=1" if name == "figure-1" else "CP profiles, F(0)=1"
    style = PlotStyle(title=title, ylabel="F")
    if name == "figure-3":
        style = PlotStyle(title=title, ylabel="F", extra={"window": 12.0})
        series = [(lbl, y[np.abs(y) <= 12.0], v[np.abs(y) <= 12.0]) for lbl, y, v in series]
    arts["figure.svg"] = render_svg(series, style)
    results = {"preset": name, "table": table}
    if name == "figure-3":
        results["max_difference"] = max(abs(r["difference"]) for r in table)
    return arts, results


COMMANDS = {
    "profile-explicit": (run_profile_explicit, "explicit n=1 profile", (
        Option("n", "float", 1.0, "mobility exponent (must be 1)"),
        Option("N", "int", 1, "space dimension", ("--dim", "--N")),
        Option("m", "int", 2, "half-order of the operator"),
        Option("points", "int", 801, "grid points"))),
    "profile-fbp": (run_profile_fbp, "free-boundary profile by shooting", (
        Option("n", "float", 1.0, "mobility exponent"),
        Option("N", "int", 1, "space dimension", ("--dim", "--N")),
        Option("points", "int", 800, "grid points"),
        Option("rtol", "float", 1e-12, "integrator tolerance"))),
    "profile-cp": (run_profile_cp, "oscillatory Cauchy-problem profile by shooting", (
        Option("n", "float", 0.5, "mobility exponent"),
        Option("points", "int", 2000, "grid points"),
        Option("rtol", "float", 1e-12, "integrator tolerance"))),
    "kernel": (run_kernel, "fundamental kernel of the linear equation", (
        Option("tol", "float", 1e-10, "envelope level at the matching radius"),
        Option("points", "int", 1200, "grid points"))),
    "kernel-sequence": (run_kernel_sequence, "free-boundary kernel sequence", (
        Option("k_max", "int", 8, "largest index"),
        Option("window", "float", 2.0, "half-width of the comparison window"),
        Option("rtol", "float", 1e-12, "integrator tolerance"),
        Option("points", "int", 1200, "grid points"))),
    "spectrum": (run_spectrum, "linearized spectrum", (
        Option("n", "float", 1.0, "mobility exponent"),
        Option("N", "int", 1, "space dimension", ("--dim", "--N")),
        Option("m", "int", 2, "half-order of the operator"),
        Option("k_max", "int", 8, "largest polynomial index"),
        Option("grid_size", "int", 200, "intervals of the discretization (0 skips it)"),
        Option("count", "int", 4, "number of discrete eigenvalues"))),
    "symmetry-check": (run_symmetry_check, "exact series symmetry certificate", (
        Option("n", "str", "1/2", "rational mobility exponent"),
        Option("order", "int", 10, "series order"))),
    "centre": (run_centre, "centre-subspace coefficients", (
        Option("n", "float", 1.0, "mobility exponent (must be 1)"),
        Option("N", "int", 1, "space dimension", ("--dim", "--N")),
        Option("m", "int", 2, "half-order of the operator"))),
    "orbit": (run_orbit, "periodic orbit of the interface oscillation", (
        Option("n", "float", 1.0, "mobility exponent"),
        Option("samples", "int", 2000, "samples per period"),
        Option("rtol", "float", 1e-12, "integrator tolerance"),
        Option("transient", "float", 50.0, "transient before Newton polishing"))),
    "orbit-exact": (run_orbit_exact, "closed-form periodic orbit at n=1", (
        Option("samples", "int", 2000, "samples per period"),)),
    "bifurcate": (run_bifurcate, "continue the orbit in n up to its disappearance", (
        Option("range", "str", "1.6:1.9", "n range lo:hi"),
        Option("period_cap", "float", 50.0, "period beyond which the orbit is declared lost"),
        Option("step", "float", 0.02, "continuation step"),
        Option("tol", "float", 1e-5, "bisection tolerance"),
        Option("cross_check", "bool", False, "also bisect the unstable-manifold fate"))),
    "simulate-critical": (run_simulate_critical, "rescaled PDE at the critical exponent", (
        Option("n", "float", 1.0, "mobility exponent"),
        Option("tau_max", "float", 50.0, "final rescaled time"),
        Option("amplitude", "float", 1.5, "initial amplitude"),
        Option("radius", "float", 3.0, "initial support radius"),
        Option("cells_per_radius", "int", 30, "grid resolution"),
        Option("dtau_max", "float", 0.05, "largest time step"),
        Option("check_regularization", "bool", False, "rerun with half the regularization"),
        Option("snapshot_times", "floats", [], "comma-separated snapshot times"))),
    "simulate-supercritical": (run_simulate_supercritical, "rescaled PDE above the critical exponent", (
        Option("p", "float", 8.0, "absorption exponent"),
        Option("n", "float", 1.0, "mobility exponent"),
        Option("tau_max", "float", 20.0, "final rescaled time"),
        Option("amplitude", "float", 1.0, "initial amplitude"),
        Option("radius", "float", 1.0, "initial support radius"),
        Option("cells_per_radius", "int", 50, "grid resolution"),
        Option("dtau_max", "float", 0.05, "largest time step"),
        Option("check_regularization", "bool", False, "rerun with half the regularization"))),
    "preset": (run_preset, "reproduce a figure (figure-1 or figure-3)", (
        Option("name", "str", None, "preset name", ("name",)),
        Option("workers", "int", 0, "parallel workers (0 picks automatically)"))),
}


def _options(command: str) -> tuple:
    return COMMANDS[command][2] + COMMON


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfe-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tfe-lab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    for name, (_, help_text, _) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="flat JSON config file (or a manifest)")
        for opt in _options(name):
            if opt.flag_names[0].startswith("--"):
                p.add_argument(*opt.flag_names, dest=opt.name, default=None,
                               help=f"{opt.help} (default {opt.default!r})")
            else:
                p.add_argument(opt.name, nargs="?", default=None, help=opt.help)
    return parser


def load_config_file(path) -> dict:
    """Read a flat JSON config; a manifest contributes its ``config`` block.

    Raises
    ------
    ParameterError
        Unreadable file, non-object JSON or nested values.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and "artifacts" in data and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ParameterError("config must be a JSON object")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ParameterError(f"config must be flat; key {key!r} holds an object")
    return data


def resolve_config(command: str, flags: dict, file_config: dict | None = None) -> dict:
    """Merge defaults, file values and flags (highest precedence last).

    Raises
    ------
    ParameterError
        Unknown keys, a file written for another subcommand, or bad values.
    """
    opts = {o.name: o for o in _options(command)}
    file_config = dict(file_config or {})
    named = file_config.pop("subcommand", command)
    if named != command:
        raise ParameterError(f"config was written for {named!r}, not {command!r}")
    unknown = sorted(set(file_config) - set(opts))
    if unknown:
        raise ParameterError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg = {}
    for name, opt in opts.items():
        if flags.get(name) is not None:
            raw = flags[name]
        elif name in file_config:
            raw = file_config[name]
        else:
            raw = opt.default
        cfg[name] = raw if raw is None else _parse_value(opt.kind, raw, name)
    if cfg["out"] is None:
        cfg["out"] = os.environ.get(OUT_ENV, DEFAULT_OUT)
    if command == "preset" and cfg["name"] is None:
        raise ParameterError("preset needs a name: figure-1 or figure-3")
    return {"subcommand": command, **cfg}


def _versions() -> dict:
    import scipy

    from .kernels import BACKEND

    return {"tfe_lab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "kernel_backend": BACKEND}


def _selected(name: str, formats) -> bool:
    return Path(name).suffix.lstrip(".") in formats


def write_run(cfg: dict, artifacts: dict, results: dict, wallclock: float,
              status: str = "ok", diagnostic: str | None = None) -> Path:
    """Write artifacts of the chosen formats and the manifest; returns the manifest path."""
    folder = Path(cfg["out"]) / cfg["subcommand"]
    if cfg["subcommand"] == "preset":
        folder = folder / cfg["name"]
    folder.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(artifacts):
        if not _selected(name, cfg["formats"]):
            continue
        data = artifacts[name].encode("utf-8")
        path = folder / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        entries.append({"path": name, "sha256": sha256_hex(data)})
    manifest = {"config": cfg, "artifacts": entries, "versions": _versions(),
                "wallclock": wallclock, "status": status, "results": results}
    if diagnostic is not None:
        manifest["diagnostic"] = diagnostic
    target = folder / "manifest.json"
    target.write_text(dumps_json(manifest), encoding="utf-8")
    return target


def run_command(argv=None) -> int:
    """Parse ``argv``, run one subcommand and return the exit code (0, 2 or 3)."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PARAMETER
    command = ns.subcommand
    flags = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "config")}
    cfg = None
    start = time.perf_counter()
    try:
        file_config = load_config_file(ns.config) if ns.config else None
        cfg = resolve_config(command, flags, file_config)
        runner = COMMANDS[command][0]
        artifacts, results = runner({k: v for k, v in cfg.items()})
    except ParameterError as exc:
        print(f"tfe-lab {command}: invalid parameters: {exc}", file=sys.stderr)
        if cfg is not None:
            write_run(cfg, {}, {}, time.perf_counter() - start, "parameter-error", str(exc))
        return EXIT_PARAMETER
    except NumericalError as exc:
        print(f"tfe-lab {command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        write_run(cfg, {}, {}, time.perf_counter() - start, "numerical-failure",
                  f"{type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    manifest = write_run(cfg, artifacts, results, time.perf_counter() - start)
    print(manifest)
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
