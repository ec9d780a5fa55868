"""Experiment-runner command line.

Reads one declarative YAML config per run, dispatches to the library,
and writes one CSV per result table plus a JSON summary.  Configs are
strict: unknown keys are rejected, stochastic experiments must carry a
seed, and identical (config, seed) pairs reproduce the CSV tables byte
for byte.  Outputs are staged under temporary names and renamed only
after every file has been written, so failures leave no partial runs.

    photonlab run config.yaml [--seed N] [--out DIR] [--quiet]
    photonlab list

The default output root is $PHOTONLAB_OUT, falling back to ./runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from . import __version__, dispersion, metrology, oam_imaging
from .fock import FockError, expectation
from .sources import BiphotonSpectrum

SCHEMA_VERSION = 1
ENV_OUT = "PHOTONLAB_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[str, ...]   # headers carry units, e.g. "delta_phi[rad]"
    rows: tuple[tuple, ...]


@dataclass(frozen=True)
class ResultBundle:
    experiment: str
    config: dict
    tables: tuple[Table, ...]
    summary: dict
    version: str = __version__
    timestamp: float = field(default_factory=time.time)


@dataclass(frozen=True)
class Param:
    name: str
    kind: str          # int | float | str | int-list | float-list
    default: object
    help: str = ""


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    demonstrates: str
    params: tuple[Param, ...]
    runner: Callable[[dict, int | None], ResultBundle]
    stochastic: bool


def _coerce(param: Param, value):
    try:
        if param.kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return int(value)
        if param.kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if param.kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if param.kind == "int-list":
            if not isinstance(value, list) or not value:
                raise TypeError
            return [int(v) for v in value]
        if param.kind == "float-list":
            if not isinstance(value, list) or not value:
                raise TypeError
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {param.name!r} expects {param.kind}, got {value!r}")
    raise ConfigError(f"unknown parameter kind {param.kind}")


def _validate_params(exp: Experiment, raw: dict) -> dict:
    known = {p.name: p for p in exp.params}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {exp.name}: {', '.join(unknown)}")
    out = {}
    for p in exp.params:
        out[p.name] = _coerce(p, raw[p.name]) if p.name in raw else p.default
    return out


# ---------------------------------------------------------------------------
# experiment runners


def _run_sql_scaling(params: dict, seed: int | None) -> ResultBundle:
    fit = metrology.scaling_experiment(
        "independent-photons",
        params["trial_grid"],
        params["repetitions"],
        seed,
        working_point=params["working_point"],
    )
    rows = tuple(
        (int(n), 1.0 / math.sqrt(n), d) for (n, d) in fit.points
    )
    table = Table("scaling", ("n_trials[1]", "delta_phi_analytic[rad]", "delta_phi_mc[rad]"), rows)
    summary = {
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "expected_slope": -0.5,
    }
    return ResultBundle("sql-scaling", params, (table,), summary)


def _run_heisenberg_scaling(params: dict, seed: int | None) -> ResultBundle:
    fit = metrology.scaling_experiment(
        "noon",
        params["photon_grid"],
        params["repetitions"],
        seed,
        working_point=params["working_point"],
        shots_per_estimate=params["shots_per_estimate"],
    )
    shots = params["shots_per_estimate"]
    rows = tuple((int(n), 1.0 / n, d * math.sqrt(shots)) for (n, d) in fit.points)
    table = Table(
        "scaling",
        ("n_photons[1]", "delta_phi_analytic[rad]", "delta_phi_mc_single_shot[rad]"),
        rows,
    )
    summary = {
        "slope": fit.slope,
        "slope_stderr": fit.slope_stderr,
        "expected_slope": -1.0,
        "shots_per_estimate": shots,
    }
    return ResultBundle("heisenberg-scaling", params, (table,), summary)


def _run_angular(params: dict, seed: int | None) -> ResultBundle:
    l = params["l"]
    proto = metrology.AngularDisplacementProtocol(l)
    thetas = np.linspace(0.0, 2.0 * math.pi, params["theta_points"], endpoint=False)
    rows = []
    max_dev = 0.0
    for theta in thetas:
        simulated = expectation(proto.state(float(theta)), proto.observable)
        analytic = proto.mean(float(theta))
        max_dev = max(max_dev, abs(simulated - analytic))
        rows.append((float(theta), analytic, simulated))
    table = Table("fringe", ("theta[rad]", "rate_analytic[1]", "rate_simulated[1]"), tuple(rows))
    rates = np.array([r[2] for r in rows])
    summary = {
        "l": l,
        "visibility": dispersion.fringe_visibility(rates),
        "max_abs_deviation": max_dev,
        "delta_theta_single_shot[rad]": proto.analytic_uncertainty(math.pi / (8 * proto.n_photons * l)),
    }
    return ResultBundle("angular", params, (table,), summary)


def _make_object(params: dict) -> oam_imaging.ObjectProfile:
    grid = oam_imaging.PolarGrid(params["n_radial"], params["n_angular"], 6.0 * params["w0"])
    kind = params["object"]
    if kind == "disk":
        return oam_imaging.disk_object(grid, radius=params["radius"] * params["w0"])
    if kind == "letter":
        return oam_imaging.letter_mask_object(grid, params["w0"])
    if kind == "harmonic":
        return oam_imaging.angular_harmonic_object(grid, params["q"], params["w0"])
    raise ConfigError(f"unknown object kind {kind!r}")


def _run_spiral(params: dict, seed: int | None) -> ResultBundle:
    profile = _make_object(params)
    if params["rotation"] != 0.0:
        profile = oam_imaging.rotate_object(profile, params["rotation"])
    spectrum = oam_imaging.project_object(
        profile, params["w0"], params["l_max"], params["p_max"]
    )
    rows = tuple(
        (l, p, a.real, a.imag, abs(a) ** 2)
        for (l, p), a in sorted(spectrum.coefficients.items())
    )
    table = Table("spectrum", ("l[1]", "p[1]", "re[1]", "im[1]", "power[1]"), rows)
    summary = {
        "object": params["object"],
        "symmetry_order": oam_imaging.detect_rotational_symmetry(spectrum),
        "residual": spectrum.residual,
        "captured_power": spectrum.total_power(),
    }
    return ResultBundle("spiral", params, (table,), summary)


def _run_doppler(params: dict, seed: int | None) -> ResultBundle:
    rows = []
    expected = []
    measured = []
    for l in params["l_values"]:
        for rate in params["rotation_rates"]:
            meas = oam_imaging.rotational_doppler_beat(
                l, rate, params["omega"], params["duration"], params["sample_rate"]
            )
            rows.append((l, rate, meas.beat, 2.0 * l * rate, meas.resolution))
            expected.append(2.0 * l * rate)
            measured.append(meas.beat)
    table = Table(
        "beats",
        ("l[1]", "rotation_rate[rad/s]", "beat_measured[rad/s]", "beat_expected[rad/s]", "bin[rad/s]"),
        tuple(rows),
    )
    expected_arr = np.array(expected)
    measured_arr = np.array(measured)
    ss_res = float(np.sum((measured_arr - expected_arr) ** 2))
    ss_tot = float(np.sum((expected_arr - expected_arr.mean()) ** 2))
    summary = {
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        "max_bin_error": float(np.max(np.abs(measured_arr - expected_arr) / np.array([r[4] for r in rows]))),
    }
    return ResultBundle("doppler", params, (table,), summary)


def _run_dispersion(params: dict, seed: int | None) -> ResultBundle:
    spectrum = BiphotonSpectrum.gaussian(
        params["omega0"], params["sigma"], n_bins=params["n_bins"]
    )
    taus = np.linspace(-params["tau_span"], params["tau_span"], params["tau_points"])
    medium = dispersion.DispersionProfile(tuple(params["beta"]), params["length"])
    config = params["configuration"]
    if config == "hom":
        gram = dispersion.hom_interferogram(spectrum, taus, signal=medium)
        empty = dispersion.hom_interferogram(spectrum, taus)
    elif config == "skc":
        gram = dispersion.skc_interferogram(spectrum, medium, taus, include_fringes=False)
        empty = dispersion.skc_interferogram(spectrum, dispersion.VACUUM_PROFILE, taus, include_fringes=False)
    elif config == "franson":
        gram = dispersion.franson_interferogram(spectrum, medium, taus)
        empty = dispersion.correlation_envelope(spectrum, taus)
    else:
        raise ConfigError(f"unknown dispersion configuration {config!r}")
    envelope = np.abs(gram.kernel) ** 2
    rows = tuple(
        (float(t), float(r), float(e))
        for t, r, e in zip(gram.scan, gram.rates, envelope)
    )
    table = Table("interferogram", ("tau[fs]", "rate[1]", "envelope[1]"), rows)
    beta2 = params["beta"][2] * params["length"]
    baseline = dispersion.classical_baseline(
        dispersion.PulseSpectrum.gaussian(params["sigma"]),
        dispersion.DispersionProfile((0.0, 0.0, params["beta"][2], 0.0), params["length"]),
    )
    summary = {
        "configuration": config,
        "envelope_center[fs]": dispersion.envelope_center(gram),
        "envelope_rms_width[fs]": dispersion.envelope_rms_width(gram),
        "width_ratio_vs_empty": dispersion.envelope_rms_width(gram) / dispersion.envelope_rms_width(empty),
        "classical_broadening_same_beta2": baseline.broadening,
        "beta2_L[fs^2]": beta2,
    }
    return ResultBundle("dispersion", params, (table,), summary)


def _run_ramsey(params: dict, seed: int | None) -> ResultBundle:
    times = np.linspace(params["t_min"], params["t_max"], params["t_points"])
    rows = tuple(
        (float(t), metrology.ramsey_fringe(params["omega"], float(t))) for t in times
    )
    table = Table("fringe", ("t[s]", "mean_A[1]"), rows)
    result = metrology.ramsey_frequency_estimate(
        params["omega"],
        params["t_probe"],
        atoms=params["atoms"],
        trials=params["trials"],
        seed=seed,
        method=params["method"],
    )
    summary = {
        "omega_estimate[rad/s]": result.estimate,
        "delta_omega[rad/s]": result.uncertainty,
        "resources": result.resources,
        "method": result.method,
    }
    return ResultBundle("ramsey", params, (table,), summary)


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            "sql-scaling",
            "Monte Carlo phase estimation with independent single photons",
            "shot-noise 1/sqrt(N) scaling of the interferometric phase uncertainty",
            (
                Param("trial_grid", "int-list", [16, 64, 256, 1024, 4096], "trial counts per estimate"),
                Param("repetitions", "int", 400, "independent estimates per grid point"),
                Param("working_point", "float", math.pi / 2, "true phase in (0, pi)"),
            ),
            _run_sql_scaling,
            stochastic=True,
        ),
        Experiment(
            "heisenberg-scaling",
            "Monte Carlo phase estimation with N-photon entangled probes",
            "entangled 1/N scaling and the N-fold fringe compression",
            (
                Param("photon_grid", "int-list", [1, 2, 3, 4, 5], "entangled photon numbers"),
                Param("repetitions", "int", 500, "independent estimates per grid point"),
                Param("shots_per_estimate", "int", 256, "readout shots per estimate"),
                Param("working_point", "float", 0.4, "true phase; N*phi must stay in (0, pi)"),
            ),
            _run_heisenberg_scaling,
            stochastic=True,
        ),
        Experiment(
            "angular",
            "entangled-pair angular displacement fringe through the prism interferometer",
            "super-resolved cos^2(2 l theta) coincidence fringe and 1/(2Nl) sensitivity",
            (
                Param("l", "int", 2, "topological charge of the pair"),
                Param("theta_points", "int", 101, "prism angles over one turn"),
            ),
            _run_angular,
            stochastic=False,
        ),
        Experiment(
            "spiral",
            "digital spiral decomposition of a synthetic object",
            "object identification and rotational-symmetry readout from the charge spectrum",
            (
                Param("object", "str", "harmonic", "disk | letter | harmonic"),
                Param("q", "int", 3, "angular harmonic order (harmonic object)"),
                Param("radius", "float", 2.0, "disk radius in waists (disk object)"),
                Param("w0", "float", 1.0, "probe beam waist"),
                Param("l_max", "int", 6, "charge cutoff"),
                Param("p_max", "int", 2, "radial cutoff"),
                Param("rotation", "float", 0.0, "rigid rotation applied to the object"),
                Param("n_radial", "int", 128, "radial quadrature nodes"),
                Param("n_angular", "int", 256, "angular samples"),
            ),
            _run_spiral,
            stochastic=False,
        ),
        Experiment(
            "doppler",
            "rotational Doppler beat of counter-wound reflected beams",
            "beat frequency 2 l Omega, linear in both charge and rotation rate",
            (
                Param("l_values", "int-list", [5, 10, 20], "topological charges"),
                Param("rotation_rates", "float-list", [0.3, 0.5, 0.8], "body rotation rates, rad/s"),
                Param("omega", "float", 1000.0, "optical carrier, rad/s"),
                Param("duration", "float", 200.0, "record length, s"),
                Param("sample_rate", "float", 100.0, "intensity sampling rate, Hz"),
            ),
            _run_doppler,
            stochastic=False,
        ),
        Experiment(
            "dispersion",
            "biphoton coincidence interferogram through dispersive media",
            "even-order dispersion cancellation against the classically broadened baseline",
            (
                Param("configuration", "str", "hom", "hom | skc | franson"),
                Param("sigma", "float", 0.3, "marginal spectral std, rad/fs"),
                Param("omega0", "float", 2.35, "center frequency, rad/fs"),
                Param("beta", "float-list", [0.0, 0.0, 22.0, 0.0], "beta_0..beta_3, fs^n per unit length"),
                Param("length", "float", 1.0, "medium length"),
                Param("tau_span", "float", 12.0, "delay scan half-range, fs"),
                Param("tau_points", "int", 241, "delay samples"),
                Param("n_bins", "int", 512, "detuning bins"),
            ),
            _run_dispersion,
            stochastic=False,
        ),
        Experiment(
            "ramsey",
            "atomic transition-frequency readout by pulse interrogation",
            "the interferometric fringe cos(omega t) and 1/(N t) frequency uncertainty",
            (
                Param("omega", "float", 1.0, "transition frequency, rad/s"),
                Param("t_min", "float", 0.1, "fringe scan start, s"),
                Param("t_max", "float", 6.0, "fringe scan end, s"),
                Param("t_points", "int", 60, "fringe samples"),
                Param("t_probe", "float", math.pi / 3, "interrogation time for the estimate, s"),
                Param("atoms", "int", 1, "entangled atoms per probe"),
                Param("trials", "int", 1000, "ensemble repetitions"),
                Param("method", "str", "analytic", "analytic | monte-carlo"),
            ),
            _run_ramsey,
            stochastic=False,
        ),
    ]
}


# ---------------------------------------------------------------------------
# config handling and output


def load_config(path: Path) -> dict:
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    allowed = {"schema_version", "experiment", "seed", "out", "params"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choices: {', '.join(sorted(EXPERIMENTS))}"
        )
    params = raw.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping")
    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    return {"experiment": name, "seed": seed, "out": raw.get("out"), "params": params}


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(table: Table) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue().encode()


def _render_summary(bundle: ResultBundle, seed: int | None) -> bytes:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": bundle.experiment,
        "params": bundle.config,
        "seed": seed,
        "summary": bundle.summary,
        "tables": [t.name for t in bundle.tables],
        "version": bundle.version,
        "timestamp": bundle.timestamp,
    }
    return (json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n").encode()


def write_bundle(bundle: ResultBundle, out_dir: Path, seed: int | None) -> list[Path]:
    """Two-phase write: stage everything, then rename into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged: list[tuple[Path, Path]] = []
    payload: dict[str, bytes] = {f"{t.name}.csv": _render_csv(t) for t in bundle.tables}
    payload["summary.json"] = _render_summary(bundle, seed)
    try:
        for fname, blob in payload.items():
            tmp = out_dir / f".tmp-{os.getpid()}-{fname}"
            tmp.write_bytes(blob)
            staged.append((tmp, out_dir / fname))
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    return [final for _, final in staged]


def run_experiment(config: dict, seed_override: int | None = None, out_override: str | None = None) -> tuple[ResultBundle, Path]:
    exp = EXPERIMENTS[config["experiment"]]
    seed = seed_override if seed_override is not None else config["seed"]
    if exp.stochastic and seed is None:
        raise ConfigError(f"experiment {exp.name!r} is stochastic; a seed is mandatory")
    params = _validate_params(exp, config["params"])
    bundle = exp.runner(params, seed)
    out_root = out_override or config["out"] or os.environ.get(ENV_OUT, "runs")
    out_dir = Path(out_root)
    if out_override is None and config["out"] is None:
        out_dir = out_dir / exp.name
    return bundle, out_dir


def list_experiments() -> str:
    lines = []
    for name in sorted(EXPERIMENTS):
        exp = EXPERIMENTS[name]
        lines.append(f"{name}")
        lines.append(f"  {exp.description}")
        lines.append(f"  demonstrates: {exp.demonstrates}")
        lines.append(f"  stochastic: {'yes (seed required)' if exp.stochastic else 'no'}")
        for p in exp.params:
            lines.append(f"    {p.name} ({p.kind}, default {p.default!r}): {p.help}")
        lines.append("")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="photonlab", description="quantum-optics experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute one experiment config")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", type=str, default=None, help="override the output directory")
    run_p.add_argument("--quiet", action="store_true")
    sub.add_parser("list", help="print the experiment catalog")
    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_experiments())
        return EXIT_OK

    try:
        config = load_config(args.config)
        bundle, out_dir = run_experiment(config, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FockError, ValueError) as exc:
        print(f"numerical failure in {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    seed = args.seed if args.seed is not None else config["seed"]
    paths = write_bundle(bundle, out_dir, seed)
    if not args.quiet:
        for key, value in sorted(bundle.summary.items()):
            print(f"{key}: {value}")
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
