"""Configuration-driven experiments with deterministic CSV/JSON output.

A config file is flat ``key = value`` text, one experiment per file; every
key is either a physical parameter (in units of g) or an option of the named
experiment, and unknown keys are rejected.  Identical configs produce
byte-identical result files: data sections carry no run metadata, and the
provenance comment block holds only the resolved parameter set and the
engine version.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .hamiltonians import SystemParams
from .lindblad import standard_liouvillian, steady_state
from .perturbation import (
    REPORT_LABELS,
    match_exact_energies,
    perturbation_report,
)
from .protocols import (
    MEASUREMENT_STATES,
    RampSchedule,
    analytic_variance,
    driven_oscillation_run,
    effective_model,
    hopping_interchange_probe,
    mechanism_table,
    numeric_variance,
    ramp_experiment,
)
from .spectroscopy import (
    absorption_spectrum,
    absorption_spectrum_analytic,
    default_frequency_grid,
    find_peaks,
)
from .hilbert import annihilation_at

PARAM_KEYS = tuple(f.name for f in fields(SystemParams))


@dataclass
class ExperimentResult:
    columns: dict
    summary: dict


def _peak_dict(report):
    return {
        "positions": [float(x) for x in report.positions],
        "heights": [float(x) for x in report.heights],
        "widths": [float(x) for x in report.widths],
        "asymmetry": report.asymmetry,
    }


# ---------------------------------------------------------------------------
# experiment runners


def _run_spectrum(params: SystemParams, options: dict) -> ExperimentResult:
    grid = default_frequency_grid(params, int(options["n_points"]))
    liouv = standard_liouvillian(params)
    rho_ss = steady_state(liouv)
    numeric = absorption_spectrum(liouv, rho_ss, annihilation_at(params.dims, 0), grid, params)
    analytic = absorption_spectrum_analytic(params, grid)
    return ExperimentResult(
        columns={"omega": grid, "S_numeric": numeric.values, "S_analytic": analytic.values},
        summary={
            "peaks_numeric": _peak_dict(find_peaks(numeric)),
            "peaks_analytic": _peak_dict(find_peaks(analytic)),
            "relative_sup_error": float(
                np.max(np.abs(numeric.values - analytic.values)) / np.max(analytic.values)
            ),
        },
    )


def _run_two_cavity_spectrum(params: SystemParams, options: dict) -> ExperimentResult:
    grid = default_frequency_grid(params, int(options["n_points"]))
    liouv = standard_liouvillian(params)
    rho_ss = steady_state(liouv)
    numeric = absorption_spectrum(liouv, rho_ss, annihilation_at(params.dims, 0), grid, params)
    return ExperimentResult(
        columns={"omega": grid, "S_numeric": numeric.values},
        summary={"peaks_numeric": _peak_dict(find_peaks(numeric))},
    )


def _run_driven_oscillation(params: SystemParams, options: dict) -> ExperimentResult:
    traj, summary = driven_oscillation_run(
        params, t_final=float(options["t_final"]), samples=int(options["samples"])
    )
    return ExperimentResult(
        columns={
            "t": traj.times,
            "P_1plus": traj.observables["P_1plus"],
            "P_1minus": traj.observables["P_1minus"],
            "P_ground": traj.observables["P_ground"],
            "coherence": traj.observables["coherence"],
        },
        summary={
            "period_extracted": summary["period_extracted"],
            "period_analytic": summary["period_analytic"],
            "rabi_frequency_analytic": summary["rabi_frequency_analytic"],
            "maxima_times": [float(t) for t in summary["maxima_times"]],
        },
    )


def _run_rwa_probe(params: SystemParams, options: dict) -> ExperimentResult:
    samples = int(options["samples"])
    first = hopping_interchange_probe(params, "1-,0", samples=samples)
    second = hopping_interchange_probe(params, "2-,0", samples=samples)
    return ExperimentResult(
        columns={
            "t": first["times"],
            "p_up_from_1minus": first["probability"],
            "p_up_from_2minus": second["probability"],
        },
        summary={
            "max_p_up_from_1minus": first["max_probability"],
            "max_p_up_from_2minus": second["max_probability"],
            "targets": {"1-,0": first["target"], "2-,0": second["target"]},
        },
    )


_STATE_COLUMN = {
    "1-,1-": "p_1m_1m",
    "1+,1+": "p_1p_1p",
    "2-,0": "p_2m_0",
    "0,2-": "p_0_2m",
    "2+,0": "p_2p_0",
    "0,2+": "p_0_2p",
}


def _run_ramp(params: SystemParams, options: dict) -> ExperimentResult:
    schedule = RampSchedule.default(
        params,
        mode=int(options["mode"]),
        n_points=int(options["n_points"]),
        delta_min=float(options["delta_min"]),
        delta_max=float(options["delta_max"]),
    )
    points = ramp_experiment(
        schedule,
        params,
        initial=str(options["initial"]),
        time_dependent=bool(options["time_dependent"]),
        strict_pulses=bool(options["strict_ramp"]),
        hold_samples=int(options["hold_samples"]),
        threads=int(options["threads"]),
    )
    columns = {
        "delta": [p.delta for p in points],
        "var": [p.var for p in points],
        "p_lp": [p.branch_populations["lp"] for p in points],
        "p_up": [p.branch_populations["up"] for p in points],
    }
    for spec in MEASUREMENT_STATES:
        columns[_STATE_COLUMN[spec]] = [p.state_probabilities[spec] for p in points]
    return ExperimentResult(
        columns=columns,
        summary={
            "mode": schedule.mode,
            "pulse_time": schedule.pulse_time,
            "hold_time": schedule.hold_time,
            "time_dependent": bool(options["time_dependent"]),
            "initial": str(options["initial"]),
        },
    )


def _run_table1(params: SystemParams, options: dict) -> ExperimentResult:
    rows = mechanism_table(n_fock=params.n_fock, omega_c=params.omega_c)
    columns = {
        key: [row[key] for row in rows]
        for key in (
            "mechanism",
            "control",
            "n_cavities",
            "initial",
            "coherence_max",
            "interchange_probability",
            "interchange_state",
        )
    }
    return ExperimentResult(columns=columns, summary={"rows": rows})


def _run_variance_compare(params: SystemParams, options: dict) -> ExperimentResult:
    hoppings = [float(j) for j in np.atleast_1d(options["hopping_values"])]
    deltas = [float(d) for d in np.atleast_1d(options["delta_values"])]
    columns = {
        "hopping": [],
        "delta": [],
        "branch": [],
        "var_numeric": [],
        "var_analytic": [],
        "abs_error": [],
        "rel_error": [],
    }
    for j in hoppings:
        for delta in deltas:
            for branch in ("-", "+"):
                p = params.with_(hopping=j, delta=delta)
                numeric = numeric_variance(p, branch, int(options["hold_samples"]))
                analytic = analytic_variance(effective_model(p, branch), j)
                err = abs(numeric - analytic)
                columns["hopping"].append(j)
                columns["delta"].append(delta)
                columns["branch"].append(branch)
                columns["var_numeric"].append(numeric)
                columns["var_analytic"].append(analytic)
                columns["abs_error"].append(err)
                columns["rel_error"].append(err / numeric if numeric > 0 else 0.0)
    return ExperimentResult(
        columns=columns,
        summary={
            "diagonal_form": "energy",
            "max_rel_error_large_var": max(
                (r for r, v in zip(columns["rel_error"], columns["var_numeric"]) if v >= 0.1),
                default=0.0,
            ),
            "max_abs_error_small_var": max(
                (e for e, v in zip(columns["abs_error"], columns["var_numeric"]) if v < 0.1),
                default=0.0,
            ),
        },
    )


def _run_perturbation_report(params: SystemParams, options: dict) -> ExperimentResult:
    report = perturbation_report(params)
    exact = match_exact_energies(params, REPORT_LABELS)
    columns = {
        "label": list(REPORT_LABELS),
        "e0": [report.e0[k] for k in REPORT_LABELS],
        "e2": [report.e2[k] for k in REPORT_LABELS],
        "e_perturbative": [report.perturbative_energy(k) for k in REPORT_LABELS],
        "e_exact": [exact[k][0] for k in REPORT_LABELS],
        "overlap": [exact[k][1] for k in REPORT_LABELS],
        "residual": [abs(exact[k][0] - report.perturbative_energy(k)) for k in REPORT_LABELS],
    }
    return ExperimentResult(
        columns=columns,
        summary={
            "max_residual": max(columns["residual"]),
            "terms": list(report.terms),
        },
    )


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class ExperimentSpec:
    runner: object
    description: str
    param_defaults: dict
    option_defaults: dict


EXPERIMENTS = {
    "spectrum": ExperimentSpec(
        _run_spectrum,
        "single-cavity absorption spectrum, numeric vs closed form",
        {
            "omega_c": 100.0,
            "delta": 0.0,
            "cavity_decay": 0.5,
            "atom_decay": 0.5,
            "n_fock": 4,
            "n_cavities": 1,
        },
        {"n_points": 2001},
    ),
    "two_cavity_spectrum": ExperimentSpec(
        _run_two_cavity_spectrum,
        "first-cavity absorption spectrum of the hopping-coupled pair",
        {
            "omega_c": 100.0,
            "delta": 0.0,
            "hopping": 1.0,
            "cavity_decay": 0.5,
            "atom_decay": 0.5,
            "n_fock": 2,
            "n_cavities": 2,
        },
        {"n_points": 2001},
    ),
    "driven_oscillation": ExperimentSpec(
        _run_driven_oscillation,
        "branch interchange under strong far-detuned atomic driving",
        {
            "omega_c": 1e4,
            "delta": 0.0,
            "atom_drive": 50.0,
            "atom_drive_detuning": 500.0,
            "cavity_drive_detuning": 500.0,
            "n_fock": 4,
            "n_cavities": 1,
        },
        {"t_final": 4.0, "samples": 8001},
    ),
    "rwa_probe": ExperimentSpec(
        _run_rwa_probe,
        "upper-branch leakage of the closed two-site lattice at g = 10 J",
        {
            "omega_c": 1e4,
            "delta": 0.0,
            "hopping": 0.1,
            "n_fock": 3,
            "n_cavities": 2,
        },
        {"samples": 8001},
    ),
    "ramp": ExperimentSpec(
        _run_ramp,
        "order-parameter sweep over the stroboscopic detuning ramp",
        {
            "omega_c": 1e4,
            "hopping": 0.1,
            "n_fock": 3,
            "n_cavities": 2,
        },
        {
            "mode": 1,
            "time_dependent": True,
            "initial": "1-,1-",
            "n_points": 40,
            "delta_min": 0.1,
            "delta_max": 60.0,
            "hold_samples": 241,
            "strict_ramp": False,
            "threads": 1,
        },
    ),
    "table1": ExperimentSpec(
        _run_table1,
        "coherence and interchange probability of the four control mechanisms",
        {"omega_c": 1e4, "n_fock": 3},
        {},
    ),
    "variance_compare": ExperimentSpec(
        _run_variance_compare,
        "numeric vs closed-form order parameter across hopping and detuning",
        {
            "omega_c": 1e4,
            "n_fock": 3,
            "n_cavities": 2,
        },
        {
            "hopping_values": [0.02, 0.05, 0.1],
            "delta_values": [0.0, 1.0, 5.0],
            "hold_samples": 401,
        },
    ),
    "perturbation_report": ExperimentSpec(
        _run_perturbation_report,
        "weak-drive perturbation series against dense diagonalization",
        {
            "omega_c": 1e4,
            "delta": 0.0,
            "atom_drive": 0.01,
            "cavity_drive": 0.01,
            "atom_drive_detuning": 0.3,
            "cavity_drive_detuning": 0.3,
            "n_fock": 4,
            "n_cavities": 1,
        },
        {},
    ),
}


# ---------------------------------------------------------------------------
# config parsing


def _parse_value(text: str):
    text = text.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        parts = [p.strip() for p in text.split(",")]
        try:
            return [float(p) for p in parts]
        except ValueError:
            pass
    return text


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: SystemParams
    options: dict
    resolved: dict

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        if "experiment" not in mapping:
            raise ConfigError("config is missing the 'experiment' key")
        name = str(mapping["experiment"])
        if name not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {name!r}; known: {', '.join(sorted(EXPERIMENTS))}"
            )
        spec = EXPERIMENTS[name]
        param_values = dict(spec.param_defaults)
        options = dict(spec.option_defaults)
        for key, value in mapping.items():
            if key == "experiment":
                continue
            if key in PARAM_KEYS:
                param_values[key] = value
            elif key in options:
                options[key] = value
            else:
                raise ConfigError(f"unknown key {key!r} for experiment {name!r}")
        try:
            params = SystemParams(**param_values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid parameters: {exc}") from exc
        resolved = {
            "experiment": name,
            **{f"params.{k}": getattr(params, k) for k in PARAM_KEYS},
            **{f"options.{k}": v for k, v in sorted(options.items())},
        }
        return cls(name, params, options, resolved)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        mapping = {}
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in mapping:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = _parse_value(value)
        return cls.from_mapping(mapping)


# ---------------------------------------------------------------------------
# deterministic serialization


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".15g")
    return str(value)


def provenance_lines(resolved: dict) -> list:
    lines = [f"# jchsim {__version__}"]
    for key, value in resolved.items():
        lines.append(f"# {key} = {_format_cell(value)}")
    return lines


def _csv_escape(cell: str) -> str:
    if "," in cell or '"' in cell or "\n" in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell


def write_csv(path, columns: dict, header_lines) -> None:
    names = list(columns)
    length = len(next(iter(columns.values())))
    rows = []
    for i in range(length):
        rows.append(
            ",".join(_csv_escape(_format_cell(columns[name][i])) for name in names)
        )
    text = "\n".join([*header_lines, ",".join(names), *rows]) + "\n"
    Path(path).write_text(text)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def run_experiment(config: ExperimentConfig, output_dir=".", fmt: str = "csv",
                   threads: int = 1, strict_ramp: bool = False) -> list:
    """Execute one experiment and write its artifacts; returns written paths."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    options = dict(config.options)
    if "threads" in options and threads != 1:
        options["threads"] = threads
    if "strict_ramp" in options and strict_ramp:
        options["strict_ramp"] = True
    result = EXPERIMENTS[config.experiment].runner(config.params, options)

    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # the provenance block records the options actually in effect, so files
    # produced with different CLI overrides are distinguishable
    resolved = dict(config.resolved)
    for key, value in options.items():
        resolved[f"options.{key}"] = value
    provenance = {
        "engine": f"jchsim {__version__}",
        **{k: _jsonable(v) for k, v in resolved.items()},
    }
    written = []
    if fmt == "csv":
        csv_path = out_dir / f"{config.experiment}.csv"
        write_csv(csv_path, result.columns, provenance_lines(resolved))
        summary_path = out_dir / f"{config.experiment}.summary.json"
        write_json(summary_path, {"provenance": provenance, "summary": result.summary})
        written.extend([csv_path, summary_path])
    else:
        json_path = out_dir / f"{config.experiment}.json"
        write_json(
            json_path,
            {"provenance": provenance, "summary": result.summary, "data": result.columns},
        )
        written.append(json_path)
    return written
