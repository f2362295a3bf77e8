"""Command-line entry point for the toolkit.

Subcommands cover each layer of the package: exact diagonalization,
momentum-region partition and derived constants, truncated-Fock identity
checks, the nodal boson spectrum, mean-field solvers, and the 1D
correlator.

Conventions shared by every subcommand:

* ``--config FILE`` loads a TOML table whose keys are the snake_case
  option names; unknown keys are rejected.  Precedence is command line
  over config file over built-in defaults (``--threads`` falls back to
  the NODAL_BOSONIZE_THREADS environment variable before its default).
* The fully resolved configuration is echoed under the ``"config"`` key
  of the JSON document printed to stdout, so every artifact records how
  it was produced.  No timestamps are emitted: a rerun with the same
  configuration is byte-identical, for any ``--threads`` value.
* Grid data goes to ``--out`` as CSV (header row, LF line endings, ``.``
  decimals); scalar summaries are JSON with sorted keys.  When ``--out``
  names a ``.json`` path the stdout document is also written there.
* Exit status: 0 on success, 1 on a domain error (instability,
  non-convergence, failed identity check), 2 on a usage error.
* Angle-valued options accept ``0.45pi`` for multiples of pi; sweep
  options accept ``start:stop:count`` (inclusive linspace) or an explicit
  TOML array of samples; lattices are ``1d:N`` or ``2d:NxM``.
* ``--seed`` feeds the iterative eigensolver start vector of ``ed``;
  every other implemented subcommand is deterministic and merely echoes
  the value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

try:  # Python 3.11+
    import tomllib
except ImportError:  # pragma: no cover - exercised only on older runtimes
    import tomli as tomllib

from . import bosonalg, correlators, meanfield
from .bogoliubov import (
    InstabilityError,
    ground_and_free_energy,
    nodal_boson_grid,
    nodal_spectrum,
)
from .continuum import (
    PartitionParams,
    derive_constants,
    momentum_grid,
)
from .ed import DEFAULT_SEED, EDConvergenceError, ground_state
from .lattice import (
    HUBBARD_SPINFUL,
    TV_SPINLESS,
    LatticeSpec,
    ModelParams,
    build_basis,
    build_hamiltonian,
)
from .meanfield import ConvergenceError

__all__ = [
    "UsageError",
    "main",
    "parse_angle",
    "parse_lattice",
    "parse_samples",
]

THREADS_ENV_VAR = "NODAL_BOSONIZE_THREADS"

_MODEL_KINDS = {"tV": TV_SPINLESS, "hubbard": HUBBARD_SPINFUL}


class UsageError(Exception):
    """Bad arguments or config: reported on stderr with exit status 2."""


# --------------------------------------------------------------- parsing


def parse_angle(value: str | float | int) -> float:
    """Float, or a multiple of pi written like ``0.45pi`` (or ``pi``)."""
    if isinstance(value, (int, float)):
        return float(value)
    text = value.strip().lower()
    factor = 1.0
    if text.endswith("pi"):
        factor = math.pi
        text = text[:-2].strip() or "1"
    try:
        return float(text) * factor
    except ValueError:
        raise UsageError(f"cannot parse angle {value!r}") from None


def parse_samples(value: str | Sequence[float]) -> tuple[float, ...]:
    """``start:stop:count`` (inclusive linspace) or an explicit sequence."""
    if not isinstance(value, str):
        return tuple(float(v) for v in value)
    parts = value.split(":")
    if len(parts) != 3:
        raise UsageError(
            f"cannot parse sweep {value!r}: expected start:stop:count"
        )
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"cannot parse sweep {value!r}") from None
    if count < 1:
        raise UsageError(f"sweep {value!r} needs a positive count")
    return tuple(float(x) for x in np.linspace(start, stop, count))


def parse_lattice(value: str) -> LatticeSpec:
    """``1d:N`` or ``2d:NxM`` (antiperiodic boundaries)."""
    text = value.strip().lower()
    try:
        dim_part, size_part = text.split(":")
        if dim_part == "1d":
            return LatticeSpec(1, (int(size_part),))
        if dim_part == "2d":
            nx, ny = size_part.split("x")
            return LatticeSpec(2, (int(nx), int(ny)))
    except (ValueError, TypeError):
        pass
    raise UsageError(
        f"cannot parse lattice {value!r}: expected 1d:N or 2d:NxM"
    )


def _parse_choice(name: str, allowed: tuple[str, ...]) -> Callable:
    def parse(value: str) -> str:
        if value not in allowed:
            raise UsageError(
                f"--{name} must be one of {', '.join(allowed)}; got {value!r}"
            )
        return value

    return parse


def _parse_2d_momentum(value: str | float) -> tuple[float, int]:
    """``n`` or ``n,nt``: longitudinal momentum plus transverse index."""
    if isinstance(value, (int, float)):
        return (float(value), 0)
    parts = value.split(",")
    try:
        if len(parts) == 1:
            return (float(parts[0]), 0)
        if len(parts) == 2:
            return (float(parts[0]), int(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot parse 2D momentum {value!r}: expected n or n,nt")


# ------------------------------------------------------ option machinery


@dataclass(frozen=True)
class _Option:
    name: str  # command-line / config name (kebab on the CLI)
    parse: Callable | None = None  # applied to CLI strings and config values
    default: object = None
    required: bool = False
    flag: bool = False
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


@dataclass
class _RunOutput:
    payload: dict
    csv_data: tuple[tuple[str, ...], list[tuple]] | None = None
    headline: str | None = None
    failed: bool = False
    needs_out: bool = False


_GLOBAL_CONFIG_KEYS = frozenset({"threads", "seed", "out"})


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None


def _resolve_options(
    options: tuple[_Option, ...], ns: argparse.Namespace, config: dict
) -> dict:
    known = {opt.dest for opt in options} | _GLOBAL_CONFIG_KEYS
    unknown = sorted(set(config) - known)
    if unknown:
        raise UsageError(
            f"unknown config keys: {', '.join(unknown)}"
        )
    resolved: dict = {}
    for opt in options:
        value = getattr(ns, opt.dest)
        if value is None and opt.dest in config:
            value = config[opt.dest]
        if value is None:
            value = opt.default
        if value is None:
            if opt.required:
                raise UsageError(f"missing required option --{opt.name}")
            resolved[opt.dest] = None
            continue
        if opt.flag:
            resolved[opt.dest] = bool(value)
        else:
            resolved[opt.dest] = opt.parse(value) if opt.parse else value
    return resolved


def _resolve_threads(ns: argparse.Namespace, config: dict) -> int:
    value = ns.threads
    if value is None:
        value = config.get("threads")
    if value is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise UsageError(
                    f"{THREADS_ENV_VAR}={env!r} is not an integer"
                ) from None
    if value is None:
        value = 1
    value = int(value)
    if value < 1:
        raise UsageError(f"--threads must be positive, got {value}")
    return value


def _jsonable(value):
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, LatticeSpec):
        sizes = "x".join(str(n) for n in value.sites_per_direction)
        return f"{value.dimension}d:{sizes}"
    return value


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(
    path: str, header: tuple[str, ...], rows: list[tuple]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])


# ------------------------------------------------------------ subcommands


def _run_ed(cfg: dict, threads: int, seed: int) -> _RunOutput:
    spec = cfg["lattice"]
    kind = _MODEL_KINDS[cfg["model"]]
    model = ModelParams(
        t=cfg["t"], V=cfg["V"], U=cfg["U"], mu=cfg["mu"], model_kind=kind
    )
    species = 2 if kind == HUBBARD_SPINFUL else 1
    target = cfg["filling"] * spec.n_sites * species
    n_particles = round(target)
    if abs(target - n_particles) > 1e-9:
        raise UsageError(
            f"filling {cfg['filling']} gives a non-integer particle "
            f"count {target} on {spec.n_sites} sites"
        )
    basis = build_basis(spec, n_particles, model_kind=kind)
    hamiltonian = build_hamiltonian(spec, model, basis)
    result = ground_state(
        hamiltonian,
        spec=spec,
        basis=basis,
        seed=seed,
        compute_gap=cfg["gap"],
    )
    payload = {
        "ground_energy": result.ground_energy,
        "energy_per_site": result.ground_energy / spec.n_sites,
        "dimension": basis.dim,
        "n_particles": n_particles,
        "degeneracy": result.degeneracy,
        "method": result.method,
    }
    if cfg["gap"]:
        payload["gap"] = result.gap
    return _RunOutput(payload=payload)


def _run_partition(cfg: dict, threads: int, seed: int) -> _RunOutput:
    params = PartitionParams(
        Q=cfg["Q"], kappa=cfg["kappa"], a=cfg["a"], L=cfg["a"] * cfg["grid"]
    )
    grid = momentum_grid(params)
    period = 2.0 * math.pi / params.a
    rows = [
        (
            math.remainder(float(grid.k1[i]), period),
            math.remainder(float(grid.k2[i]), period),
            int(grid.r[i]),
            int(grid.s[i]),
        )
        for i in range(grid.n_points)
    ]
    counts = {
        f"r={r},s={s}": count
        for (r, s), count in sorted(grid.region_counts().items())
    }
    payload = {"n_points": grid.n_points, "region_counts": counts}
    return _RunOutput(
        payload=payload,
        csv_data=(("k1", "k2", "r", "s"), rows),
        needs_out=True,
    )


def _run_constants(cfg: dict, threads: int, seed: int) -> _RunOutput:
    params = PartitionParams(Q=cfg["Q"], kappa=cfg["kappa"], a=cfg["a"])
    model = ModelParams(t=cfg["t"], V=cfg["V"])
    constants = derive_constants(params, model, mu0=cfg["mu0"])
    return _RunOutput(payload={"derived_constants": constants.as_dict()})


def _identity_output(report: bosonalg.IdentityReport, check: str) -> _RunOutput:
    return _RunOutput(
        payload={"report": report.as_dict()},
        headline=f"{check}: {report.status}",
        failed=report.status == bosonalg.FAIL,
    )


def _run_check_anomaly(cfg: dict, threads: int, seed: int) -> _RunOutput:
    rep = bosonalg.build_sector_pair(
        uv_cutoff_index=cfg["M"],
        transverse_lines=cfg["transverse"] if cfg["dim"] == 2 else 1,
        grading_cap=cfg["grading_cap"],
    )
    if cfg["dim"] == 1:
        report = bosonalg.check_anomaly_1d(
            rep, parse_angle(cfg["p"]), parse_angle(cfg["pprime"])
        )
    else:
        report = bosonalg.check_anomaly_2d(
            rep,
            _parse_2d_momentum(cfg["p"]),
            _parse_2d_momentum(cfg["pprime"]),
        )
    return _identity_output(report, "check-anomaly")


def _run_check_kronig(cfg: dict, threads: int, seed: int) -> _RunOutput:
    grading_cap = cfg["grading_cap"]
    if grading_cap is None:
        grading_cap = float(cfg["M"])
    rep = bosonalg.build_sector_pair(
        uv_cutoff_index=cfg["M"],
        transverse_lines=cfg["transverse"] if cfg["dim"] == 2 else 1,
        grading_cap=grading_cap,
    )
    if cfg["dim"] == 1:
        report = bosonalg.check_kronig_1d(rep)
    else:
        report = bosonalg.check_kronig_2d(rep, a_tilde=cfg["a_tilde"])
    return _identity_output(report, "check-kronig")


def _run_boson_spectrum(cfg: dict, threads: int, seed: int) -> _RunOutput:
    params = PartitionParams(Q=cfg["Q"], kappa=cfg["kappa"], a=cfg["a"])
    constants = derive_constants(params, ModelParams(t=cfg["t"], V=cfg["V"]))
    grid = nodal_boson_grid(params, constants, cfg["grid"])
    rows = nodal_spectrum(
        grid, constants, params, cross_term=cfg["cross_term"], threads=threads
    )
    e0, f_t = ground_and_free_energy(
        grid,
        constants,
        params,
        temperature=cfg["T"],
        cross_term=cfg["cross_term"],
        threads=threads,
    )
    payload = {
        "E0_density": e0,
        "F_density": f_t,
        "derived_constants": constants.as_dict(),
        "n_modes": len(rows),
    }
    return _RunOutput(
        payload=payload,
        csv_data=(("p_plus", "p_minus", "omega_1", "omega_2"), list(rows)),
        needs_out=True,
    )


def _run_meanfield(cfg: dict, threads: int, seed: int) -> _RunOutput:
    if cfg["antinodal"]:
        for key in ("Q", "kappa"):
            if cfg[key] is None:
                raise UsageError(f"--antinodal needs --{key}")
        params = PartitionParams(Q=cfg["Q"], kappa=cfg["kappa"], a=cfg["a"])
        constants = derive_constants(
            params, ModelParams(t=cfg["t"], V=cfg["V"])
        )
        n_k = cfg["grid"] if cfg["grid"] is not None else 128
        state = meanfield.antinodal_mf(
            constants, params, nu_a=cfg["nu_a"], n_k=n_k
        )
        payload = {
            "mode": "antinodal (bare-coupling approximation)",
            "gap": state.gap,
            "gapped": state.gapped,
            "nu_a": state.nu_a,
            "mu": state.mu,
            "energy_density": state.energy_density,
            "derived_constants": constants.as_dict(),
        }
        return _RunOutput(payload=payload)
    if cfg["nu"] is None:
        raise UsageError("meanfield needs --nu (or --antinodal)")
    grid_size = cfg["grid"] if cfg["grid"] is not None else 256
    state = meanfield.minimize_delta(
        cfg["nu"],
        ModelParams(t=cfg["t"], V=cfg["V"]),
        grid_size=grid_size,
        include_fock=cfg["include_fock"],
    )
    payload = {
        "mode": "tV",
        "delta": state.delta,
        "nu": state.nu,
        "mu": state.mu,
        "energy_density": state.energy_density,
    }
    return _RunOutput(payload=payload)


def _run_phase_diagram(cfg: dict, threads: int, seed: int) -> _RunOutput:
    grid = meanfield.phase_diagram(
        cfg["t"],
        cfg["nu"],
        cfg["V"],
        grid_size=cfg["grid"],
        include_fock=cfg["include_fock"],
        threads=threads,
    )
    rows = []
    for iv, v in enumerate(grid.v_values):
        for inu, nu in enumerate(grid.nu_values):
            rows.append(
                (
                    nu,
                    v,
                    grid.labels[iv][inu],
                    grid.delta[iv][inu],
                    grid.energy[iv][inu],
                )
            )
    label_counts: dict[str, int] = {}
    for _, _, label, _, _ in rows:
        label_counts[label] = label_counts.get(label, 0) + 1
    payload = {
        "n_cells": len(rows),
        "label_counts": dict(sorted(label_counts.items())),
    }
    return _RunOutput(
        payload=payload,
        csv_data=(("nu", "V", "label", "delta", "e"), rows),
        needs_out=True,
    )


def _run_correlator(cfg: dict, threads: int, seed: int) -> _RunOutput:
    if cfg["x"] is not None:
        xs = cfg["x"]
    else:
        xs = tuple(
            float(x)
            for x in np.linspace(
                10.0 * cfg["eps"],
                cfg["L"] / 10.0,
                40,
            )
        )
    request = correlators.CorrelatorRequest(
        x_values=xs,
        gamma=cfg["gamma"],
        vF=cfg["vF"],
        epsilon_reg=cfg["eps"],
        L=cfg["L"],
    )
    result = correlators.two_point_1d(request, threads=threads)
    rows = [
        (
            x,
            value,
            correlators.free_two_point_1d(x, cfg["L"], cfg["eps"]),
        )
        for x, value in zip(xs, result.values)
    ]
    payload = {
        "exponent": result.fitted_exponent,
        "residual": result.fit_residual,
        "fit_window": list(result.fit_window),
        "analytic_exponent": correlators.luttinger_exponent(cfg["gamma"]),
    }
    return _RunOutput(
        payload=payload,
        csv_data=(("x", "G", "G_free"), rows),
        needs_out=True,
    )


_SUBCOMMANDS: dict[str, tuple[tuple[_Option, ...], Callable]] = {
    "ed": (
        (
            _Option("lattice", parse_lattice, required=True,
                    help="1d:N or 2d:NxM (antiperiodic)"),
            _Option("model", _parse_choice("model", ("tV", "hubbard")),
                    default="tV"),
            _Option("t", float, default=1.0),
            _Option("V", float, default=0.0),
            _Option("U", float, default=0.0),
            _Option("mu", float, default=0.0),
            _Option("filling", float, required=True,
                    help="particles per mode; must give an integer count"),
            _Option("gap", flag=True, default=False,
                    help="also compute the spectral gap"),
        ),
        _run_ed,
    ),
    "partition": (
        (
            _Option("Q", parse_angle, required=True),
            _Option("kappa", float, required=True),
            _Option("a", float, default=1.0),
            _Option("grid", int, default=64, help="points per axis"),
        ),
        _run_partition,
    ),
    "constants": (
        (
            _Option("Q", parse_angle, required=True),
            _Option("kappa", float, required=True),
            _Option("t", float, default=1.0),
            _Option("V", float, default=0.0),
            _Option("a", float, default=1.0),
            _Option("mu0", float, default=0.0),
        ),
        _run_constants,
    ),
    "check-anomaly": (
        (
            _Option("dim", int, default=1),
            _Option("M", int, default=4, help="UV cutoff index"),
            _Option("grading-cap", float, default=4.0),
            _Option("transverse", int, default=2,
                    help="transverse lines (dim 2)"),
            _Option("p", str, required=True),
            _Option("pprime", str, required=True),
        ),
        _run_check_anomaly,
    ),
    "check-kronig": (
        (
            _Option("dim", int, default=1),
            _Option("M", int, default=4),
            _Option("grading-cap", float,
                    help="defaults to M, the smallest exact cap"),
            _Option("transverse", int, default=2),
            _Option("a-tilde", float,
                    help="report the physical-prefactor residual (dim 2)"),
        ),
        _run_check_kronig,
    ),
    "boson-spectrum": (
        (
            _Option("Q", parse_angle, required=True),
            _Option("kappa", float, required=True),
            _Option("t", float, default=1.0),
            _Option("V", float, required=True),
            _Option("a", float, default=1.0),
            _Option("grid", int, default=128, help="modes per rotated axis"),
            _Option("T", float, default=0.0, help="temperature"),
            _Option("cross-term",
                    _parse_choice("cross-term", ("intermode", "literal")),
                    default="intermode"),
        ),
        _run_boson_spectrum,
    ),
    "meanfield": (
        (
            _Option("antinodal", flag=True, default=False),
            _Option("t", float, default=1.0),
            _Option("V", float, default=0.0),
            _Option("nu", float, help="filling (tV mode)"),
            _Option("nu-a", float, default=0.5,
                    help="antinodal filling (--antinodal)"),
            _Option("Q", parse_angle, help="required with --antinodal"),
            _Option("kappa", float, help="required with --antinodal"),
            _Option("a", float, default=1.0),
            _Option("grid", int,
                    help="quadrature points per axis (256 tV / 128 antinodal)"),
            _Option("include-fock", flag=True, default=False),
        ),
        _run_meanfield,
    ),
    "phase-diagram": (
        (
            _Option("model", _parse_choice("model", ("tV2d",)),
                    default="tV2d"),
            _Option("t", float, default=1.0),
            _Option("nu", parse_samples, required=True,
                    help="filling sweep start:stop:count"),
            _Option("V", parse_samples, required=True,
                    help="coupling sweep start:stop:count"),
            _Option("grid", int, default=128),
            _Option("include-fock", flag=True, default=False),
        ),
        _run_phase_diagram,
    ),
    "correlator": (
        (
            _Option("gamma", float, required=True),
            _Option("vF", float, default=1.0),
            _Option("L", float, default=2000.0),
            _Option("eps", float, default=0.5),
            _Option("x", parse_samples,
                    help="positions start:stop:count "
                         "(default: 40 points across the fit window)"),
        ),
        _run_correlator,
    ),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodal-bosonize",
        description=__doc__.splitlines()[0],
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, (options, _) in _SUBCOMMANDS.items():
        sub = subparsers.add_parser(name)
        for opt in options:
            if opt.flag:
                sub.add_argument(
                    f"--{opt.name}", dest=opt.dest, action="store_const",
                    const=True, default=None, help=opt.help,
                )
            else:
                sub.add_argument(
                    f"--{opt.name}", dest=opt.dest, default=None,
                    help=opt.help,
                )
        sub.add_argument("--config", default=None,
                         help="TOML file with option values")
        sub.add_argument("--threads", default=None)
        sub.add_argument("--seed", default=None)
        sub.add_argument("--out", default=None,
                         help="output path (CSV for grid data)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage text
        code = exc.code
        return code if isinstance(code, int) else 2

    try:
        config = _load_config(ns.config) if ns.config else {}
        options, runner = _SUBCOMMANDS[ns.subcommand]
        resolved = _resolve_options(options, ns, config)
        threads = _resolve_threads(ns, config)
        seed_raw = ns.seed if ns.seed is not None else config.get("seed")
        seed = int(seed_raw) if seed_raw is not None else DEFAULT_SEED
        out_path = ns.out if ns.out is not None else config.get("out")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        output = runner(resolved, threads, seed)
        if output.needs_out and out_path is None:
            raise UsageError(
                f"{ns.subcommand} writes CSV and needs --out"
            )
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        ValueError,
        InstabilityError,
        ConvergenceError,
        EDConvergenceError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    document = {
        "config": {
            "subcommand": ns.subcommand,
            "threads": threads,
            "seed": seed,
            "out": out_path,
            **{k: _jsonable(v) for k, v in resolved.items()},
        },
        **{k: _jsonable(v) for k, v in output.payload.items()},
    }
    text = json.dumps(document, sort_keys=True, indent=2) + "\n"

    if output.csv_data is not None and out_path is not None:
        header, rows = output.csv_data
        _write_csv(out_path, header, rows)
    elif out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)

    if output.headline is not None:
        print(output.headline)
    print(text, end="")
    return 1 if output.failed else 0


if __name__ == "__main__":
    sys.exit(main())
