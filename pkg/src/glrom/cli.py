"""Command-line front end.

Subcommands
-----------
offline   Train a configuration and write the offline artifact container.
online    Load a container, run the reduced online solve, write CSV output.
compare   Offline (or reuse a container) + online + fine reference; write the
          energy-error history and print the steady error and cost ratio.
sweep     Run one of the five canned studies and write its result tables.

Configuration files are plain text, one `key = value` per line, `#` starts a
comment.  Keys are the ExperimentSpec field names:

    example, fine_nx, fine_ny, coarse_nx, coarse_ny   integers
    eta, shift, clamp, mu_on, u0_off_scale, u0_on_scale,
    dt, t_final, newton_tol, mu_mean, mu_std          floats
    m_off, n_modes, l0_local, l0_global, max_newton,
    seed, n_draws                                     integers
    rotated                                           true/false
    permeability_csv                                  path or empty
    mu_off                                            floats, space/comma separated
    source_off, source_on                             k2pi | k4pi
    u0_off_kind, u0_on_kind                           w0 | zero
    steady_tol                                        float or none

Exit status: 0 on full success, 2 on partial-row failure or usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
import typing
from typing import Optional

from . import artifacts as art
from .harness import (
    ExperimentSpec,
    error_series,
    example_spec,
    reference_solution,
    run_example,
    run_offline,
    run_online,
    write_error_series_csv,
    write_results_csv,
)
from .rom import downscale

__all__ = ["main", "parse_config", "spec_from_config"]

_EXIT_OK = 0
_EXIT_PARTIAL = 2


def parse_config(path: str) -> dict:
    """Read `key = value` lines; returns raw string values."""
    raw: dict = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            if key in raw:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def _convert(name: str, text: str, annotation) -> object:
    origin = typing.get_origin(annotation)
    if origin is typing.Union:  # Optional[...]
        if text.lower() in ("none", ""):
            return None
        inner = [a for a in typing.get_args(annotation) if a is not type(None)]
        return _convert(name, text, inner[0])
    if annotation is bool:
        low = text.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"{name}: expected true/false, got {text!r}")
    if annotation is int:
        return int(text)
    if annotation is float:
        return float(text)
    if annotation is tuple or origin is tuple:
        parts = text.replace(",", " ").split()
        if not parts:
            raise ValueError(f"{name}: expected at least one value")
        return tuple(float(p) for p in parts)
    return text


def spec_from_config(path: str) -> ExperimentSpec:
    """Build an ExperimentSpec from a key-value file (defaults fill gaps)."""
    raw = parse_config(path)
    fields = {f.name: f for f in dataclasses.fields(ExperimentSpec)}
    hints = typing.get_type_hints(ExperimentSpec)
    values = {}
    for key, text in raw.items():
        if key not in fields:
            known = ", ".join(sorted(fields))
            raise ValueError(f"unknown config key {key!r} (known: {known})")
        values[key] = _convert(key, text, hints[key])
    if values.get("permeability_csv") == "":
        values["permeability_csv"] = None
    return ExperimentSpec(**values)


def _write_reduced_trajectory(traj, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time"] + [f"alpha_{k}" for k in range(traj.states.shape[0])])
        for j, t in enumerate(traj.times):
            w.writerow([f"{t:.10g}"] + [f"{v:.12g}" for v in traj.states[:, j]])


def _write_downscaled(rom, traj, mesh, path: str) -> None:
    u = downscale(rom, traj.states[:, -1])
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node", "x", "y", "u_final"])
        for i in range(mesh.n_nodes):
            w.writerow([i, f"{mesh.nodes[i, 0]:.10g}", f"{mesh.nodes[i, 1]:.10g}", f"{u[i]:.12g}"])


def _cmd_offline(args) -> int:
    spec = spec_from_config(args.config)
    pipeline = run_offline(spec)
    path = art.save_offline(pipeline, args.artifacts)
    summary = os.path.join(args.artifacts, "offline_summary.csv")
    space = pipeline.space
    with open(summary, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["column", "region", "rank", "eigenvalue"])
        for k in range(space.phi.shape[1]):
            w.writerow(
                [k, space.column_region[k], space.column_rank[k],
                 f"{space.column_eigenvalue[k]:.10g}"]
            )
    print(f"offline container: {path}")
    print(f"multiscale columns: {space.phi.shape[1]} (dropped {space.n_dropped})")
    print(f"snapshots: Z {pipeline.z_snapshots.shape}, F {pipeline.f_snapshots.shape}")
    return _EXIT_OK


def _cmd_online(args) -> int:
    spec = spec_from_config(args.config)
    pipeline = art.load_offline(args.artifacts)
    theta = spec.online_parameters()
    try:
        rom, traj = run_online(
            pipeline, n_modes=spec.n_modes, l0_global=spec.l0_global, theta=theta
        )
    except Exception as exc:
        print(f"online solve failed: {exc}", file=sys.stderr)
        return _EXIT_PARTIAL
    _write_reduced_trajectory(traj, os.path.join(args.artifacts, "reduced_trajectory.csv"))
    _write_downscaled(rom, traj, pipeline.mesh, os.path.join(args.artifacts, "downscaled_final.csv"))
    print(f"reduced dimension: {rom.n_modes}, interpolation rows: {rom.n_interpolation_rows}")
    print(f"steps: {traj.n_steps}, wall time: {traj.wall_time:.3f}s, steady: {traj.reached_steady}")
    return _EXIT_OK


def _cmd_compare(args) -> int:
    spec = spec_from_config(args.config)
    if args.artifacts and os.path.exists(os.path.join(args.artifacts, art.ARTIFACT_NAME)):
        pipeline = art.load_offline(args.artifacts)
    else:
        pipeline = run_offline(spec)
        if args.artifacts:
            art.save_offline(pipeline, args.artifacts)
    theta = spec.online_parameters()
    status = _EXIT_OK
    try:
        rom, traj = run_online(
            pipeline, n_modes=spec.n_modes, l0_global=spec.l0_global, theta=theta
        )
        reference = reference_solution(pipeline, theta)
        times, errs = error_series(pipeline, rom, traj, reference, theta.mu_values[0])
        out = args.output or "compare.csv"
        with open(out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["time", "energy_error"])
            for t, e in zip(times, errs):
                w.writerow([f"{t:.10g}", f"{e:.10g}"])
        ratio = 100.0 * traj.wall_time / reference.wall_time
        print(f"steady-state energy error: {errs[-1]:.6f}")
        print(f"online/fine time ratio: {ratio:.2f}% "
              f"({traj.wall_time:.3f}s / {reference.wall_time:.3f}s)")
        print(f"error history: {out}")
    except Exception as exc:
        print(f"compare failed: {exc}", file=sys.stderr)
        status = _EXIT_PARTIAL
    return status


def _cmd_sweep(args) -> int:
    spec = example_spec(args.example)
    rows, n_failed = run_example(spec)
    os.makedirs(args.output, exist_ok=True)
    results = os.path.join(args.output, f"example{args.example}_results.csv")
    series = os.path.join(args.output, f"example{args.example}_errors.csv")
    write_results_csv(rows, results)
    write_error_series_csv(rows, series)
    for r in rows:
        err = "-" if r.steady_error is None else f"{r.steady_error:.6f}"
        print(f"[{r.status:>6.6}] {r.label:<28} steady_error={err}")
    print(f"results: {results}")
    print(f"error history: {series}")
    return _EXIT_PARTIAL if n_failed else _EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="glrom",
        description="Global-local nonlinear model reduction for heterogeneous diffusion.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offline", help="train and write the artifact container")
    p.add_argument("--config", required=True, help="key=value configuration file")
    p.add_argument("--artifacts", default="artifacts", help="output directory")
    p.set_defaults(func=_cmd_offline)

    p = sub.add_parser("online", help="run the reduced solve from a container")
    p.add_argument("--config", required=True)
    p.add_argument("--artifacts", required=True, help="directory with offline.npz")
    p.set_defaults(func=_cmd_online)

    p = sub.add_parser("compare", help="reduced vs fine reference error history")
    p.add_argument("--config", required=True)
    p.add_argument("--artifacts", default=None, help="reuse/write a container here")
    p.add_argument("--output", default=None, help="error-history CSV path")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="run one canned study")
    p.add_argument("--example", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.add_argument("--output", default="results", help="output directory")
    p.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
