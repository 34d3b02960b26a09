"""Experiment driver: offline/online pipelines, error metric, sweeps, CSV.

Five canned studies exercise the pipeline end to end: a mode sweep with a
timing table, interpolation-point sweeps with one and two training
parameters, a shifted-nonlinearity transfer study, and a randomized online
parameter study.  Rows that diverge are isolated; the sweep reports them
instead of aborting.

The offline stage is split in two so sweeps can share the expensive part:
`run_offline_base` (fine training solves and the multiscale space, fixed per
training-parameter set) and `finish_offline` (interpolation training and
coarse harvesting, repeated per local point count).
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .coarse import CoarseSystem, LocalDeimSet, build_coarse_system, solve_coarse, train_local_deim
from .fem import assemble_stiffness
from .fom import FineSystem, TimeSteppingConfig, Trajectory, build_fine_system, initial_state, solve_fom
from .gmsfem import MultiscaleSpace, build_multiscale_space
from .grid import CoarseGrid, FineMesh, build_coarse_grid, build_fine_mesh
from .model import (
    DEFAULT_LAYOUT,
    Nonlinearity,
    ParameterSet,
    PermeabilityField,
    channel_permeability,
    load_permeability_csv,
    source_term,
)
from .rom import RomSystem, build_rom, downscale, solve_rom

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentSpec",
    "ResultRow",
    "OfflineBase",
    "OfflinePipeline",
    "example_spec",
    "energy_error",
    "frozen_energy_matrix",
    "timing_ratio",
    "run_offline_base",
    "finish_offline",
    "run_offline",
    "run_online",
    "reference_solution",
    "error_series",
    "evaluate_row",
    "run_example",
    "write_results_csv",
    "write_error_series_csv",
]


@dataclass(frozen=True)
class ExperimentSpec:
    """Every knob of one study; defaults reproduce the base configuration."""

    example: int = 1
    fine_nx: int = 100
    fine_ny: int = 100
    coarse_nx: int = 10
    coarse_ny: int = 10
    eta: float = 1.0e6
    rotated: bool = False
    permeability_csv: Optional[str] = None
    shift: float = 0.0
    clamp: float = 700.0
    mu_off: tuple = (10.0,)
    mu_on: float = 40.0
    source_off: str = "k2pi"
    source_on: str = "k2pi"
    u0_off_kind: str = "w0"
    u0_off_scale: float = 1.0
    u0_on_kind: str = "w0"
    u0_on_scale: float = 0.5
    m_off: int = 3
    n_modes: int = 2
    l0_local: int = 3
    l0_global: int = 5
    dt: float = 0.05
    t_final: float = 2.0
    newton_tol: float = 1e-8
    max_newton: int = 50
    steady_tol: Optional[float] = 1e-8
    seed: int = 2027
    n_draws: int = 20
    mu_mean: float = 25.0
    mu_std: float = 2.0

    def __post_init__(self):
        for name in ("m_off", "n_modes", "l0_local", "l0_global", "n_draws"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 1 <= self.example <= 5:
            raise ValueError(f"example must be 1..5, got {self.example}")

    def stepping(self) -> TimeSteppingConfig:
        return TimeSteppingConfig(
            dt=self.dt,
            t_final=self.t_final,
            newton_tol=self.newton_tol,
            max_newton=self.max_newton,
            steady_tol=self.steady_tol,
        )

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(shift=self.shift, clamp=self.clamp)

    def offline_parameters(self) -> ParameterSet:
        return ParameterSet(
            mu_values=tuple(self.mu_off),
            source=self.source_off,
            u0_kind=self.u0_off_kind,
            u0_scale=self.u0_off_scale,
        )

    def online_parameters(self) -> ParameterSet:
        return ParameterSet(
            mu_values=(self.mu_on,),
            source=self.source_on,
            u0_kind=self.u0_on_kind,
            u0_scale=self.u0_on_scale,
        )


def example_spec(example: int) -> ExperimentSpec:
    """Default configuration of each canned study."""
    base = ExperimentSpec(example=example)
    if example == 1:
        return base
    if example == 2:
        return replace(base, n_modes=3, l0_local=1, l0_global=1)
    if example == 3:
        return replace(
            base,
            shift=0.9,
            mu_off=(2.0, 5.0),
            mu_on=3.0,
            source_on="k4pi",
            u0_on_kind="zero",
            u0_on_scale=1.0,
            n_modes=3,
            l0_local=3,
            l0_global=3,
        )
    if example == 4:
        return replace(
            base,
            mu_off=(10.0, 40.0),
            mu_on=24.0,
            u0_on_kind="zero",
            u0_on_scale=1.0,
            n_modes=5,
            l0_local=3,
            l0_global=3,
        )
    if example == 5:
        return replace(
            base,
            mu_off=(10.0, 25.0, 39.0),
            n_modes=5,
            l0_local=3,
            l0_global=5,
        )
    raise ValueError(f"example must be 1..5, got {example}")


@dataclass
class ResultRow:
    """One sweep configuration with its errors and timings."""

    example: int
    label: str
    mu_off: tuple
    mu_on: float
    n_modes: int
    l0_local: int
    l0_global: int
    steady_error: Optional[float]
    error_times: np.ndarray
    error_series: np.ndarray
    t_fine: Optional[float]
    t_gl: Optional[float]
    ratio_percent: Optional[float]
    status: str = "ok"


@dataclass
class OfflineBase:
    """Training-parameter-dependent half of the offline stage."""

    spec: ExperimentSpec
    mesh: FineMesh
    grid: CoarseGrid
    perm: PermeabilityField
    fine: FineSystem
    w0: np.ndarray
    space: MultiscaleSpace
    coarse: CoarseSystem
    fine_trajectories: dict


@dataclass
class OfflinePipeline:
    """Everything the offline stage produces for one configuration."""

    base: OfflineBase
    localdeim: LocalDeimSet
    coarse_trajectories: dict
    z_snapshots: np.ndarray
    f_snapshots: np.ndarray

    @property
    def spec(self) -> ExperimentSpec:
        return self.base.spec

    @property
    def mesh(self) -> FineMesh:
        return self.base.mesh

    @property
    def grid(self) -> CoarseGrid:
        return self.base.grid

    @property
    def perm(self) -> PermeabilityField:
        return self.base.perm

    @property
    def fine(self) -> FineSystem:
        return self.base.fine

    @property
    def w0(self) -> np.ndarray:
        return self.base.w0

    @property
    def space(self) -> MultiscaleSpace:
        return self.base.space

    @property
    def coarse(self) -> CoarseSystem:
        return self.base.coarse


def energy_error(u_ref: np.ndarray, u_approx: np.ndarray, a_matrix) -> float:
    """Relative energy-norm error sqrt((e^T A e) / (u^T A u))."""
    e = np.asarray(u_ref) - np.asarray(u_approx)
    denom = float(u_ref @ (a_matrix @ u_ref))
    if denom <= 0.0:
        raise ValueError("reference state has zero energy norm")
    return float(np.sqrt((e @ (a_matrix @ e)) / denom))


def frozen_energy_matrix(
    mesh: FineMesh,
    perm: PermeabilityField,
    non: Nonlinearity,
    mu: float,
    u_ref_full: np.ndarray,
    free: np.ndarray,
):
    """Free-node stiffness with the coefficient frozen at the reference state.

    The per-triangle weight is kappa_q times b evaluated at the vertex mean
    of the reference state.
    """
    u_tri = u_ref_full[mesh.triangles].mean(axis=1)
    weight = perm.values * non.b(u_tri, mu)
    A = assemble_stiffness(mesh, weight=weight)
    return A[free][:, free].tocsr()


def timing_ratio(t_gl: float, t_fine: float) -> float:
    """Online-time percentage R = 100 T_GL / T_fine."""
    if t_fine <= 0:
        raise ValueError("reference timing must be positive")
    return 100.0 * t_gl / t_fine


def run_offline_base(
    spec: ExperimentSpec,
    mu_off: Optional[tuple] = None,
    fom_cache: Optional[dict] = None,
) -> OfflineBase:
    """Geometry, fields, training solves and the multiscale space.

    mu_off overrides the spec's training set; fom_cache (mu -> Trajectory)
    lets sweeps reuse fine training solves across bases built from the same
    spec.
    """
    spec_eff = replace(spec, mu_off=tuple(mu_off) if mu_off is not None else tuple(spec.mu_off))
    mesh = build_fine_mesh(spec_eff.fine_nx, spec_eff.fine_ny)
    grid = build_coarse_grid(mesh, spec_eff.coarse_nx, spec_eff.coarse_ny)
    if spec_eff.permeability_csv:
        perm = load_permeability_csv(spec_eff.permeability_csv, mesh)
    else:
        layout = dataclasses.replace(DEFAULT_LAYOUT, rotated=spec_eff.rotated)
        perm = channel_permeability(mesh, eta=spec_eff.eta, layout=layout)
    non = spec_eff.nonlinearity()
    stepping = spec_eff.stepping()

    fine = build_fine_system(mesh, perm, source=spec_eff.source_off)
    theta_off = spec_eff.offline_parameters()
    u0 = initial_state(fine, theta_off)
    if spec_eff.u0_off_kind == "w0":
        w0 = u0 / spec_eff.u0_off_scale
    else:
        w0 = initial_state(fine, ParameterSet(mu_values=(0.0,), source=spec_eff.source_off))

    space = build_multiscale_space(
        mesh, grid, perm, non, spec_eff.mu_off, w0, m_off=spec_eff.m_off,
        source=source_term(mesh.nodes, spec_eff.source_off),
    )
    coarse = build_coarse_system(fine, space)

    fine_trajectories = {}
    for mu in spec_eff.mu_off:
        if fom_cache is not None and mu in fom_cache:
            fine_trajectories[mu] = fom_cache[mu]
            continue
        traj = solve_fom(fine, mu, u0, stepping, non=non)
        fine_trajectories[mu] = traj
        if fom_cache is not None:
            fom_cache[mu] = traj

    return OfflineBase(
        spec=spec_eff,
        mesh=mesh,
        grid=grid,
        perm=perm,
        fine=fine,
        w0=w0,
        space=space,
        coarse=coarse,
        fine_trajectories=fine_trajectories,
    )


def _seed_coarse_states(base: OfflineBase, mu: float) -> np.ndarray:
    """Full-node states of one exact-evaluation coarse training run.

    The interpolation models must be trained on the solution manifold they
    are deployed on; states from the fine solver sit far enough from it that
    the high-contrast stiffness amplifies the reconstruction error into an
    O(1) force perturbation.
    """
    spec = base.spec
    u0 = initial_state(base.fine, spec.offline_parameters())
    traj, _ = solve_coarse(
        base.coarse, mu, u0, spec.stepping(), non=spec.nonlinearity(),
        localdeim=None, harvest_nonlinear=False,
    )
    full = np.zeros((base.mesh.n_nodes, traj.states.shape[1]))
    full[base.fine.free] = np.asarray(base.coarse.phi_free @ traj.states)
    return full


def finish_offline(
    base: OfflineBase,
    l0_local: Optional[int] = None,
    seed_cache: Optional[dict] = None,
) -> OfflinePipeline:
    """Interpolation training and coarse harvesting for one point count.

    seed_cache (mu -> full-node state matrix) lets point-count sweeps reuse
    the exact-evaluation training runs, which do not depend on l0_local.
    """
    l0 = l0_local if l0_local is not None else base.spec.l0_local
    if l0 != base.spec.l0_local:
        base = dataclasses.replace(base, spec=replace(base.spec, l0_local=l0))
    spec = base.spec
    non = spec.nonlinearity()
    stepping = spec.stepping()
    u0 = initial_state(base.fine, spec.offline_parameters())

    seeds = []
    for mu in spec.mu_off:
        if seed_cache is not None and mu in seed_cache:
            seeds.append((seed_cache[mu], mu))
            continue
        states = _seed_coarse_states(base, mu)
        seeds.append((states, mu))
        if seed_cache is not None:
            seed_cache[mu] = states

    localdeim = train_local_deim(base.grid, seeds, non, l0, base.fine.free)

    coarse_trajectories = {}
    z_parts, f_parts = [], []
    for mu in spec.mu_off:
        traj, f_snaps = solve_coarse(
            base.coarse, mu, u0, stepping, non=non, localdeim=localdeim, harvest_nonlinear=True
        )
        coarse_trajectories[mu] = traj
        z_parts.append(traj.states)
        f_parts.append(f_snaps)

    return OfflinePipeline(
        base=base,
        localdeim=localdeim,
        coarse_trajectories=coarse_trajectories,
        z_snapshots=np.hstack(z_parts),
        f_snapshots=np.hstack(f_parts),
    )


def run_offline(
    spec: ExperimentSpec,
    l0_local: Optional[int] = None,
    mu_off: Optional[tuple] = None,
) -> OfflinePipeline:
    """One-call offline stage (base + finish)."""
    return finish_offline(run_offline_base(spec, mu_off=mu_off), l0_local=l0_local)


def _online_initial(pipeline: OfflinePipeline, theta: ParameterSet) -> np.ndarray:
    if theta.u0_kind == "zero":
        return np.zeros(pipeline.mesh.n_nodes)
    if theta.u0_kind == "vector":
        return np.asarray(theta.u0_vector, dtype=float)
    return theta.u0_scale * pipeline.w0


def run_online(
    pipeline: OfflinePipeline,
    n_modes: Optional[int] = None,
    l0_global: Optional[int] = None,
    theta: Optional[ParameterSet] = None,
):
    """Build the reduced model from harvested snapshots and march it online."""
    spec = pipeline.spec
    theta = theta or spec.online_parameters()
    rom = build_rom(
        pipeline.coarse,
        pipeline.z_snapshots,
        pipeline.f_snapshots,
        n_modes=n_modes if n_modes is not None else spec.n_modes,
        n_rows=l0_global if l0_global is not None else spec.l0_global,
    )
    u0 = _online_initial(pipeline, theta)
    traj = solve_rom(
        rom, theta.mu_values[0], u0, spec.stepping(), non=spec.nonlinearity(), source=theta.source
    )
    return rom, traj


def reference_solution(pipeline: OfflinePipeline, theta: Optional[ParameterSet] = None) -> Trajectory:
    """Fine solve at the online parameters (the error/timing baseline)."""
    spec = pipeline.spec
    theta = theta or spec.online_parameters()
    if theta.source == pipeline.fine.source:
        fine = pipeline.fine
    else:
        fine = build_fine_system(pipeline.mesh, pipeline.perm, source=theta.source)
    u0 = _online_initial(pipeline, theta)
    return solve_fom(fine, theta.mu_values[0], u0, spec.stepping(), non=spec.nonlinearity())


def error_series(
    pipeline: OfflinePipeline,
    rom: RomSystem,
    rom_traj: Trajectory,
    reference: Trajectory,
    mu_on: float,
):
    """Energy error at every accepted time level (skipping t=0).

    The weight matrix is frozen at the final reference state; a side that
    stopped early (steady) holds its last state at later comparison times.
    """
    non = pipeline.spec.nonlinearity()
    a_ref = frozen_energy_matrix(
        pipeline.mesh, pipeline.perm, non, mu_on, reference.final_state, pipeline.fine.free
    )
    free = pipeline.fine.free
    n_levels = max(rom_traj.times.size, reference.times.size)
    times = np.arange(1, n_levels) * pipeline.spec.dt
    errs = np.empty(times.size)
    for j in range(1, n_levels):
        jr = min(j, reference.times.size - 1)
        ja = min(j, rom_traj.times.size - 1)
        u_ref = reference.states[free, jr]
        u_rom = downscale(rom, rom_traj.states[:, ja])[free]
        errs[j - 1] = energy_error(u_ref, u_rom, a_ref)
    return times, errs


def evaluate_row(pipeline, label, n_modes, l0_global, theta, reference) -> ResultRow:
    """Online solve plus error/timing metrics against a fine reference."""
    rom, traj = run_online(pipeline, n_modes=n_modes, l0_global=l0_global, theta=theta)
    times, errs = error_series(pipeline, rom, traj, reference, theta.mu_values[0])
    return ResultRow(
        example=pipeline.spec.example,
        label=label,
        mu_off=tuple(pipeline.spec.mu_off),
        mu_on=theta.mu_values[0],
        n_modes=rom.n_modes,
        l0_local=pipeline.spec.l0_local,
        l0_global=rom.n_interpolation_rows,
        steady_error=float(errs[-1]),
        error_times=times,
        error_series=errs,
        t_fine=reference.wall_time,
        t_gl=traj.wall_time,
        ratio_percent=timing_ratio(traj.wall_time, reference.wall_time),
        status="ok",
    )


def _failed_row(spec, label, mu_on, n_modes, l0_local, l0_global, exc) -> ResultRow:
    logger.warning("row %s failed: %s", label, exc)
    return ResultRow(
        example=spec.example,
        label=label,
        mu_off=tuple(spec.mu_off),
        mu_on=mu_on,
        n_modes=n_modes,
        l0_local=l0_local,
        l0_global=l0_global,
        steady_error=None,
        error_times=np.array([]),
        error_series=np.array([]),
        t_fine=None,
        t_gl=None,
        ratio_percent=None,
        status=f"failed: {exc}",
    )


def run_example(spec: ExperimentSpec):
    """Run one canned study; returns (rows, n_failed).

    Row labels are stable configuration keys; a failing configuration
    produces a failed row and the remaining rows still run.
    """
    rows: list[ResultRow] = []
    n_failed = 0

    def guarded(label, fn, **meta):
        nonlocal n_failed
        try:
            rows.append(fn())
        except Exception as exc:  # per-row isolation
            n_failed += 1
            rows.append(
                _failed_row(
                    spec,
                    label,
                    meta.get("mu_on", spec.mu_on),
                    meta.get("n_modes", spec.n_modes),
                    meta.get("l0_local", spec.l0_local),
                    meta.get("l0_global", spec.l0_global),
                    exc,
                )
            )

    def shared(what, fn):
        """Shared offline stage; on failure dependent rows fail, not the sweep."""
        try:
            return fn()
        except Exception as exc:
            logger.warning("shared stage %s failed: %s", what, exc)
            return None

    def need(value, what):
        if value is None:
            raise RuntimeError(f"{what} unavailable (offline stage failed)")
        return value

    fom_cache: dict = {}

    if spec.example == 1:
        theta = spec.online_parameters()
        base = shared("offline base", lambda: run_offline_base(spec, fom_cache=fom_cache))
        seeds: dict = {}
        pipeline = shared(
            "offline finish", lambda: finish_offline(need(base, "base"), seed_cache=seeds)
        )
        reference = shared("fine reference", lambda: reference_solution(need(pipeline, "pipeline")))
        for m in (2, 3, 4, 5):
            guarded(
                f"modes={m}",
                lambda m=m: evaluate_row(
                    need(pipeline, "pipeline"), f"modes={m}", m, spec.l0_global,
                    theta, need(reference, "reference"),
                ),
                n_modes=m,
            )
        for l0l, l0g in ((2, 2), (2, 3), (3, 3)):
            guarded(
                f"timing l0=({l0l},{l0g})",
                lambda l0l=l0l, l0g=l0g: evaluate_row(
                    finish_offline(need(base, "base"), l0_local=l0l, seed_cache=seeds),
                    f"timing l0=({l0l},{l0g})", 2, l0g, theta, need(reference, "reference"),
                ),
                n_modes=2, l0_local=l0l, l0_global=l0g,
            )

    elif spec.example == 2:
        theta = spec.online_parameters()
        base = shared("offline base", lambda: run_offline_base(spec, fom_cache=fom_cache))
        seeds = {}
        pipelines = {
            k: shared(
                f"offline local={k}",
                lambda k=k: finish_offline(need(base, "base"), l0_local=k, seed_cache=seeds),
            )
            for k in (1, 2, 3)
        }
        reference = shared(
            "fine reference", lambda: reference_solution(need(pipelines[1], "pipeline"))
        )
        for l0g in (1, 2, 3):
            guarded(
                f"global={l0g} local=1",
                lambda l0g=l0g: evaluate_row(
                    need(pipelines[1], "pipeline"), f"global={l0g} local=1",
                    spec.n_modes, l0g, theta, need(reference, "reference"),
                ),
                l0_local=1, l0_global=l0g,
            )
        for l0l in (1, 2, 3):
            guarded(
                f"local={l0l} global=3",
                lambda l0l=l0l: evaluate_row(
                    need(pipelines[l0l], "pipeline"), f"local={l0l} global=3",
                    spec.n_modes, 3, theta, need(reference, "reference"),
                ),
                l0_local=l0l, l0_global=3,
            )
        for k in (1, 2, 3):
            guarded(
                f"joint=({k},{k})",
                lambda k=k: evaluate_row(
                    need(pipelines[k], "pipeline"), f"joint=({k},{k})",
                    spec.n_modes, k, theta, need(reference, "reference"),
                ),
                l0_local=k, l0_global=k,
            )

    elif spec.example == 3:
        theta = spec.online_parameters()
        combined = shared(
            "offline combined",
            lambda: finish_offline(run_offline_base(spec, fom_cache=fom_cache)),
        )
        reference = shared(
            "fine reference", lambda: reference_solution(need(combined, "pipeline"))
        )
        guarded(
            "combined mu_off",
            lambda: evaluate_row(
                need(combined, "pipeline"), "combined mu_off", spec.n_modes, spec.l0_global,
                theta, need(reference, "reference"),
            ),
        )
        for mu in spec.mu_off:
            guarded(
                f"single mu_off={mu:g}",
                lambda mu=mu: evaluate_row(
                    finish_offline(run_offline_base(spec, mu_off=(mu,), fom_cache=fom_cache)),
                    f"single mu_off={mu:g}", spec.n_modes, spec.l0_global,
                    theta, need(reference, "reference"),
                ),
            )

    elif spec.example == 4:
        theta = spec.online_parameters()
        single = shared(
            "offline single",
            lambda: run_offline_base(spec, mu_off=(spec.mu_off[0],), fom_cache=fom_cache),
        )
        pair = shared("offline pair", lambda: run_offline_base(spec, fom_cache=fom_cache))
        seed_caches = {"single": {}, "pair": {}}
        reference = shared(
            "fine reference",
            lambda: reference_solution(
                finish_offline(need(single, "base"), l0_local=1, seed_cache=seed_caches["single"])
            ),
        )
        for tag, b in (("single", single), ("pair", pair)):
            for k in (1, 2, 3):
                guarded(
                    f"{tag} joint=({k},{k})",
                    lambda tag=tag, b=b, k=k: evaluate_row(
                        finish_offline(need(b, "base"), l0_local=k, seed_cache=seed_caches[tag]),
                        f"{tag} joint=({k},{k})", spec.n_modes, k,
                        theta, need(reference, "reference"),
                    ),
                    l0_local=k, l0_global=k,
                )

    elif spec.example == 5:
        pipeline = shared(
            "offline", lambda: finish_offline(run_offline_base(spec, fom_cache=fom_cache))
        )
        rng = np.random.default_rng(spec.seed)
        draws = rng.normal(spec.mu_mean, spec.mu_std, size=spec.n_draws)
        errors = []
        for j, mu in enumerate(draws):
            theta = ParameterSet(
                mu_values=(float(mu),),
                source=spec.source_on,
                u0_kind=spec.u0_on_kind,
                u0_scale=spec.u0_on_scale,
            )

            def draw_row(j=j, mu=mu, theta=theta):
                p = need(pipeline, "pipeline")
                reference = reference_solution(p, theta)
                row = evaluate_row(
                    p, f"draw {j:02d} mu={mu:.4f}", spec.n_modes, spec.l0_global,
                    theta, reference,
                )
                errors.append(row.steady_error)
                return row

            guarded(f"draw {j:02d} mu={mu:.4f}", draw_row, mu_on=float(mu))
        rows.append(
            ResultRow(
                example=5,
                label="aggregate mean",
                mu_off=tuple(spec.mu_off),
                mu_on=float(np.mean(draws)),
                n_modes=spec.n_modes,
                l0_local=spec.l0_local,
                l0_global=spec.l0_global,
                steady_error=float(np.mean(errors)) if errors else None,
                error_times=np.array([]),
                error_series=np.array([]),
                t_fine=None,
                t_gl=None,
                ratio_percent=None,
                status=f"ok ({len(errors)}/{spec.n_draws} draws)" if errors else "failed: no draws",
            )
        )

    return rows, n_failed


def write_results_csv(rows: Sequence[ResultRow], path) -> None:
    """One row per configuration; numeric fields empty on failure."""

    def fmt(x):
        return "" if x is None else f"{x:.10g}"

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            [
                "example", "label", "mu_off", "mu_on", "n_modes", "l0_local", "l0_global",
                "steady_error", "t_fine_seconds", "t_gl_seconds", "ratio_percent", "status",
            ]
        )
        for r in rows:
            w.writerow(
                [
                    r.example,
                    r.label,
                    " ".join(f"{m:g}" for m in r.mu_off),
                    f"{r.mu_on:g}",
                    r.n_modes,
                    r.l0_local,
                    r.l0_global,
                    fmt(r.steady_error),
                    fmt(r.t_fine),
                    fmt(r.t_gl),
                    fmt(r.ratio_percent),
                    r.status,
                ]
            )


def write_error_series_csv(rows: Sequence[ResultRow], path) -> None:
    """Long-format error history: one line per (row, time level)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["example", "label", "time", "energy_error"])
        for r in rows:
            for t, e in zip(r.error_times, r.error_series):
                w.writerow([r.example, r.label, f"{t:.10g}", f"{e:.10g}"])
