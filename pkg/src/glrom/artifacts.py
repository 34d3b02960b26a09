"""Offline artifact container: one .npz consumed by the online stage.

The container holds the experiment configuration echo, the permeability
values, the multiscale basis, the local interpolation sets, the coarse mass
and load, and the harvested snapshot matrices.  `load_offline` rebuilds a
pipeline object that can serve the online stage without re-running any
training; fine and coarse training trajectories are not stored.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor

from .coarse import CoarseSystem, LocalDeimSet
from .fom import build_fine_system
from .gmsfem import MultiscaleSpace
from .grid import build_coarse_grid, build_fine_mesh
from .harness import ExperimentSpec, OfflineBase, OfflinePipeline
from .model import PermeabilityField
from .reduction import DeimModel, PodBasis

__all__ = [
    "ARTIFACT_NAME",
    "save_pod",
    "load_pod",
    "save_deim",
    "load_deim",
    "save_offline",
    "load_offline",
]

ARTIFACT_NAME = "offline.npz"


def save_pod(basis: PodBasis, prefix: str, out: dict) -> None:
    """Add a POD basis to a flat key-value container under a prefix."""
    out[f"{prefix}_modes"] = basis.modes
    out[f"{prefix}_eigenvalues"] = basis.eigenvalues


def load_pod(prefix: str, data) -> PodBasis:
    return PodBasis(
        modes=np.asarray(data[f"{prefix}_modes"]),
        eigenvalues=np.asarray(data[f"{prefix}_eigenvalues"]),
    )


def save_deim(model: DeimModel, prefix: str, out: dict) -> None:
    """Add an interpolation model to a flat key-value container."""
    out[f"{prefix}_basis"] = model.basis
    out[f"{prefix}_indices"] = model.indices
    out[f"{prefix}_projector"] = model.projector
    out[f"{prefix}_condition"] = np.float64(model.condition)


def load_deim(prefix: str, data) -> DeimModel:
    return DeimModel(
        basis=np.asarray(data[f"{prefix}_basis"]),
        indices=np.asarray(data[f"{prefix}_indices"], dtype=int),
        projector=np.asarray(data[f"{prefix}_projector"]),
        condition=float(data[f"{prefix}_condition"]),
    )


def _csr_out(mat: sp.csr_matrix, prefix: str, out: dict) -> None:
    mat = mat.tocsr()
    out[f"{prefix}_data"] = mat.data
    out[f"{prefix}_indices"] = mat.indices
    out[f"{prefix}_indptr"] = mat.indptr
    out[f"{prefix}_shape"] = np.asarray(mat.shape, dtype=int)


def _csr_in(prefix: str, data) -> sp.csr_matrix:
    return sp.csr_matrix(
        (data[f"{prefix}_data"], data[f"{prefix}_indices"], data[f"{prefix}_indptr"]),
        shape=tuple(data[f"{prefix}_shape"]),
    )


def save_offline(pipeline: OfflinePipeline, directory) -> str:
    """Write the offline container; returns the file path."""
    os.makedirs(directory, exist_ok=True)
    out: dict = {}
    out["spec_json"] = json.dumps(dataclasses.asdict(pipeline.spec))
    out["perm_values"] = pipeline.perm.values
    out["w0"] = pipeline.w0

    space = pipeline.space
    _csr_out(space.phi, "phi", out)
    out["phi_column_region"] = space.column_region
    out["phi_column_rank"] = space.column_rank
    out["phi_column_eigenvalue"] = space.column_eigenvalue
    out["phi_m_off"] = np.int64(space.m_off)
    out["phi_n_dropped"] = np.int64(space.n_dropped)

    out["coarse_mass"] = pipeline.coarse.m_reduced
    out["coarse_load"] = pipeline.coarse.h_reduced

    ld = pipeline.localdeim
    out["ld_l0"] = np.int64(ld.l0)
    out["ld_sample_nodes"] = ld.sample_nodes
    out["ld_region_offsets"] = ld.region_offsets
    _csr_out(ld.scatter, "ld_scatter", out)
    out["ld_n_regions"] = np.int64(len(ld.models))
    for i, model in enumerate(ld.models):
        save_deim(model, f"ld{i:04d}", out)

    out["z_snapshots"] = pipeline.z_snapshots
    out["f_snapshots"] = pipeline.f_snapshots

    path = os.path.join(directory, ARTIFACT_NAME)
    np.savez_compressed(path, **out)
    return path


def _spec_from_json(text: str) -> ExperimentSpec:
    raw = json.loads(text)
    raw["mu_off"] = tuple(raw["mu_off"])
    return ExperimentSpec(**raw)


def load_offline(directory) -> OfflinePipeline:
    """Reload the container for online use (training trajectories omitted)."""
    path = os.path.join(directory, ARTIFACT_NAME)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no offline container at {path}")
    data = np.load(path)

    spec = _spec_from_json(str(data["spec_json"].item()))
    mesh = build_fine_mesh(spec.fine_nx, spec.fine_ny)
    grid = build_coarse_grid(mesh, spec.coarse_nx, spec.coarse_ny)
    perm = PermeabilityField(values=np.asarray(data["perm_values"]), eta=spec.eta)
    if perm.values.size != mesh.n_triangles:
        raise ValueError("stored permeability does not match the mesh in the configuration")
    fine = build_fine_system(mesh, perm, source=spec.source_off)

    space = MultiscaleSpace(
        phi=_csr_in("phi", data),
        column_region=np.asarray(data["phi_column_region"], dtype=int),
        column_rank=np.asarray(data["phi_column_rank"], dtype=int),
        column_eigenvalue=np.asarray(data["phi_column_eigenvalue"]),
        m_off=int(data["phi_m_off"]),
        n_dropped=int(data["phi_n_dropped"]),
    )
    m_reduced = np.asarray(data["coarse_mass"])
    coarse = CoarseSystem(
        fine=fine,
        space=space,
        phi_free=space.phi[fine.free].tocsr(),
        m_reduced=m_reduced,
        h_reduced=np.asarray(data["coarse_load"]),
        m_cho=cho_factor(m_reduced),
    )

    models = tuple(load_deim(f"ld{i:04d}", data) for i in range(int(data["ld_n_regions"])))
    localdeim = LocalDeimSet(
        models=models,
        sample_nodes=np.asarray(data["ld_sample_nodes"], dtype=int),
        region_offsets=np.asarray(data["ld_region_offsets"], dtype=int),
        scatter=_csr_in("ld_scatter", data),
        l0=int(data["ld_l0"]),
    )

    base = OfflineBase(
        spec=spec,
        mesh=mesh,
        grid=grid,
        perm=perm,
        fine=fine,
        w0=np.asarray(data["w0"]),
        space=space,
        coarse=coarse,
        fine_trajectories={},
    )
    return OfflinePipeline(
        base=base,
        localdeim=localdeim,
        coarse_trajectories={},
        z_snapshots=np.asarray(data["z_snapshots"]),
        f_snapshots=np.asarray(data["f_snapshots"]),
    )
