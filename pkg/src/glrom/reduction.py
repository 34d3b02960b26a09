"""Snapshot compression: proper orthogonal decomposition and empirical
interpolation point selection.

POD works on the small Gram matrix F^T F (method of snapshots), which keeps
the cost at O(n n_s^2) for tall snapshot matrices.  DEIM picks interpolation
rows greedily, one per basis vector, maximizing the current reconstruction
residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["PodBasis", "DeimModel", "pod", "deim_select", "deim_apply"]

# Gram eigenvalues below GRAM_CUTOFF * lambda_max are treated as numerically zero.
GRAM_CUTOFF = 1e-12
CONDITION_WARN = 1e8


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal snapshot modes with their Gram eigenvalues (nonincreasing)."""

    modes: np.ndarray        # (n, m)
    eigenvalues: np.ndarray  # (m,)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    def energy_fraction(self) -> np.ndarray:
        total = self.eigenvalues.sum()
        return np.cumsum(self.eigenvalues) / total


@dataclass(frozen=True)
class DeimModel:
    """Interpolatory reconstruction f ~ projector @ f[indices]."""

    basis: np.ndarray      # (n, m)
    indices: np.ndarray    # (m,) distinct row ids
    projector: np.ndarray  # (n, m) = basis @ inv(basis[indices])
    condition: float       # cond_2 of the sampled basis block

    @property
    def n_points(self) -> int:
        return self.indices.size


def pod(
    snapshots: np.ndarray,
    n_modes: Optional[int] = None,
    energy: Optional[float] = None,
    cutoff: float = GRAM_CUTOFF,
) -> PodBasis:
    """Dominant left singular directions of a snapshot matrix.

    Eigenvalues of the Gram matrix below cutoff * lambda_max are dropped as
    numerical rank deficiency.  With `n_modes` the basis is truncated to that
    many modes (clipped to the numerical rank, with a warning); with `energy`
    the smallest count reaching that fraction of total Gram energy is kept.

    The mode signs are fixed so each column's largest-magnitude entry is
    positive, making the basis reproducible.
    """
    F = np.asarray(snapshots, dtype=float)
    if F.ndim != 2 or F.size == 0:
        raise ValueError("snapshot matrix must be 2-D and nonempty")
    if n_modes is not None and n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if energy is not None and not 0.0 < energy <= 1.0:
        raise ValueError(f"energy fraction must be in (0, 1], got {energy}")

    gram = F.T @ F
    lam, vecs = np.linalg.eigh(gram)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    vecs = vecs[:, order]
    if lam[0] <= 0.0:
        raise ValueError("snapshot matrix is identically zero")

    keep = int(np.sum(lam > cutoff * lam[0]))
    rank = keep
    if energy is not None:
        frac = np.cumsum(lam[:keep]) / lam.sum()
        keep = int(np.searchsorted(frac, energy) + 1)
        keep = min(keep, rank)
    if n_modes is not None:
        if n_modes > rank:
            logger.warning("requested %d modes but numerical rank is %d", n_modes, rank)
        keep = min(n_modes, rank)

    lam_k = lam[:keep]
    modes = F @ (vecs[:, :keep] / np.sqrt(lam_k))
    # Polish orthonormality lost to Gram conditioning; R ~ I so modes move at
    # roundoff scale only.
    q, r = np.linalg.qr(modes)
    modes = q * np.sign(np.diag(r))
    flip = np.sign(modes[np.argmax(np.abs(modes), axis=0), np.arange(keep)])
    modes = modes * flip
    return PodBasis(modes=modes, eigenvalues=lam_k)


def deim_select(basis: Union[PodBasis, np.ndarray]) -> DeimModel:
    """Greedy interpolation point selection over a reduced basis.

    The first point maximizes |first mode|; each later point maximizes the
    residual of interpolating the next mode at the points chosen so far.
    Ties resolve to the smallest row index.
    """
    psi = basis.modes if isinstance(basis, PodBasis) else np.asarray(basis, dtype=float)
    if psi.ndim != 2 or psi.shape[1] == 0:
        raise ValueError("basis must be a nonempty 2-D array")
    n, m = psi.shape
    if m > n:
        raise ValueError(f"cannot pick {m} rows from a length-{n} vector")

    indices = np.empty(m, dtype=np.int64)
    indices[0] = int(np.argmax(np.abs(psi[:, 0])))
    for k in range(1, m):
        sel = indices[:k]
        try:
            w = np.linalg.solve(psi[sel][:, :k], psi[sel, k])
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"degenerate basis: sampled block singular at step {k}") from exc
        r = psi[:, k] - psi[:, :k] @ w
        indices[k] = int(np.argmax(np.abs(r)))
        if r[indices[k]] == 0.0:
            raise ValueError(f"degenerate basis: zero residual at step {k}")
    if np.unique(indices).size != m:
        raise ValueError("degenerate basis: repeated interpolation row")

    block = psi[indices]
    condition = float(np.linalg.cond(block))
    if condition > CONDITION_WARN:
        logger.warning("sampled basis block condition number %.3e", condition)
    projector = psi @ np.linalg.inv(block)
    return DeimModel(basis=psi, indices=indices, projector=projector, condition=condition)


def deim_apply(model: DeimModel, sampled_values: np.ndarray) -> np.ndarray:
    """Reconstruct a full vector from its values at the interpolation rows."""
    f = np.asarray(sampled_values, dtype=float)
    if f.shape[0] != model.n_points:
        raise ValueError(f"expected {model.n_points} sampled values, got {f.shape[0]}")
    return model.projector @ f
