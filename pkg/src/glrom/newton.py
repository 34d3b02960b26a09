"""Shared Newton iteration for the backward-Euler residuals.

All three solvers (fine, coarse, reduced) step the same way: evaluate the
residual and a linearization at the current iterate, solve for the
correction, update.  `eval_point` returns the residual together with a
callable solving J dx = rhs at that iterate, so factorizations happen only
when a correction is actually needed and residual/Jacobian share one
nonlinear evaluation per visited iterate.
"""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

__all__ = ["NewtonDivergenceError", "NewtonConvergenceError", "newton_solve"]

GROWTH_LIMIT = 3  # consecutive growing corrections before declaring divergence


class NewtonDivergenceError(RuntimeError):
    """Correction norms grew for several consecutive iterations."""

    def __init__(self, step_index, iteration: int, norm: float):
        self.step_index = step_index
        self.iteration = iteration
        self.norm = norm
        super().__init__(
            f"Newton diverged at time step {step_index}, iteration {iteration}, "
            f"correction norm {norm:.3e}"
        )


class NewtonConvergenceError(RuntimeError):
    """Iteration budget exhausted without meeting the tolerance."""

    def __init__(self, step_index, max_iter: int, norm: float):
        self.step_index = step_index
        self.max_iter = max_iter
        self.norm = norm
        super().__init__(
            f"Newton did not converge at time step {step_index} within {max_iter} "
            f"iterations (last correction {norm:.3e})"
        )


def newton_solve(
    x0: np.ndarray,
    eval_point: Callable[[np.ndarray], Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]],
    tol: float,
    max_iter: int,
    step_index=None,
) -> Tuple[np.ndarray, int]:
    """Iterate to a root of the residual; returns (solution, iterations).

    Convergence is declared when the correction norm drops below tol, or the
    fresh residual does (so linear problems finish in one iteration).
    """
    x = np.array(x0, dtype=float, copy=True)
    r, solve = eval_point(x)
    prev = np.inf
    growing = 0
    for k in range(1, max_iter + 1):
        dx = solve(-r)
        x = x + dx
        r, solve = eval_point(x)
        nd = float(np.linalg.norm(dx))
        if nd < tol or float(np.linalg.norm(r)) < tol:
            return x, k
        if nd > prev:
            growing += 1
            if growing >= GROWTH_LIMIT:
                raise NewtonDivergenceError(step_index, k, nd)
        else:
            growing = 0
        prev = nd
    raise NewtonConvergenceError(step_index, max_iter, prev)
