# discretization/solver.py
import logging
import warnings
from typing import List, Literal

import numpy as np
import scipy.sparse.linalg as spla

from discretization.models import GridFunction, LinearSystem
from harness.config import DEFAULT_MAX_ITER, DEFAULT_RESTART, DEFAULT_TOLERANCE
from utils.errors import NotConverged, SingularSystem

logger = logging.getLogger(__name__)

ILU_DROP_TOL = 1e-5
ILU_FILL_FACTOR = 20


def _full_solution(sys: LinearSystem, x: np.ndarray) -> GridFunction:
    values = sys.dirichlet_values.copy()
    values[sys.free] = x
    return GridFunction(grid=sys.grid, values=values)


def _ilu(matrix):
    try:
        ilu = spla.spilu(matrix.tocsc(), drop_tol=ILU_DROP_TOL, fill_factor=ILU_FILL_FACTOR)
    except RuntimeError as exc:
        # "Factor is exactly singular"
        raise SingularSystem(f"incomplete factorization failed: {exc}") from exc
    return spla.LinearOperator(matrix.shape, ilu.solve)


def solve_system(
    sys: LinearSystem,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    restart: int = DEFAULT_RESTART,
    method: Literal["gmres", "direct"] = "gmres",
) -> GridFunction:
    """Solve the reduced system and return the full nodal solution.

    GMRES(restart) with an ILU preconditioner; `method="direct"` uses sparse LU.
    Raises NotConverged with the best iterate and the residual history.
    """
    A, b = sys.matrix, sys.rhs
    if sys.coefficients.c0 == 0:
        warnings.warn("c0 = 0: the discrete problem may not be uniquely solvable", RuntimeWarning, stacklevel=2)

    row_norms = np.asarray(abs(A).sum(axis=1)).ravel()
    if np.any(row_norms == 0):
        raise SingularSystem(f"{int(np.sum(row_norms == 0))} zero row(s) in the reduced matrix")

    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        logger.info("zero right-hand side, returning the boundary lift")
        return _full_solution(sys, np.zeros(sys.size))

    if method == "direct":
        try:
            x = spla.splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SingularSystem(f"sparse LU failed: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise SingularSystem("sparse LU produced non-finite values")
        return _full_solution(sys, x)

    M = _ilu(A)
    history: List[float] = []
    x, info = spla.gmres(
        A, b, rtol=tol, atol=0.0, restart=restart, maxiter=max_iter, M=M,
        callback=lambda rk: history.append(float(rk)), callback_type="pr_norm",
    )
    residual = np.linalg.norm(A @ x - b) / b_norm
    logger.info("gmres on %s: info=%d, %d iterations, relative residual %.3e",
                sys.grid.label(), info, len(history), residual)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("Krylov iterate is not finite")
    if info != 0 or residual > tol:
        # true residual can lag the preconditioned one
        for _ in range(3):
            if residual <= tol:
                break
            x, info = spla.gmres(A, b, x0=x, rtol=tol, atol=0.0, restart=restart, maxiter=max_iter, M=M,
                                 callback=lambda rk: history.append(float(rk)), callback_type="pr_norm")
            residual = np.linalg.norm(A @ x - b) / b_norm
    if residual > tol:
        raise NotConverged(
            f"relative residual {residual:.3e} above tol {tol:.1e} after {len(history)} iterations",
            best_iterate=_full_solution(sys, x).values,
            residual_history=history,
        )
    return _full_solution(sys, x)
