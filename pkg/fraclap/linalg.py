"""
Sparse symmetric linear algebra shared by every finite element solve.
"""

import logging
from typing import *

import numpy as np
import scipy.sparse

from ._utils import check_positive, check_integer
from .errors import *
from .types import *

__all__ = ["CgResult", "spmv", "cg_solve", "as_csr"]


logger = logging.getLogger(__name__)


class CgResult(NamedTuple):
    x: FieldVector
    iterations: int
    residual: float


def as_csr(matrix: Any) -> CsrMatrix:
    """
    Converts to canonical CSR: summed duplicates, ascending column indices per row.
    """
    csr = scipy.sparse.csr_matrix(matrix, dtype=float)
    csr.sum_duplicates()
    csr.sort_indices()
    return csr


def spmv(A: CsrMatrix, x: FieldVector) -> FieldVector:
    """
    Computes ``A @ x``, accumulating each row in ascending column order.

    :raises DimensionMismatch: If ``x`` does not match the number of columns
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != A.shape[1]:
        raise DimensionMismatch("spmv", A.shape[1], len(x))
    if not A.has_sorted_indices:
        A = as_csr(A)
    return A @ x


def cg_solve(
    A: CsrMatrix,
    b: FieldVector,
    tol_rel: float = 1e-12,
    max_iter: Union[int, AutoType] = AUTO,
    *,
    x0: Optional[FieldVector] = None,
    callback: Optional[Callable[[FieldVector], None]] = None,
) -> CgResult:
    """
    Solves ``A x = b`` for symmetric positive definite ``A`` with
    Jacobi-preconditioned conjugate gradients.

    Convergence is declared only after the recomputed residual ``b - A x``
    satisfies ``‖b - A x‖ <= tol_rel * ‖b‖``; if the recursively updated
    residual drifted, the iteration restarts from the current iterate.

    :param A: Symmetric positive definite matrix
    :param b: Right-hand side
    :param tol_rel: Relative residual tolerance
    :param max_iter: Iteration limit, ``10 * n`` by default
    :param x0: Initial guess (e.g. the previous time step)
    :param callback: Called with the current iterate after every iteration
    :return: The solution, the number of iterations and the final relative residual
    :raises NotPositiveDefinite: On a non-positive diagonal entry or curvature
    :raises SolverDidNotConverge: If ``max_iter`` iterations do not suffice
    """
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionMismatch("cg_solve", n, A.shape[1])

    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or len(b) != n:
        raise DimensionMismatch("cg_solve", n, len(b))

    tol_rel = check_positive("tol_rel", tol_rel)
    max_iter = 10 * n if max_iter is AUTO else check_integer("max_iter", max_iter, 0)

    diagonal = A.diagonal()
    bad = np.flatnonzero(diagonal <= 0)
    if bad.size:
        raise NotPositiveDefinite(f"diagonal entry {int(bad[0])} is {float(diagonal[bad[0]])!r}")

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return CgResult(np.zeros(n), 0, 0.0)

    inv_diagonal = 1.0 / diagonal
    target = tol_rel * b_norm

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    residual = float(np.linalg.norm(r))
    if residual <= target:
        return CgResult(x, 0, residual / b_norm)

    z = inv_diagonal * r
    p = z.copy()
    rz = float(r @ z)

    iterations = 0
    while iterations < max_iter:
        q = A @ p
        curvature = float(p @ q)
        if curvature <= 0:
            raise NotPositiveDefinite(f"non-positive curvature {curvature!r} in iteration {iterations}")

        alpha = rz / curvature
        x += alpha * p
        r -= alpha * q
        iterations += 1

        if callback is not None:
            callback(x)

        residual = float(np.linalg.norm(r))
        if residual <= target:
            r = b - A @ x
            residual = float(np.linalg.norm(r))
            if residual <= target:
                return CgResult(x, iterations, residual / b_norm)

            logger.debug("cg: residual drift after %d iterations, restarting", iterations)
            z = inv_diagonal * r
            p = z.copy()
            rz = float(r @ z)
            continue

        z = inv_diagonal * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    raise SolverDidNotConverge(iterations, residual / b_norm, tol_rel)
