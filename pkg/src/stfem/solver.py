"""Sparse nonsymmetric linear solves with a residual contract."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    relative_residual: float
    iterations: int
    method: str


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return r / nb if nb > 0 else r


def _direct(A, b, refine_steps=3):
    try:
        lu = spla.splu(A.tocsc(), permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as err:
        raise SolverError(f"LU factorization failed: {err}") from None
    udiag = np.abs(lu.U.diagonal())
    if udiag.min() <= np.finfo(float).eps * udiag.max() * A.shape[0]:
        k = int(np.argmin(udiag))
        raise SolverError(
            f"numerically singular: pivot {k} has |u_kk| = {udiag[k]:.3g} "
            f"(max pivot {udiag.max():.3g})")
    x = lu.solve(b)
    steps = 0
    while _relres(A, x, b) > RESIDUAL_TOL and steps < refine_steps:
        x = x + lu.solve(b - A @ x)
        steps += 1
    return x, steps


def _krylov(A, b, restart=50, maxiter=200):
    try:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
    except RuntimeError as err:
        raise SolverError(f"incomplete factorization failed: {err}") from None
    M = spla.LinearOperator(A.shape, ilu.solve)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.gmres(A, b, M=M, rtol=1e-13, atol=0.0, restart=restart,
                         maxiter=maxiter, callback=cb, callback_type="pr_norm")
    if info != 0:
        raise SolverError(f"GMRES did not converge within {maxiter} restarts "
                          f"(relative residual {_relres(A, x, b):.3g})")
    return x, count[0]


def solve(system, rhs=None, *, method: str = "lu") -> SolveReport:
    """Solve ``A x = b`` to relative residual <= 1e-10.

    ``system`` is either a :class:`~stfem.fem.SparseSystem` or a matrix, in
    which case ``rhs`` is the right-hand side.  ``method`` is ``"lu"``
    (sparse direct, partial pivoting) or ``"krylov"`` (ILU-preconditioned
    restarted GMRES).
    """
    if rhs is None:
        A, b = system.matrix, system.rhs
    else:
        A, b = system, rhs
    if method not in ("lu", "krylov"):
        raise ValueError(f"unknown solver method {method!r}")
    A = sp.csr_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = A.shape
    if n != m or n == 0:
        raise ValueError(f"expected a non-empty square matrix, got {A.shape}")
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")

    if not np.any(b):
        return SolveReport(np.zeros(n), 0.0, 0, "direct_lu" if method == "lu" else "iterative")
    if method == "lu":
        x, _ = _direct(A, b)
        its = 0
        kind = "direct_lu"
    else:
        x, its = _krylov(A, b)
        kind = "iterative"
    res = _relres(A, x, b)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError(f"{kind} solve reached relative residual {res:.3g} > {RESIDUAL_TOL:g}")
    return SolveReport(x, float(res), its, kind)
