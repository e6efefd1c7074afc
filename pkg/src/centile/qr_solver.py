"""Exact linear quantile regression by check-loss minimization.

The estimator behind every fit in the package: given a design ``X`` and
response ``y``, minimize ``sum_i rho_tau(y_i - x_i beta)`` where
``rho_tau(r) = r * (tau - 1[r < 0])``. The minimum is attained at a
vertex of the underlying linear program, i.e. a coefficient vector that
exactly interpolates at least as many observations as there are columns.
The solver is a specialized simplex (see ``centile._kernels``) with
Bland's lowest-index pivoting, so results are deterministic and an exact
LP optimum, not an approximation.

No intercept is added implicitly: callers build designs, and the spline
bases used throughout already span constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels

#: Relative tolerance of the column-pivoted rank check.
RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """Design matrix is not full column rank; caller must drop columns."""


class ConvergenceError(RuntimeError):
    """The simplex exceeded its iteration budget (should not occur)."""


@dataclass(frozen=True)
class QuantileFit:
    """A fitted quantile regression.

    ``n_interpolated`` counts exactly-zero residuals; with a full-rank
    design it is at least the number of columns, because the solver
    returns a vertex of the check-loss LP. ``loss`` equals
    ``sum_i rho_tau(residuals[i])``.
    """

    tau: float
    coefficients: np.ndarray
    residuals: np.ndarray
    loss: float
    n_interpolated: int
    iterations: int


def check_loss(r, tau: float):
    """Asymmetric absolute loss ``rho_tau(r) = r * (tau - 1[r < 0])``.

    Accepts scalars or arrays; zero exactly when ``r`` is zero.
    """
    _validate_tau(tau)
    r = np.asarray(r, dtype=np.float64)
    out = r * np.where(r < 0.0, tau - 1.0, tau)
    if out.ndim == 0:
        return float(out)
    return out


def fit(
    X,
    y,
    tau: float,
    *,
    tol: float = 1e-9,
    max_iter: int | None = None,
    initial_basis=None,
) -> QuantileFit:
    """Minimize the check loss over coefficients; exact LP optimum.

    Raises :class:`RankDeficiencyError` for rank-deficient designs (rank
    checked by column-pivoted QR at relative tolerance ``RANK_TOL``) and
    ``ValueError`` for shape problems or non-finite input.

    ``initial_basis`` optionally warm-starts the simplex from a known set
    of row indices (must index linearly independent rows); fits at nearby
    tau values typically finish in a handful of pivots from the previous
    optimum. The result does not depend on the starting basis whenever
    the optimum is unique.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    _validate_tau(tau)
    n, p = X.shape
    if n == 0 or y.size == 0:
        raise ValueError("empty data: no observations")
    if y.size != n:
        raise ValueError(f"X has {n} rows but y has {y.size} entries")
    if p < 1:
        raise ValueError("design must have at least one column")
    if n < p:
        raise ValueError(f"underdetermined fit: {n} rows < {p} columns")
    if not np.isfinite(X).all():
        raise ValueError("design matrix contains non-finite entries")
    if not np.isfinite(y).all():
        raise ValueError("response contains non-finite entries")

    _check_rank(X)

    if initial_basis is None:
        h0 = _independent_rows(X)
    else:
        h0 = np.asarray(initial_basis, dtype=np.intp)
        if h0.size != p or len(set(h0.tolist())) != p:
            raise ValueError(f"initial basis must hold {p} distinct row indices")

    if max_iter is None:
        max_iter = 1000 + 10 * n
    beta, r, h, s, iterations, converged = _kernels.qr_simplex(
        X, y, float(tau), h0, float(tol), int(max_iter)
    )
    if not converged:
        raise ConvergenceError(
            f"simplex did not converge within {max_iter} iterations"
        )

    scale = max(1.0, float(np.max(np.abs(y))))
    n_interp = int(np.count_nonzero(np.abs(r) <= 1e-12 * scale))
    loss = float(np.sum(check_loss(r, tau)))
    beta = beta.copy()
    beta.flags.writeable = False
    r = r.copy()
    r.flags.writeable = False
    return QuantileFit(float(tau), beta, r, loss, n_interp, int(iterations))


def verify_optimality(X, y, tau: float, coefficients, tol: float = 1e-8) -> bool:
    """Column-wise subgradient check of a candidate coefficient vector.

    For each column j the gradient contribution of the sign-determined
    residuals is ``tau * sum_{r>0} X_ij - (1-tau) * sum_{r<0} X_ij``;
    residuals within ``tol`` of zero contribute an interval
    ``[-(1-tau) X_ij, tau X_ij]`` (endpoints swapped for negative
    entries). Returns True iff zero is reachable in every column within
    ``tol``. Pure predicate: never raises on shape-consistent input.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    beta = np.asarray(coefficients, dtype=np.float64).ravel()
    _validate_tau(tau)
    r = y - X @ beta

    zero = np.abs(r) <= tol
    pos = r > tol
    neg = r < -tol
    base = tau * X[pos].sum(axis=0) - (1.0 - tau) * X[neg].sum(axis=0)
    if zero.any():
        a = tau * X[zero]
        b = -(1.0 - tau) * X[zero]
        lo = base + np.minimum(a, b).sum(axis=0)
        hi = base + np.maximum(a, b).sum(axis=0)
    else:
        lo = hi = base
    return bool(np.all(lo <= tol) and np.all(hi >= -tol))


def _validate_tau(tau: float) -> None:
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must lie strictly in (0, 1), got {tau}")


def _check_rank(X: np.ndarray) -> None:
    p = X.shape[1]
    _, R, _ = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0.0 or np.any(diag < RANK_TOL * diag[0]):
        rank = int(np.count_nonzero(diag >= RANK_TOL * diag[0])) if diag[0] else 0
        raise RankDeficiencyError(
            f"design is rank deficient: numerical rank {rank} < {p} columns"
        )


def _independent_rows(X: np.ndarray) -> np.ndarray:
    """First ``p`` linearly independent rows, in index order (deterministic)."""
    n, p = X.shape
    basis = np.empty((p, p))
    chosen = np.empty(p, dtype=np.intp)
    k = 0
    for i in range(n):
        v = X[i].copy()
        for _ in range(2):  # re-orthogonalize for stability
            v -= basis[:k].T @ (basis[:k] @ v)
        norm = np.linalg.norm(v)
        if norm > RANK_TOL * max(1.0, np.linalg.norm(X[i])):
            basis[k] = v / norm
            chosen[k] = i
            k += 1
            if k == p:
                return chosen
    raise RankDeficiencyError(
        f"could not find {p} independent rows (found {k})"
    )
