"""Pure Python/numpy reference implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable,
and the behavioral reference the extension is tested against. All three
entry points are deterministic functions of their inputs.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

_MASK64 = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


def xoshiro_fill(state: np.ndarray, n: int) -> np.ndarray:
    """Next ``n`` words of the xoshiro256++ stream; advances ``state`` in place."""
    s0, s1, s2, s3 = (int(w) for w in state)
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return out


def bspline_design(knots: np.ndarray, degree: int, ages: np.ndarray) -> np.ndarray:
    """Rows of B-spline basis values at ``ages`` (Cox-de Boor recurrence).

    ``knots`` is the full clamped sequence; callers guarantee every age lies
    inside ``[knots[degree], knots[-degree-1]]``. The last basis interval is
    closed so the right endpoint evaluates to the final basis function.
    """
    knots = np.ascontiguousarray(knots, dtype=np.float64)
    t = np.ascontiguousarray(ages, dtype=np.float64)
    m = t.shape[0]
    dim = knots.shape[0] - degree - 1

    span = np.searchsorted(knots, t, side="right") - 1
    span = np.clip(span, degree, dim - 1)

    left = np.zeros((m, degree + 1))
    right = np.zeros((m, degree + 1))
    nz = np.zeros((m, degree + 1))
    nz[:, 0] = 1.0
    for j in range(1, degree + 1):
        left[:, j] = t - knots[span + 1 - j]
        right[:, j] = knots[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            temp = nz[:, r] / (right[:, r + 1] + left[:, j - r])
            nz[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        nz[:, j] = saved

    out = np.zeros((m, dim))
    cols = span[:, None] - degree + np.arange(degree + 1)[None, :]
    np.put_along_axis(out, cols, nz, axis=1)
    return out


def qr_simplex(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    h0: np.ndarray,
    tol: float,
    max_iter: int,
):
    """Exterior-point simplex for check-loss minimization.

    Solves ``min_beta sum_i rho_tau(y_i - x_i beta)`` by pivoting between
    vertex solutions, where a vertex interpolates the ``p`` observations
    indexed by the basis ``h``. State per nonbasic observation is a sign
    ``s`` recording which side of zero its residual is accounted on (the
    u/v split of the underlying LP); the dual weights of the basis rows
    must land in ``[tau-1, tau]`` at the optimum.

    Pivot selection is Bland's rule on observation index: lowest violated
    basis index enters, and for degenerate (zero-length) steps the lowest
    blocking index leaves, which prevents cycling. Nondegenerate steps use
    the long-step ratio test: breakpoints are crossed (flipping their sign
    state) until the directional derivative turns nonnegative.

    Returns ``(beta, residuals, h, s, iterations, converged)``; residuals
    of basis rows are exactly zero.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    h = np.array(h0, dtype=np.intp)

    lu = scipy.linalg.lu_factor(X[h])
    beta = scipy.linalg.lu_solve(lu, y[h])
    r = y - X @ beta
    r[h] = 0.0
    s = np.where(r < 0.0, -1.0, 1.0)

    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1

        lam = np.where(s > 0.0, tau, tau - 1.0)
        lam[h] = 0.0
        lam_h = scipy.linalg.lu_solve(lu, -(X.T @ lam), trans=1)

        violated = (lam_h > tau + tol) | (lam_h < tau - 1.0 - tol)
        if not violated.any():
            converged = True
            break
        positions = np.nonzero(violated)[0]
        g_pos = positions[np.argmin(h[positions])]
        g = h[g_pos]
        if lam_h[g_pos] > tau:
            sigma = 1.0
            rate = tau - lam_h[g_pos]
        else:
            sigma = -1.0
            rate = (1.0 - tau) + lam_h[g_pos]

        unit = np.zeros(p)
        unit[g_pos] = 1.0
        d = scipy.linalg.lu_solve(lu, unit)
        delta = sigma * (X @ d)
        delta[h] = 0.0

        blocking = (s * delta) < 0.0
        if not blocking.any():
            raise FloatingPointError(
                "check-loss descent direction found no blocking residual"
            )
        idx = np.nonzero(blocking)[0]
        theta = np.maximum(r[idx] / -delta[idx], 0.0)

        if theta.min() <= 0.0:
            # Degenerate step: plain Bland pivot, no breakpoint crossings.
            leave = idx[theta <= 0.0].min()
        else:
            order = np.argsort(theta, kind="stable")
            leave = idx[order[-1]]
            cum = rate
            stop_at = len(order) - 1
            for k, pos in enumerate(order):
                cum += abs(delta[idx[pos]])
                if cum >= 0.0:
                    leave = idx[pos]
                    stop_at = k
                    break
            flips = idx[order[:stop_at]]
            s[flips] = -s[flips]

        s[g] = sigma
        h[g_pos] = leave

        lu = scipy.linalg.lu_factor(X[h])
        beta = scipy.linalg.lu_solve(lu, y[h])
        r = y - X @ beta
        r[h] = 0.0

    return beta, r, h, s.astype(np.int8), iterations, converged
