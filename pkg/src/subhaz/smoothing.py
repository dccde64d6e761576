"""Bivariate penalized B-spline smoothers.

Two flavors are provided: a scattered-data tensor-product smoother for mean
surfaces (anchor time by lag), and a fast eigendecomposition-based smoother
for symmetric matrices sampled on a full grid (covariances).  Both use cubic
B-splines, second-order difference penalties on the coefficients, and GCV
over a log-spaced penalty grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

__all__ = [
    "bspline_design",
    "second_diff_penalty",
    "TensorPSpline",
    "fit_tensor_pspline",
    "smooth_matrix_grid",
]

_DEGREE = 3


def _knot_vector(lo: float, hi: float, n_basis: int, degree: int = _DEGREE) -> np.ndarray:
    if n_basis < degree + 1:
        raise ValueError(f"need at least {degree + 1} basis functions")
    n_interior = n_basis - degree - 1
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    return np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])


def bspline_design(x: np.ndarray, lo: float, hi: float, n_basis: int,
                   degree: int = _DEGREE) -> np.ndarray:
    """Dense cubic B-spline design matrix on [lo, hi] with equally spaced
    interior knots.  Queries are clipped into the domain."""
    t = _knot_vector(lo, hi, n_basis, degree)
    xq = np.clip(np.asarray(x, dtype=float), lo, hi)
    return BSpline.design_matrix(xq, t, degree).toarray()


def second_diff_penalty(n: int) -> np.ndarray:
    """P = D'D for the second-order difference operator on n coefficients."""
    if n < 3:
        return np.zeros((n, n))
    D = np.diff(np.eye(n), n=2, axis=0)
    return D.T @ D


def _default_lams() -> np.ndarray:
    return np.logspace(-8, 4, 9)


@dataclass
class TensorPSpline:
    """Fitted tensor-product P-spline surface f(t, s) = b_t(t)' C b_s(s)."""

    coef: np.ndarray
    t_range: tuple
    s_range: tuple
    n_t: int
    n_s: int
    lam_t: float
    lam_s: float
    gcv: float

    def evaluate(self, t: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Surface values on the product of ``t`` and ``s``, shape (len(t), len(s))."""
        Bt = bspline_design(np.atleast_1d(t), *self.t_range, self.n_t)
        Bs = bspline_design(np.atleast_1d(s), *self.s_range, self.n_s)
        return Bt @ self.coef @ Bs.T

    def __call__(self, t, s):
        return self.evaluate(t, s)


def fit_tensor_pspline(t_pts: np.ndarray, s_grid: np.ndarray, Z: np.ndarray,
                       mask: np.ndarray | None = None, n_t: int = 10, n_s: int = 12,
                       lams: np.ndarray | None = None) -> TensorPSpline:
    """Fit a surface to rows of window values ``Z`` (one row per anchor time).

    ``mask`` marks observed entries; missing ones are dropped from the
    normal equations.  Penalties for the two dimensions are selected on a
    GCV grid (all pairs of ``lams``).
    """
    t_pts = np.asarray(t_pts, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (t_pts.size, s_grid.size):
        raise ValueError("Z must be (n_anchors, n_lags)")
    lams = _default_lams() if lams is None else np.asarray(lams, dtype=float)
    t_range = (float(t_pts.min()), float(t_pts.max()))
    if t_range[0] == t_range[1]:
        t_range = (t_range[0] - 0.5, t_range[1] + 0.5)
    s_range = (float(s_grid.min()), float(s_grid.max()))

    Bt = bspline_design(t_pts, *t_range, n_t)
    Bs = bspline_design(s_grid, *s_range, n_s)

    if mask is None or np.all(mask):
        A = np.kron(Bt.T @ Bt, Bs.T @ Bs)
        r = (Bt.T @ Z @ Bs).reshape(-1)
        zz = float(np.sum(Z * Z))
        n_obs = Z.size
    else:
        mask = np.asarray(mask, dtype=bool)
        A = np.zeros((n_t * n_s, n_t * n_s))
        r = np.zeros(n_t * n_s)
        zz = 0.0
        n_obs = 0
        for i in range(t_pts.size):
            obs = mask[i]
            if not np.any(obs):
                continue
            Bso = Bs[obs]
            zo = Z[i, obs]
            A += np.kron(np.outer(Bt[i], Bt[i]), Bso.T @ Bso)
            r += np.kron(Bt[i], Bso.T @ zo)
            zz += float(zo @ zo)
            n_obs += int(obs.sum())
    if n_obs == 0:
        raise ValueError("no observed entries to smooth")

    Pt = np.kron(second_diff_penalty(n_t), np.eye(n_s))
    Ps = np.kron(np.eye(n_t), second_diff_penalty(n_s))

    best = None
    for lt in lams:
        for ls in lams:
            M = A + lt * Pt + ls * Ps
            try:
                c = np.linalg.solve(M, r)
                edf = float(np.trace(np.linalg.solve(M, A)))
            except np.linalg.LinAlgError:
                continue
            rss = max(zz - 2.0 * c @ r + c @ A @ c, 0.0)
            denom = max(n_obs - edf, 1e-8)
            gcv = n_obs * rss / denom**2
            if best is None or gcv < best[0]:
                best = (gcv, lt, ls, c)
    if best is None:
        raise np.linalg.LinAlgError("tensor P-spline normal equations singular "
                                    "for every penalty on the grid")
    gcv, lt, ls, c = best
    return TensorPSpline(coef=c.reshape(n_t, n_s), t_range=t_range, s_range=s_range,
                         n_t=n_t, n_s=n_s, lam_t=lt, lam_s=ls, gcv=gcv)


def smooth_matrix_grid(grid: np.ndarray, Z: np.ndarray,
                       lams: np.ndarray | None = None,
                       lam: float | None = None) -> tuple:
    """Smooth a matrix sampled on ``grid`` x ``grid`` by applying a 1-D
    penalized B-spline smoother along each dimension.

    The basis is square (one function per grid point), so zero penalty
    reproduces the input exactly.  A single penalty is shared by both
    dimensions, preserving symmetry; the smoother matrix is a congruence,
    so positive semidefinite inputs stay positive semidefinite.  Pass
    ``lam`` to fix the penalty; otherwise it is chosen by GCV over
    ``lams``.  Returns (smoothed matrix, chosen penalty).
    """
    grid = np.asarray(grid, dtype=float)
    Z = np.asarray(Z, dtype=float)
    m = grid.size
    if Z.shape != (m, m):
        raise ValueError("Z must be square on the grid")
    B = bspline_design(grid, float(grid[0]), float(grid[-1]), m)
    S = B.T @ B
    L = np.linalg.cholesky(S)
    Qm = _solve_lower(L, B.T).T  # B L^{-T}; orthogonal since Q'Q = L^{-1} S L^{-T} = I
    P = second_diff_penalty(m)
    K = _solve_lower(L, _solve_lower(L, P).T)  # L^{-1} P L^{-T}, symmetric
    K = 0.5 * (K + K.T)
    omega, U = np.linalg.eigh(K)
    omega = np.clip(omega, 0.0, None)
    QU = Qm @ U
    Y = QU.T @ Z @ QU

    def _fit(lmb: float):
        d1 = 1.0 / (1.0 + lmb * omega)
        d = d1[:, None] * d1[None, :]
        fitted = QU @ (d * Y) @ QU.T
        edf = float(d1.sum()) ** 2
        rss = float(np.sum(((1.0 - d) * Y) ** 2))
        denom = max(m * m - edf, 1e-8)
        return fitted, m * m * rss / denom**2

    if lam is not None:
        fitted, _ = _fit(lam)
        return fitted, lam
    lams = _default_lams() if lams is None else np.asarray(lams, dtype=float)
    best = None
    for lmb in lams:
        fitted, gcv = _fit(lmb)
        if best is None or gcv < best[0]:
            best = (gcv, lmb, fitted)
    _, lmb, fitted = best
    return fitted, lmb


def _solve_lower(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    from scipy.linalg import solve_triangular

    return solve_triangular(L, B, lower=True)
