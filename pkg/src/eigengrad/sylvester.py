"""Projected solves of A Y - M Y diag(lambda) = B with singular shifts.

Because the shift matrix is diagonal the system decouples into k shifted
linear solves (A - lambda_j M) y_j = b_j. When lambda_j is an eigenvalue the
operator is singular with nullspace spanned by the eigenvectors of its
degeneracy group; the right-hand side must be orthogonal to that group and
the returned representative is gauged M-orthogonal to it (minimum-norm in M).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import MaxIterExceeded, NotPositiveDefinite, NotSolvable
from .eigsolve import DEFAULT_DEGENERACY_RTOL
from .linop import as_dense_array

DEFAULT_TOL_SOLV = 1e-10


@dataclass
class SylvesterProblem:
    A: object                  # SymmetricOperator
    M: object                  # SpdOperator
    lambdas: np.ndarray        # per-column shifts, length k
    B: np.ndarray              # n x k right-hand block
    X: np.ndarray              # n x k M-orthonormal eigenblock (nullspace data)
    groups: list = field(default_factory=list)

    def group_of(self, j):
        for grp in self.groups:
            if j in grp:
                return grp
        return [j]


@dataclass
class SylvesterSolution:
    Y: np.ndarray
    residuals: np.ndarray      # per-column ||(A - l_j M) y_j - b_proj_j||
    iterations: np.ndarray     # per-column iteration counts (0 for dense)


def project_rhs(B, X, M, groups):
    """Remove the degenerate-group component: b_j <- b_j - M X_g (X_g^T b_j)."""
    B = np.asarray(B, dtype=float)
    out = B.copy()
    MX = M.apply_batch(X)
    for j in range(B.shape[1]):
        grp = _grp(groups, j)
        Xg = X[:, grp]
        out[:, j] = B[:, j] - MX[:, grp] @ (Xg.T @ B[:, j])
    return out


def _grp(groups, j):
    for grp in groups:
        if j in grp:
            return grp
    return [j]


def _check_solvable(p, tol_solv):
    """Per-column nullspace-component check; raises NotSolvable on violation."""
    for j in range(p.B.shape[1]):
        grp = p.group_of(j)
        b = p.B[:, j]
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            continue
        defect = np.linalg.norm(p.X[:, grp].T @ b)
        if defect > tol_solv * bnorm * 10:
            raise NotSolvable(j, defect / bnorm)


def _apply_group_gauge(Y, p):
    """Zero the group-parallel components: y_j <- y_j - X_g (X_g^T M y_j)."""
    MY = p.M.apply_batch(Y)
    for j in range(Y.shape[1]):
        grp = p.group_of(j)
        Xg = p.X[:, grp]
        Y[:, j] -= Xg @ (Xg.T @ MY[:, j])
    return Y


def solve_dense(p, tol_solv=DEFAULT_TOL_SOLV):
    """Columnwise pseudo-inverse solve via a full dense eigendecomposition."""
    _check_solvable(p, tol_solv)
    Ad = as_dense_array(p.A)
    Md = as_dense_array(p.M)
    try:
        ee, U = scipy.linalg.eigh(Ad, Md)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("M is not positive definite") from exc
    cut = DEFAULT_DEGENERACY_RTOL * max(np.max(np.abs(ee)), 1e-300)

    n, k = p.B.shape
    Y = np.zeros((n, k))
    residuals = np.zeros(k)
    for j in range(k):
        b = p.B[:, j]
        if np.linalg.norm(b) == 0.0:
            continue
        lam = p.lambdas[j]
        c = U.T @ b
        denom = ee - lam
        keep = np.abs(denom) > cut
        y = U[:, keep] @ (c[keep] / denom[keep])
        Y[:, j] = y
        bproj = b - Md @ (U[:, ~keep] @ c[~keep])
        residuals[j] = np.linalg.norm(Ad @ y - lam * (Md @ y) - bproj)
    Y = _apply_group_gauge(Y, p)
    return SylvesterSolution(Y=Y, residuals=residuals, iterations=np.zeros(k, dtype=int))


def solve_iterative(p, maxiter=None, tol_solv=DEFAULT_TOL_SOLV):
    """Columnwise MINRES on the shifted symmetric-indefinite operator.

    Each column solves P_L (A - lambda_j M) P_S y = P_L b_j where P_L and
    P_S deflate the degenerate group on the range and solution side.
    """
    _check_solvable(p, tol_solv)
    n, k = p.B.shape
    if maxiter is None:
        maxiter = 20 * n
    Y = np.zeros((n, k))
    residuals = np.zeros(k)
    iterations = np.zeros(k, dtype=int)

    for j in range(k):
        b = p.B[:, j]
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            continue
        lam = p.lambdas[j]
        grp = p.group_of(j)
        Xg = p.X[:, grp]
        MXg = p.M.apply_batch(Xg)

        def proj_left(v):
            return v - MXg @ (Xg.T @ v)

        def proj_sol(v):
            return v - Xg @ (MXg.T @ v)

        def opmat(v):
            return proj_left(p.A.apply(proj_sol(v)) - lam * p.M.apply(proj_sol(v)))

        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=opmat, dtype=float)
        bproj = proj_left(b)
        count = [0]

        def cb(_):
            count[0] += 1

        y, info = scipy.sparse.linalg.minres(
            op, bproj, rtol=max(tol_solv * 1e-2, 1e-13), maxiter=maxiter, callback=cb)
        y = proj_sol(y)
        res = np.linalg.norm(p.A.apply(y) - lam * p.M.apply(y) - bproj)
        Y[:, j] = y
        residuals[j] = res
        iterations[j] = count[0]
        if info != 0 and res > tol_solv * max(bnorm, 1e-300) * 10:
            sol = SylvesterSolution(Y=Y, residuals=residuals, iterations=iterations)
            raise MaxIterExceeded(
                f"column {j}: MINRES stopped (info={info}) at residual {res:.3e}",
                payload=sol)
    return SylvesterSolution(Y=Y, residuals=residuals, iterations=iterations)
