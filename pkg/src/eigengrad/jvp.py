"""Forward-mode derivatives of the partial eigendecomposition.

Given the primal pencil (A, M), its retrieved eigenpairs, and a perturbation
direction (A', M'), computes the first-order response (Lambda', X'). In the
presence of repeated eigenvalues the response exists only when the
perturbation does not couple distinct eigenvectors inside a degeneracy group;
that condition is checked and reported as a defect. The free in-group
component of X' is gauged to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidityViolated
from .sylvester import (DEFAULT_TOL_SOLV, SylvesterProblem, project_rhs,
                        solve_dense, solve_iterative)

DEFAULT_TOL_COND = 1e-7


@dataclass
class TangentInput:
    """Perturbation directions for the two matrices of the pencil."""

    Aprime: object  # SymmetricOperator
    Mprime: object  # SymmetricOperator


@dataclass
class TangentOutput:
    lambda_prime: np.ndarray   # length k
    X_prime: np.ndarray        # n x k
    validity_defect: float = 0.0


def _coupling_matrix(eig, t):
    """X^T (A' X - M' X Lambda), the k x k coupling of the perturbation."""
    X = eig.X
    if t.Aprime.dim != X.shape[0] or t.Mprime.dim != X.shape[0]:
        raise DimensionMismatch(
            f"tangent dim ({t.Aprime.dim}, {t.Mprime.dim}) != primal dim {X.shape[0]}")
    V = t.Aprime.apply_batch(X) - t.Mprime.apply_batch(X) * eig.lambdas
    return X.T @ V, V


def check_forward_validity(eig, t, tol_cond=DEFAULT_TOL_COND):
    """Degenerate-group off-diagonal coupling must vanish; returns (ok, defect)."""
    F, _ = _coupling_matrix(eig, t)
    mask = eig.D - np.eye(eig.k, dtype=int)
    defect = float(np.max(np.abs(mask * F))) if eig.k else 0.0
    scale = max(1.0, float(np.max(np.abs(F)))) if eig.k else 1.0
    return defect <= tol_cond * scale, defect


def eigenvalue_jvp(eig, t):
    """lambda'_j = x_j^T (A' - lambda_j M') x_j for each retrieved pair."""
    F, _ = _coupling_matrix(eig, t)
    return np.diag(F).copy()


def eigenvector_jvp(A, M, eig, t, solver="dense", force=False,
                    tol_cond=DEFAULT_TOL_COND, tol_solv=DEFAULT_TOL_SOLV,
                    maxiter=None):
    """First-order eigenvector response; requires the forward validity condition.

    Pipeline: build V' = A'X - M'X Lambda, project its degenerate-group
    component out, solve the shifted systems for Y', and assemble
    X' = -1/2 X [I o (X^T M' X)] - Y' + X [D o (X^T M Y')].
    """
    ok, defect = check_forward_validity(eig, t, tol_cond)
    if not ok and not force:
        raise ValidityViolated(defect)

    X = eig.X
    _, V = _coupling_matrix(eig, t)
    B = project_rhs(V, X, M, eig.groups)
    prob = SylvesterProblem(A=A, M=M, lambdas=eig.lambdas, B=B, X=X, groups=eig.groups)
    if solver == "dense":
        sol = solve_dense(prob, tol_solv=tol_solv)
    elif solver == "iterative":
        sol = solve_iterative(prob, maxiter=maxiter, tol_solv=tol_solv)
    else:
        raise ValueError(f"solver must be 'dense' or 'iterative', got {solver!r}")
    Y = sol.Y

    MpX = t.Mprime.apply_batch(X)
    diag_norm = np.diag(X.T @ MpX)
    correction = eig.D * (X.T @ M.apply_batch(Y))
    X_prime = -0.5 * X * diag_norm - Y + X @ correction
    return TangentOutput(lambda_prime=eigenvalue_jvp(eig, t),
                         X_prime=X_prime, validity_defect=defect)


def jvp(A, M, eig, t, solver="dense", **opts):
    """Single entry point: eigenvalue and eigenvector forward derivatives."""
    return eigenvector_jvp(A, M, eig, t, solver=solver, **opts)
