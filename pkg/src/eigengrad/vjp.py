"""Reverse-mode derivatives of the partial eigendecomposition.

Given sensitivities (Lambda_bar, X_bar) of a downstream scalar with respect
to the retrieved eigenpairs, computes the sensitivities (A_bar, M_bar) with
respect to the pencil. Degenerate groups admit a finite adjoint only when
the antisymmetric in-group part of X^T X_bar vanishes; that condition is
checked and reported as a defect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidityViolated
from .jvp import DEFAULT_TOL_COND
from .sylvester import (DEFAULT_TOL_SOLV, SylvesterProblem, project_rhs,
                        solve_dense, solve_iterative)


@dataclass
class CotangentInput:
    lambda_bar: np.ndarray   # length k
    X_bar: np.ndarray        # n x k


@dataclass
class CotangentOutput:
    A_bar: np.ndarray        # n x n
    M_bar: np.ndarray        # n x n
    validity_defect: float = 0.0


def check_backward_validity(eig, c, tol_cond=DEFAULT_TOL_COND):
    """In-group antisymmetry of X^T X_bar must vanish; returns (ok, defect)."""
    Xb = np.asarray(c.X_bar, dtype=float)
    if Xb.shape != eig.X.shape:
        raise DimensionMismatch(f"X_bar shape {Xb.shape} != X shape {eig.X.shape}")
    S = eig.X.T @ Xb
    anti = S - S.T
    mask = eig.D - np.eye(eig.k, dtype=int)
    defect = float(np.max(np.abs(mask * anti))) if eig.k else 0.0
    scale = max(1.0, float(np.max(np.abs(S)))) if eig.k else 1.0
    return defect <= tol_cond * scale, defect


def vjp(A, M, eig, c, solver="dense", force=False,
        tol_cond=DEFAULT_TOL_COND, tol_solv=DEFAULT_TOL_SOLV, maxiter=None):
    """Adjoint map (Lambda_bar, X_bar) -> (A_bar, M_bar).

    Solves the shifted systems (A - lambda_j M) ybar_j = xbar_j projected off
    the degenerate group, forms Vbar, and assembles
        A_bar = X Lambda_bar X^T - Vbar X^T
        M_bar = -X Lambda Lambda_bar X^T
                - 1/2 X [I o (X^T X_bar)] X^T + Vbar Lambda X^T.
    The eigenvalue term of M_bar carries a minus sign, matching the
    single-pair adjoint and the pairing identity with forward mode.
    """
    ok, defect = check_backward_validity(eig, c, tol_cond)
    if not ok and not force:
        raise ValidityViolated(defect)

    X = eig.X
    lam = eig.lambdas
    lbar = np.asarray(c.lambda_bar, dtype=float)
    Xb = np.asarray(c.X_bar, dtype=float)
    if lbar.shape != (eig.k,):
        raise DimensionMismatch(f"lambda_bar has shape {lbar.shape}, expected ({eig.k},)")

    if np.all(Xb == 0.0):
        Vbar = np.zeros_like(X)
        S_diag = np.zeros(eig.k)
    else:
        B = project_rhs(Xb, X, M, eig.groups)
        prob = SylvesterProblem(A=A, M=M, lambdas=lam, B=B, X=X, groups=eig.groups)
        if solver == "dense":
            sol = solve_dense(prob, tol_solv=tol_solv)
        elif solver == "iterative":
            sol = solve_iterative(prob, maxiter=maxiter, tol_solv=tol_solv)
        else:
            raise ValueError(f"solver must be 'dense' or 'iterative', got {solver!r}")
        Ybar = sol.Y
        Vbar = Ybar - X * np.diag(X.T @ M.apply_batch(Ybar))
        S_diag = np.diag(X.T @ Xb)

    A_bar = (X * lbar) @ X.T - Vbar @ X.T
    M_bar = (-(X * (lam * lbar)) @ X.T
             - 0.5 * (X * S_diag) @ X.T
             + (Vbar * lam) @ X.T)
    return CotangentOutput(A_bar=A_bar, M_bar=M_bar, validity_defect=defect)


def vjp_symmetrized(A, M, eig, c, **opts):
    """Gradient convention for symmetric parameterizations: symmetrized outputs."""
    out = vjp(A, M, eig, c, **opts)
    return CotangentOutput(A_bar=0.5 * (out.A_bar + out.A_bar.T),
                           M_bar=0.5 * (out.M_bar + out.M_bar.T),
                           validity_defect=out.validity_defect)
