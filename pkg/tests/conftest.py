import numpy as np
import pytest

import eigengrad as eg
from eigengrad import sampling


def pairing_gap(A, M, eig, t, c, solver="dense"):
    """Relative defect of <cotangent, JVP(tangent)> == <VJP(cotangent), tangent>."""
    fwd = eg.jvp(A, M, eig, t, solver=solver)
    bwd = eg.vjp(A, M, eig, c, solver=solver)
    lhs = c.lambda_bar @ fwd.lambda_prime + np.sum(np.asarray(c.X_bar) * fwd.X_prime)
    rhs = (np.sum(bwd.A_bar * eg.as_dense_array(t.Aprime))
           + np.sum(bwd.M_bar * eg.as_dense_array(t.Mprime)))
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_pencil(spectrum, n, seed, mass="identity"):
    gen = np.random.default_rng(seed)
    A_arr, M_arr = sampling.pencil_from_spectrum(spectrum, n, gen, mass=mass)
    return eg.make_dense(A_arr), eg.make_spd(M_arr)
