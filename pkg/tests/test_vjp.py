import numpy as np
import pytest

import eigengrad as eg
from eigengrad import sampling
from eigengrad.errors import ValidityViolated

from conftest import make_pencil, pairing_gap


@pytest.fixture
def degen225():
    A = eg.make_dense(np.diag([2.0, 2.0, 5.0]))
    M = eg.identity_operator(3)
    return A, M, eg.eig_dense(A, M, 2)


def test_backward_validity_nondegenerate(rng):
    A, M = make_pencil([], 5, 3, mass="random")
    eig = eg.eig_dense(A, M, 2)
    c = eg.CotangentInput(lambda_bar=rng.standard_normal(2),
                          X_bar=rng.standard_normal((5, 2)))
    ok, defect = eg.check_backward_validity(eig, c)
    assert ok and defect == 0.0


def test_backward_validity_symmetric_in_group_ok(degen225, rng):
    _, _, eig = degen225
    S = sampling.random_symmetric(2, rng)
    c = eg.CotangentInput(lambda_bar=np.zeros(2), X_bar=eig.X @ S)
    ok, defect = eg.check_backward_validity(eig, c)
    assert ok and defect < 1e-12


def test_backward_validity_antisymmetric_part_fails(degen225):
    _, _, eig = degen225
    Xb = np.zeros((3, 2))
    Xb[:, 1] = eig.X[:, 0]
    ok, defect = eg.check_backward_validity(
        eig, eg.CotangentInput(lambda_bar=np.zeros(2), X_bar=Xb))
    assert not ok
    np.testing.assert_allclose(defect, 1.0, atol=1e-12)


def test_vjp_eigenvalue_only_k1():
    A = eg.make_dense(np.diag([1.0, 2.0, 3.0]))
    M = eg.identity_operator(3)
    eig = eg.eig_dense(A, M, 1)
    c = eg.CotangentInput(lambda_bar=np.array([1.0]), X_bar=np.zeros((3, 1)))
    out = eg.vjp(A, M, eig, c)
    e1 = np.eye(3)[:, :1]
    np.testing.assert_allclose(out.A_bar, e1 @ e1.T, atol=1e-13)
    np.testing.assert_allclose(out.M_bar, -1.0 * e1 @ e1.T, atol=1e-13)


def test_vjp_zero_cotangent():
    A, M = make_pencil([], 5, 7, mass="random")
    eig = eg.eig_dense(A, M, 2)
    c = eg.CotangentInput(lambda_bar=np.zeros(2), X_bar=np.zeros((5, 2)))
    out = eg.vjp(A, M, eig, c)
    np.testing.assert_array_equal(out.A_bar, np.zeros((5, 5)))
    np.testing.assert_array_equal(out.M_bar, np.zeros((5, 5)))


def test_vjp_rejects_invalid_cotangent(degen225):
    A, M, eig = degen225
    c = sampling.violating_cotangent(eig, M, eig.groups[0])
    with pytest.raises(ValidityViolated):
        eg.vjp(A, M, eig, c)
    out = eg.vjp(A, M, eig, c, force=True)
    assert out.validity_defect > 0.5
    assert np.all(np.isfinite(out.A_bar))


def test_eigenvalue_only_fast_path_equals_general(rng):
    A, M = make_pencil([2.0, 2.0, 5.0], 6, 11, mass="random")
    eig = eg.eig_dense(A, M, 3)
    lbar = rng.standard_normal(3)
    fast = eg.vjp(A, M, eig, eg.CotangentInput(lambda_bar=lbar,
                                               X_bar=np.zeros((6, 3))))
    # same cotangent through the general path (tiny X_bar defeats the shortcut)
    tiny = eg.CotangentInput(lambda_bar=lbar, X_bar=np.full((6, 3), 1e-300))
    slow = eg.vjp(A, M, eig, tiny)
    np.testing.assert_allclose(fast.A_bar, slow.A_bar, atol=1e-12)
    np.testing.assert_allclose(fast.M_bar, slow.M_bar, atol=1e-12)
    np.testing.assert_allclose(fast.A_bar, (eig.X * lbar) @ eig.X.T, atol=1e-13)


@pytest.mark.parametrize("mass", ["identity", "random"])
@pytest.mark.parametrize("spectrum", [[], [2.0, 2.0, 5.0]])
def test_adjoint_pairing(mass, spectrum, rng):
    A, M = make_pencil(spectrum, 6, 13, mass=mass)
    eig = eg.eig_dense(A, M, 3)
    for _ in range(20):
        t = sampling.valid_tangent(eig, M, rng)
        c = sampling.valid_cotangent(eig, M, rng)
        assert pairing_gap(A, M, eig, t, c) <= 1e-8


def test_vjp_linearity(rng):
    A, M = make_pencil([], 6, 17, mass="random")
    eig = eg.eig_dense(A, M, 3)
    c1 = sampling.valid_cotangent(eig, M, rng)
    c2 = sampling.valid_cotangent(eig, M, rng)
    combo = eg.CotangentInput(lambda_bar=3.0 * c1.lambda_bar - c2.lambda_bar,
                              X_bar=3.0 * c1.X_bar - c2.X_bar)
    o1, o2, oc = (eg.vjp(A, M, eig, c) for c in (c1, c2, combo))
    np.testing.assert_allclose(oc.A_bar, 3.0 * o1.A_bar - o2.A_bar, atol=1e-9)
    np.testing.assert_allclose(oc.M_bar, 3.0 * o1.M_bar - o2.M_bar, atol=1e-9)


def test_vjp_symmetrized(rng):
    A, M = make_pencil([], 6, 19, mass="random")
    eig = eg.eig_dense(A, M, 2)
    c = sampling.valid_cotangent(eig, M, rng)
    raw = eg.vjp(A, M, eig, c)
    sym = eg.vjp_symmetrized(A, M, eig, c)
    np.testing.assert_allclose(sym.A_bar, 0.5 * (raw.A_bar + raw.A_bar.T), atol=1e-14)
    np.testing.assert_allclose(sym.M_bar, 0.5 * (raw.M_bar + raw.M_bar.T), atol=1e-14)
    # idempotent on already-symmetric outputs
    c0 = eg.CotangentInput(lambda_bar=np.ones(2), X_bar=np.zeros((6, 2)))
    raw0 = eg.vjp(A, M, eig, c0)
    sym0 = eg.vjp_symmetrized(A, M, eig, c0)
    np.testing.assert_allclose(sym0.A_bar, raw0.A_bar, atol=1e-14)


def test_symmetrized_pairing_with_symmetric_tangents(rng):
    A, M = make_pencil([], 6, 23, mass="random")
    eig = eg.eig_dense(A, M, 3)
    for _ in range(5):
        t = sampling.valid_tangent(eig, M, rng)  # tangents are symmetric
        c = sampling.valid_cotangent(eig, M, rng)
        fwd = eg.jvp(A, M, eig, t)
        bwd = eg.vjp_symmetrized(A, M, eig, c)
        lhs = c.lambda_bar @ fwd.lambda_prime + np.sum(c.X_bar * fwd.X_prime)
        rhs = (np.sum(bwd.A_bar * eg.as_dense_array(t.Aprime))
               + np.sum(bwd.M_bar * eg.as_dense_array(t.Mprime)))
        assert abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0) <= 1e-8


def test_degenerate_path_reduces_to_nondegenerate(rng):
    # when D = I the D-masked equations coincide with the plain ones
    A, M = make_pencil([], 6, 29, mass="random")
    eig = eg.eig_dense(A, M, 3)
    assert np.array_equal(eig.D, np.eye(3, dtype=int))
    c = sampling.valid_cotangent(eig, M, rng)
    fs = eg.full_spectrum(A, M)
    out = eg.vjp(A, M, eig, c)
    ser = eg.vjp_series(fs, M, eig, c)
    np.testing.assert_allclose(out.A_bar, ser.A_bar, atol=1e-9)
    np.testing.assert_allclose(out.M_bar, ser.M_bar, atol=1e-9)
