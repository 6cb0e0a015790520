import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairiv.fairness import build_linear_parity_F
from fairiv.linear_iv import (LinearIVModel, fairness_spec, irrelevance_block_form,
                              penalized_limit, phi_fair_projected, phi_fair_restricted,
                              phi_penalized, phi_unconstrained, pi_from_covariances,
                              woodbury_inverse, zs_alias)
from fairiv.linop import penalized_solve, tikhonov_solve


def diagonal_model(ewy=(0.3, 0.1)):
    return LinearIVModel(Sigma_ZW=[[0.6], [0.0]], Sigma_SW=[[0.0], [0.5]], EWY=ewy)


def random_model(seed, k=None, p=None, q=None, orthogonal=False):
    rng = np.random.default_rng(seed)
    p = p or int(rng.integers(1, 4))
    q = q or int(rng.integers(1, 3))
    k = k or p + q + int(rng.integers(0, 3))
    zw = rng.standard_normal((k, p))
    sw = rng.standard_normal((k, q))
    if orthogonal:
        # remove the component of Sigma_SW in the column span of Sigma_ZW
        Q, _ = np.linalg.qr(zw)
        sw = sw - Q @ (Q.T @ sw)
    Sigma_S = np.eye(q) + 0.1 * np.ones((q, q))
    return LinearIVModel(Sigma_ZW=zw, Sigma_SW=sw, EWY=rng.standard_normal(k),
                         Sigma_S=Sigma_S, Sigma_ZS=0.5 * rng.standard_normal((q, p)))


def test_unconstrained_examples():
    # Sigma_XW = diag(0.6, 0.5): phi = (0.3 / 0.6, 0.1 / 0.5)
    assert np.allclose(phi_unconstrained(diagonal_model()), [0.5, 0.2])
    assert np.allclose(phi_unconstrained(diagonal_model((0.0, 0.0))), 0)
    m = LinearIVModel(Sigma_ZW=[[1.0], [0.0]], Sigma_SW=[[0.0], [1.0]], EWY=[1.7, -0.3])
    assert np.allclose(phi_unconstrained(m), [1.7, -0.3])


def test_unconstrained_matches_dense_oracle():
    m = random_model(5)
    X = m.Sigma_XW
    assert np.allclose(phi_unconstrained(m), np.linalg.inv(X.T @ X) @ X.T @ m.EWY)


def test_irrelevance_examples_on_diagonal_design():
    m = diagonal_model()
    spec = fairness_spec(m, "irrelevance")
    assert np.allclose(zs_alias(m), 0)
    assert np.allclose(phi_fair_projected(m, spec), [0.5, 0.0])
    assert np.allclose(phi_fair_restricted(m, spec), [0.5, 0.0])
    assert np.allclose(irrelevance_block_form(m), [0.5, 0.0])
    assert np.allclose(phi_penalized(m, spec, 3.0), [0.5, 0.05 / 3.25])
    assert np.allclose(phi_penalized(m, spec, 0.0), phi_unconstrained(m))


def test_parity_projection_example():
    m = LinearIVModel(Sigma_ZW=[[1.0], [0.0]], Sigma_SW=[[0.0], [1.0]], EWY=[1.0, 1.0])
    spec = fairness_spec(m, "parity", Pi=[[0.5]])
    assert np.allclose(phi_fair_projected(m, spec), [0.4, -0.2])


def test_fair_input_is_fixed_point():
    # EWY chosen so that phi = (2, -1) satisfies 0.5 * beta + gamma = 0
    m = LinearIVModel(Sigma_ZW=[[1.0], [0.0], [0.0]], Sigma_SW=[[0.0], [1.0], [0.0]],
                      EWY=[2.0, -1.0, 0.0])
    spec = fairness_spec(m, "parity", Pi=[[0.5]])
    phi = phi_unconstrained(m)
    assert np.allclose(spec.F @ phi, 0)
    assert np.allclose(phi_fair_projected(m, spec), phi)
    assert np.allclose(phi_fair_restricted(m, spec), phi)


def test_pi_examples():
    assert np.allclose(pi_from_covariances(np.eye(2), np.zeros((2, 3))), 0)
    Szs = np.array([[0.3, -0.2]])
    assert np.allclose(pi_from_covariances([[1.0]], Szs), Szs)
    assert np.isclose(pi_from_covariances(2.0, 1.0)[0, 0], 0.5)
    with pytest.raises(np.linalg.LinAlgError):
        pi_from_covariances([[0.0]], [[1.0]])


def test_parity_spec_from_covariances():
    m = LinearIVModel(Sigma_ZW=np.eye(3)[:, :2], Sigma_SW=np.eye(3)[:, 2:], EWY=[1, 2, 3],
                      Sigma_S=[[2.0]], Sigma_ZS=[[1.0, 0.5]])
    spec = fairness_spec(m, "parity")
    assert np.allclose(spec.F, build_linear_parity_F([[0.5, 0.25]]))


def test_model_validation():
    with pytest.raises(ValueError):
        LinearIVModel(Sigma_ZW=[[1.0]], Sigma_SW=[[1.0]], EWY=[1.0])  # k < p + q
    with pytest.raises(np.linalg.LinAlgError):
        LinearIVModel(Sigma_ZW=[[1.0], [1.0]], Sigma_SW=[[2.0], [2.0]], EWY=[1.0, 1.0])
    with pytest.raises(ValueError):
        LinearIVModel(Sigma_ZW=[[1.0], [0.0]], Sigma_SW=[[0.0], [1.0]], EWY=[1.0])
    with pytest.raises(ValueError):
        phi_penalized(diagonal_model(), fairness_spec(diagonal_model(), "irrelevance"), -1.0)


def test_irrelevance_restricted_is_block_form():
    """With a cross block, the restricted solution keeps the alias term."""
    m = random_model(11, k=5, p=2, q=1)
    spec = fairness_spec(m, "irrelevance")
    restricted = phi_fair_restricted(m, spec)
    assert np.allclose(restricted, irrelevance_block_form(m), atol=1e-10)
    zw = m.Sigma_ZW
    iv_without_s = np.linalg.solve(zw.T @ zw, zw.T @ m.EWY)
    assert np.allclose(restricted[:2], iv_without_s, atol=1e-10)
    phi = phi_unconstrained(m)
    assert np.allclose(phi_fair_projected(m, spec), np.r_[phi[:2], 0.0])


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("rho", [1e-3, 1.0, 1e3])
def test_woodbury(seed, rho):
    m = random_model(seed)
    for definition in ("parity", "irrelevance"):
        F = fairness_spec(m, definition).F
        direct = np.linalg.inv(m.gram + rho * F.T @ F)
        assert np.linalg.norm(woodbury_inverse(m, F, rho) - direct) <= \
            1e-8 * np.linalg.norm(direct)


@pytest.mark.parametrize("seed", range(10))
def test_large_rho_limit(seed):
    m = random_model(seed)
    for definition in ("parity", "irrelevance"):
        spec = fairness_spec(m, definition)
        phi = phi_penalized(m, spec, 1e8)
        scale = 1 + np.linalg.norm(phi)
        assert np.linalg.norm(spec.F @ phi) <= 1e-6 * scale
        assert np.linalg.norm(phi - penalized_limit(m, spec.F)) <= 1e-6 * scale


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("rho", [0.0, 1e-2, 1.0, 1e2])
def test_generic_solver_agreement(seed, rho):
    m = random_model(seed)
    for definition in ("parity", "irrelevance"):
        spec = fairness_spec(m, definition)
        generic = penalized_solve(m.Sigma_XW, m.EWY, spec.F, 1e-12, rho)
        assert np.allclose(phi_penalized(m, spec, rho), generic, atol=1e-6)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_coincidence_property(seed):
    m = random_model(seed, orthogonal=True)
    spec = fairness_spec(m, "irrelevance")
    assert np.linalg.norm(m.Sigma_ZW.T @ m.Sigma_SW) <= 1e-10
    gap = np.linalg.norm(phi_fair_restricted(m, spec) - phi_fair_projected(m, spec))
    assert gap <= 1e-8


def test_price_of_fairness_bound_on_grid():
    m = random_model(3, k=6, p=2, q=2)
    K, r = m.Sigma_XW, m.EWY
    F = fairness_spec(m, "parity").F
    for alpha in np.geomspace(1e-3, 10, 5):
        for rho in np.geomspace(1e-3, 1e3, 5):
            gap = np.linalg.norm(tikhonov_solve(K, r, alpha) - penalized_solve(K, r, F, alpha, rho))
            bound = rho / alpha ** 2 * np.linalg.norm(F.T @ F, 2) * np.linalg.norm(K.T @ r)
            assert gap <= bound
