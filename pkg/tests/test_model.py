import numpy as np
import pytest

from conftest import dense_inverse, random_observations, random_state
from infer.errors import ShapeError
from infer.model import (ChangeReport, DiffKind, DiffOperator, Mode, ObservationMatrix,
                         PosteriorDraws, compose_sources, init_state, inverse_gamma,
                         sample_prior, simulate_observations, v_prior_variance)


def test_observation_matrix_validation():
    Y = ObservationMatrix(np.ones((2, 3)))
    assert (Y.P, Y.N) == (2, 3)
    with pytest.raises(ValueError):
        Y.values[0, 0] = 5.0
    with pytest.raises(ShapeError):
        ObservationMatrix(np.ones((2, 2)))
    with pytest.raises(ShapeError):
        ObservationMatrix(np.ones(5))
    with pytest.raises(ShapeError):
        ObservationMatrix(np.array([[1.0, np.nan, 2.0]]))


def test_observation_matrix_copies_input():
    raw = np.zeros((2, 4))
    Y = ObservationMatrix(raw)
    raw[0, 0] = 9.0
    assert Y.values[0, 0] == 0.0


@pytest.mark.parametrize("kind", [DiffKind.IDENTITY, DiffKind.FIRST_DIFFERENCE])
def test_diff_operator_round_trip(kind):
    x = np.random.default_rng(0).normal(size=(3, 12))
    op = DiffOperator(kind, 12)
    np.testing.assert_allclose(op.invert(op.apply(x)), x, atol=1e-12)
    np.testing.assert_allclose(op.apply(op.invert(x)), x, atol=1e-12)


def test_first_difference_matches_dense_matrices():
    N = 9
    op = DiffOperator(DiffKind.FIRST_DIFFERENCE, N)
    D_inv = dense_inverse(N, 1)
    x = np.random.default_rng(1).normal(size=N)
    np.testing.assert_allclose(op.invert(x), D_inv @ x, atol=1e-12)
    np.testing.assert_allclose(op.invert(x), np.cumsum(x))
    for n in range(1, N + 1):
        col = op.inverse_column(n)
        np.testing.assert_array_equal(col, D_inv[:, n - 1])
        assert op.column_norm_sq(n) == pytest.approx(col @ col)
        assert op.column_norm_sq(n) == N - n + 1


def test_identity_column_norm_is_one():
    op = DiffOperator(DiffKind.IDENTITY, 5)
    assert all(op.column_norm_sq(n) == 1.0 for n in range(1, 6))
    with pytest.raises(IndexError):
        op.inverse_column(6)


def test_init_state_partial_cold_start():
    Y = random_observations(0, 5, 10)
    state = init_state(Y, 2, Mode.PARTIAL, rng_seed=7)
    assert state.mode is Mode.PARTIAL
    assert np.all(state.V0 == 0)
    for shrink in (state.shrink0, state.shrink1):
        for arr in (shrink.tau, shrink.xi, shrink.lambda_, shrink.eta, shrink.phi, shrink.omega,
                    shrink.gamma, shrink.zeta):
            assert np.all(np.asarray(arr) > 0)
    assert np.all(state.psi > 0)


def test_init_state_is_deterministic():
    Y = random_observations(0, 5, 10)
    a = init_state(Y, 2, Mode.FULL, rng_seed=7)
    b = init_state(Y, 2, Mode.FULL, rng_seed=7)
    for attr in ("M", "V0", "V1", "psi"):
        np.testing.assert_array_equal(getattr(a, attr), getattr(b, attr))
    np.testing.assert_array_equal(a.shrink0.gamma, b.shrink0.gamma)


def test_init_state_warm_copies_mixing():
    Y = random_observations(0, 5, 10)
    partial = init_state(Y, 2, Mode.PARTIAL, rng_seed=3)
    full = init_state(Y, 2, Mode.FULL, rng_seed=7, warm=partial)
    np.testing.assert_array_equal(full.M, partial.M)
    np.testing.assert_array_equal(full.V1, partial.V1)
    np.testing.assert_array_equal(full.psi, partial.psi)
    assert full.mode is Mode.FULL


def test_init_state_rejects_bad_shapes():
    Y = random_observations(0, 5, 10)
    with pytest.raises(ShapeError):
        init_state(Y, 5, Mode.FULL, rng_seed=1)
    other = init_state(random_observations(0, 5, 11), 2, Mode.PARTIAL, rng_seed=1)
    with pytest.raises(ShapeError):
        init_state(Y, 2, Mode.FULL, rng_seed=1, warm=other)


def test_compose_sources_cases():
    state = random_state(0, 3, 2, 6)
    A = state.V0.copy()
    state.V1[:] = 0.0
    np.testing.assert_array_equal(compose_sources(state), A)

    state.V0[:] = 0.0
    state.V1[0, 2] = 4.0
    np.testing.assert_array_equal(compose_sources(state)[0], [0, 0, 4, 4, 4, 4])


def test_compose_sources_matches_dense_reconstruction():
    state = random_state(5, 3, 2, 6)
    N = state.N
    expected = state.V0 + state.V1 @ dense_inverse(N, 1).T
    np.testing.assert_allclose(compose_sources(state), expected, atol=1e-12)


def test_compose_sources_partial_ignores_v0():
    state = random_state(5, 3, 2, 6, mode=Mode.PARTIAL)
    np.testing.assert_allclose(compose_sources(state), np.cumsum(state.V1, axis=1))


def test_compose_sources_is_linear():
    a = random_state(1, 3, 2, 6)
    b = random_state(2, 3, 2, 6)
    c = a.copy()
    c.V0, c.V1 = 2.0 * a.V0 - b.V0, 2.0 * a.V1 - b.V1
    np.testing.assert_allclose(compose_sources(c), 2.0 * compose_sources(a) - compose_sources(b),
                               atol=1e-12)


def test_inverse_gamma_is_positive_with_right_mean():
    rng = np.random.default_rng(0)
    draws = inverse_gamma(5.0, np.full(200_000, 8.0), rng)
    assert np.all(draws > 0)
    # mean of IG(a, b) is b / (a - 1)
    assert draws.mean() == pytest.approx(2.0, rel=0.02)


def test_sample_prior_and_simulation_shapes():
    rng = np.random.default_rng(4)
    state = sample_prior(4, 2, 7, Mode.FULL, rng)
    state.validate()
    Y = simulate_observations(state, rng)
    assert Y.shape == (4, 7)


def test_baseline_prior_variance_replaces_first_level_shift_column():
    shrink = random_state(1, 3, 2, 5).shrink1
    var1 = v_prior_variance(shrink, 1, baseline_variance=9.0)
    np.testing.assert_array_equal(var1[:, 0], 9.0)
    np.testing.assert_allclose(var1[:, 1:], shrink.element_variance()[:, 1:])
    np.testing.assert_allclose(v_prior_variance(shrink, 0, 9.0), shrink.element_variance())

    rng = np.random.default_rng(5)
    levels = np.array([sample_prior(3, 2, 5, Mode.PARTIAL, rng, baseline_variance=1e4).V1[:, 0]
                       for _ in range(400)])
    assert 70.0 < levels.std() < 130.0


def test_posterior_draws_store_copies():
    state = random_state(0, 3, 2, 5)
    draws = PosteriorDraws(Mode.FULL)
    draws.append(state, iteration=1)
    state.M[:] = 0.0
    assert not np.all(draws.M[0] == 0.0)
    assert len(draws) == 1
    assert draws.sources().shape == (1, 2, 5)


def test_change_report_invariants():
    N = 6
    g = np.array([0.0, 3.0, 0.0, -2.0, 0.0, 0.0])
    kwargs = dict(S_hat=np.zeros((2, N)), M_hat=np.zeros((3, 2)), psi_hat=np.ones(3),
                  g0_hat=g, g1_hat=g, cutoff0=1.0, cutoff1=1.0)
    report = ChangeReport(cpt0=[4], cpt1=[2], **kwargs)
    assert report.cpt0 == [4] and report.cpt1 == [2]
    with pytest.raises(ValueError):
        ChangeReport(cpt0=[2], cpt1=[2], **kwargs)
    with pytest.raises(ValueError):
        ChangeReport(cpt0=[3], cpt1=[], **kwargs)
    with pytest.raises(ValueError):
        ChangeReport(cpt0=[], cpt1=[7], **kwargs)
