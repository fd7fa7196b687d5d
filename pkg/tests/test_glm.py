import numpy as np
import pytest
from numpy.testing import assert_allclose

from lsrtglm import (
    Dataset,
    LsrParams,
    LsrRank,
    block_gradients,
    full_gradient,
    get_family,
    loss,
    predict,
    predict_many,
    predictor,
    random_ground_truth,
    reconstruct,
    residuals,
    training_loss,
)
from lsrtglm.glm import core_gradient, linear_predictors

from conftest import perfect_fit_dataset, small_problem

FAMILIES = ("linear", "logistic", "poisson")


def fd_loss_wrt(family, params, data, getter, step=1e-6):
    """Central finite differences of loss() in the array returned by getter."""
    target = getter(params)
    out = np.zeros_like(target)
    for idx in np.ndindex(*target.shape):
        saved = target[idx]
        target[idx] = saved + step
        up = loss(family, params, data)
        target[idx] = saved - step
        down = loss(family, params, data)
        target[idx] = saved
        out[idx] = (up - down) / (2 * step)
    return out


def zero_core_like(params):
    return LsrParams(np.zeros_like(params.core), params.factors)


def test_family_lookup():
    assert get_family("Linear").name == "linear"
    assert get_family(get_family("poisson")) is get_family("poisson")
    with pytest.raises(ValueError):
        get_family("gamma")


def test_response_validation():
    covs = np.zeros((3, 2, 2))
    with pytest.raises(ValueError):
        loss("logistic", _tiny_params(), Dataset(covs, [0.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        loss("poisson", _tiny_params(), Dataset(covs, [1.0, -2.0, 0.0]))
    with pytest.raises(ValueError):
        loss("poisson", _tiny_params(), Dataset(covs, [1.5, 2.0, 0.0]))


def _tiny_params():
    return LsrParams(np.zeros((2, 2)), [[np.eye(2), np.eye(2)]])


def test_predictor_zero_core(rng):
    truth, point, train, _ = small_problem()
    zeroed = zero_core_like(point)
    x = rng.standard_normal(truth.shape)
    assert predictor(zeroed, x) == 0.0


def test_predictor_self_inner():
    truth, _, _, _ = small_problem()
    b = reconstruct(truth)
    assert predictor(truth, b) == pytest.approx(np.linalg.norm(b) ** 2, rel=1e-12)


def test_predictor_matches_kronecker_form(rng):
    _, point, _, _ = small_problem(seed=4)
    x = rng.standard_normal(point.shape)
    expected = 0.0
    for row in point.factors:
        big = row[-1]
        for f in reversed(row[:-1]):
            big = np.kron(big, f)
        expected += (big @ point.core.reshape(-1, order="F")) @ x.reshape(-1, order="F")
    assert predictor(point, x) == pytest.approx(expected, rel=1e-10)


def test_linear_zero_predictor_loss():
    truth, _, train, _ = small_problem()
    zeroed = zero_core_like(truth)
    expected = 0.5 * np.mean(train.responses**2)
    assert training_loss("linear", zeroed, train) == pytest.approx(expected, rel=1e-12)


def test_logistic_loss_at_zero_eta():
    truth, _, train, _ = small_problem("logistic", seed=1)
    zeroed = zero_core_like(truth)
    assert loss("logistic", zeroed, train) == pytest.approx(np.log(2.0), rel=1e-12)
    # per-sample value is log 2 regardless of the label
    fam = get_family("logistic")
    for y in (0.0, 1.0):
        assert fam.log_partition(0.0) - y * 0.0 == pytest.approx(np.log(2.0))


def test_poisson_loss_at_zero_eta():
    truth, _, train, _ = small_problem("poisson", seed=2)
    zeroed = zero_core_like(truth)
    assert loss("poisson", zeroed, train) == pytest.approx(1.0, rel=1e-12)


def test_linear_loss_forms_differ_by_constant(rng):
    truth, point, train, _ = small_problem()
    const = 0.5 * np.mean(train.responses**2)
    for p in (truth, point):
        assert training_loss("linear", p, train) - loss("linear", p, train) == pytest.approx(
            const, rel=1e-12
        )


def test_poisson_overflow_gives_nonfinite_loss_not_exception():
    truth, _, train, _ = small_problem("poisson", seed=5)
    blown = LsrParams(truth.core * 1e4, truth.factors)
    value = loss("poisson", blown, train)
    assert not np.isfinite(value)


def test_residuals_perfect_fit_zero():
    truth, _, _, _ = small_problem()
    data = perfect_fit_dataset(truth)
    assert_allclose(residuals("linear", truth, data), 0.0, atol=1e-12)


def test_residuals_logistic_at_zero():
    covs = np.zeros((4, 2, 2))
    data = Dataset(covs, [1.0, 1.0, 1.0, 1.0])
    r = residuals("logistic", _tiny_params() , data)
    assert_allclose(r, (0.5 - 1.0) / 4.0, atol=1e-15)


def test_residuals_match_loss_derivative_in_eta():
    # dL/d eta_i via finite differences on a standalone eta-based evaluation
    truth, point, train, _ = small_problem("logistic", seed=3)
    fam = get_family("logistic")
    eta = linear_predictors(point, train.covariates)
    r = residuals("logistic", point, train)
    step = 1e-6
    for i in (0, 7, 23):
        up, down = eta.copy(), eta.copy()
        up[i] += step
        down[i] -= step
        fd = (
            np.mean(fam.log_partition(up) - train.responses * up)
            - np.mean(fam.log_partition(down) - train.responses * down)
        ) / (2 * step)
        assert r[i] == pytest.approx(fd, rel=1e-6)


def test_full_gradient_perfect_fit_zero():
    truth, _, _, _ = small_problem()
    data = perfect_fit_dataset(truth)
    assert_allclose(full_gradient("linear", truth, data), 0.0, atol=1e-12)


def test_full_gradient_single_sample():
    truth, _, _, _ = small_problem()
    rng = np.random.default_rng(8)
    x = rng.standard_normal(truth.shape)
    data = Dataset(x[None], [0.0])
    expected = predictor(truth, x) * x
    assert_allclose(full_gradient("linear", truth, data), expected, atol=1e-12)


def test_full_gradient_matches_dense_fd():
    # oracle differentiates a dense-coefficient loss, bypassing the LSR form
    truth, point, train, _ = small_problem(seed=6)
    fam = get_family("linear")

    def dense_loss(b):
        eta = train.covariates.reshape(train.n, -1) @ b.ravel()
        return np.mean(fam.log_partition(eta) - train.responses * eta)

    b0 = reconstruct(point)
    grad = full_gradient("linear", point, train)
    step = 1e-6
    rng = np.random.default_rng(1)
    for _ in range(12):
        idx = tuple(rng.integers(0, d) for d in b0.shape)
        up, down = b0.copy(), b0.copy()
        up[idx] += step
        down[idx] -= step
        fd = (dense_loss(up) - dense_loss(down)) / (2 * step)
        assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_block_gradients_match_finite_differences(family):
    truth, point, train, _ = small_problem(family, seed=11)
    grads = block_gradients(family, point, train)
    for s in range(2):
        for k in range(3):
            fd = fd_loss_wrt(family, point, train, lambda p, s=s, k=k: p.factors[s][k])
            rel = np.linalg.norm(grads.per_factor[s][k] - fd) / np.linalg.norm(fd)
            assert rel <= 1e-5
    fd_core = fd_loss_wrt(family, point, train, lambda p: p.core)
    rel = np.linalg.norm(grads.core_grad - fd_core) / np.linalg.norm(fd_core)
    assert rel <= 1e-5


def test_block_gradients_zero_at_perfect_fit():
    truth, _, _, _ = small_problem()
    data = perfect_fit_dataset(truth)
    grads = block_gradients("linear", truth, data)
    for row in grads.per_factor:
        for g in row:
            assert_allclose(g, 0.0, atol=1e-12)
    assert_allclose(grads.core_grad, 0.0, atol=1e-12)


def test_core_gradient_identity_factors_equals_full(rng):
    core = rng.standard_normal((3, 4))
    p = LsrParams(core, [[np.eye(3), np.eye(4)]])
    covs = rng.standard_normal((20, 3, 4))
    data = Dataset(covs, rng.standard_normal(20))
    R = full_gradient("linear", p, data)
    assert_allclose(core_gradient(R, p), R, atol=1e-12)


def test_small_core_step_decreases_loss():
    truth, point, train, _ = small_problem(seed=13)
    grads = block_gradients("linear", point, train)
    before = loss("linear", point, train)
    stepped = LsrParams(point.core - 1e-3 * grads.core_grad, point.factors)
    assert loss("linear", stepped, train) < before


def test_predict_values():
    p = _tiny_params()
    x = np.zeros((2, 2))
    assert predict("logistic", p, x) == pytest.approx(0.5)
    assert predict("poisson", p, x) == pytest.approx(1.0)
    truth, _, _, _ = small_problem()
    x = np.random.default_rng(3).standard_normal(truth.shape)
    assert predict("linear", truth, x) == pytest.approx(predictor(truth, x))


def test_predict_many_matches_scalar(rng):
    truth, _, train, _ = small_problem("logistic", seed=9)
    many = predict_many("logistic", truth, train.covariates[:5])
    single = [predict("logistic", truth, train.covariates[i]) for i in range(5)]
    assert_allclose(many, single, rtol=1e-12)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        Dataset(np.zeros(3), np.zeros(3))
