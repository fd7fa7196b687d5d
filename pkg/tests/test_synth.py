import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from lsrtglm import LsrRank, generate, reconstruct
from lsrtglm.glm import linear_predictors
from lsrtglm.synth import ETA_CAP, SynthSpec


def test_generation_is_reproducible():
    spec = SynthSpec(family="linear", seed=99)
    t1, tr1, te1 = generate(spec)
    t2, tr2, te2 = generate(spec)
    assert_array_equal(t1.core, t2.core)
    assert_array_equal(tr1.covariates, tr2.covariates)
    assert_array_equal(tr1.responses, tr2.responses)
    assert_array_equal(te1.responses, te2.responses)


def test_changing_n_test_never_touches_training_set():
    a = generate(SynthSpec(family="linear", n_test=10, seed=4))
    b = generate(SynthSpec(family="linear", n_test=500, seed=4))
    assert_array_equal(a[1].covariates, b[1].covariates)
    assert_array_equal(a[1].responses, b[1].responses)


def test_linear_noiseless_responses_are_exact():
    truth, train, test = generate(SynthSpec(family="linear", noise_var=0.0, seed=5))
    eta = linear_predictors(truth, train.covariates)
    assert_array_equal(train.responses, eta)


def test_linear_noise_variance_scale():
    # the 0.1 default is a variance: residual sample variance must match it
    truth, train, _ = generate(SynthSpec(family="linear", n_train=20000, seed=6))
    eta = linear_predictors(truth, train.covariates)
    assert np.var(train.responses - eta) == pytest.approx(0.1, rel=0.05)


def test_logistic_responses_binary_and_balanced():
    truth, train, _ = generate(SynthSpec(family="logistic", n_train=20000, n_test=10, seed=7))
    y = train.responses
    assert set(np.unique(y)) <= {0.0, 1.0}
    assert 0.3 <= y.mean() <= 0.7  # eta is symmetric around zero


def test_poisson_responses_and_mean_match():
    truth, train, _ = generate(SynthSpec(family="poisson", n_train=5000, n_test=10, seed=8))
    y = train.responses
    assert np.all(y >= 0)
    assert np.all(y == np.floor(y))
    lam = np.exp(linear_predictors(truth, train.covariates))
    assert y.mean() == pytest.approx(lam.mean(), rel=0.10)


def test_poisson_core_rescaled_to_cap_predictors():
    truth, train, _ = generate(SynthSpec(family="poisson", n_train=5000, n_test=10, seed=9))
    eta = linear_predictors(truth, train.covariates)
    assert np.abs(eta).max() <= ETA_CAP + 1e-9
    # an unconstrained standard-normal core would have exceeded the cap here
    raw_truth, _, _ = generate(SynthSpec(family="linear", n_train=5000, n_test=10, seed=9))
    raw_eta = linear_predictors(raw_truth, train.covariates)
    assert np.abs(raw_eta).max() > ETA_CAP


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        SynthSpec(family="gamma")
    with pytest.raises(ValueError):
        SynthSpec(n_train=0)
    with pytest.raises(ValueError):
        SynthSpec(noise_var=-1.0)
    with pytest.raises(ValueError):
        SynthSpec(shape=(4, 4), rank=LsrRank((5, 2), 1))


def test_defaults_match_protocol():
    spec = SynthSpec()
    assert spec.shape == (10, 15, 20)
    assert spec.rank.multilinear_rank == (2, 2, 2)
    assert spec.rank.sep_rank == 2
    assert spec.noise_var == 0.1


def test_truth_reconstruction_shape():
    truth, train, test = generate(SynthSpec(seed=10))
    assert reconstruct(truth).shape == (10, 15, 20)
    assert train.covariates.shape == (500, 10, 15, 20)
    assert test.covariates.shape == (100, 10, 15, 20)
