"""Compressor properties: unbiasedness, variance certificate, determinism."""

import numpy as np
import pytest

from sgdlab.compressor import BernoulliScale, Identity, RandK, UnsupportedSizeError


def test_identity_passthrough():
    x = np.array([1.0, 2.0, 3.0])
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(Identity().compress(x, rng), x)
    mean, mse = Identity().exact_moments(x)
    np.testing.assert_array_equal(mean, x)
    assert mse == 0.0


def test_randk_three_outcome_enumeration():
    # k=1, d=3, x=(3,0,4): outcomes (9,0,0), (0,0,0), (0,0,12) each w.p. 1/3;
    # mean is x and mse = (52 + 25 + 73)/3 = 50 = omega * ||x||^2 with omega = 2
    x = np.array([3.0, 0.0, 4.0])
    comp = RandK(k=1)
    mean, mse = comp.exact_moments(x)
    np.testing.assert_allclose(mean, x, rtol=1e-15)
    assert mse == pytest.approx(50.0, rel=1e-15)
    assert comp.omega(3) == 2.0
    rng = np.random.default_rng(5)
    outcomes = {tuple(comp.compress(x, rng)) for _ in range(200)}
    assert outcomes == {(9.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 12.0)}


def test_bernoulli_keep_all_is_degenerate():
    x = np.array([1.5, -2.0, 0.25])
    comp = BernoulliScale(q=1.0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        np.testing.assert_array_equal(comp.compress(x, rng), x)


def test_bernoulli_two_outcome_enumeration():
    # q=0.5, d=1, x=(2): outcomes (4) and (0) each w.p. 1/2
    comp = BernoulliScale(q=0.5)
    mean, mse = comp.exact_moments(np.array([2.0]))
    assert mean[0] == pytest.approx(2.0, rel=1e-15)
    assert mse == pytest.approx(4.0, rel=1e-15)
    assert mse <= comp.omega(1) * 4.0 * (1 + 1e-12)


@pytest.mark.parametrize(
    "comp,d",
    [(RandK(k=1), 4), (RandK(k=2), 5), (RandK(k=3), 6), (BernoulliScale(q=0.3), 6), (Identity(), 5)],
    ids=["randk1", "randk2", "randk3", "bernoulli", "identity"],
)
def test_exact_unbiasedness_and_variance_certificate(comp, d):
    rng = np.random.default_rng(13)
    for _ in range(5):
        x = rng.standard_normal(d)
        mean, mse = comp.exact_moments(x)
        np.testing.assert_allclose(mean, x, rtol=1e-12, atol=1e-12 * np.abs(x).max())
        bound = comp.omega(d) * float(x @ x)
        assert mse <= bound * (1 + 1e-12)
        if isinstance(comp, RandK):
            assert mse == pytest.approx(bound, rel=1e-12)


@pytest.mark.parametrize("comp", [RandK(k=2), BernoulliScale(q=0.4)], ids=["randk", "bernoulli"])
def test_statistical_unbiasedness(comp):
    d, samples = 5, 10**5
    rng = np.random.default_rng(99)
    x = np.array([1.0, -2.0, 0.0, 3.0, 0.5])
    draws = np.empty((samples, d))
    for s in range(samples):
        draws[s] = comp.compress(x, rng)
    se = draws.std(axis=0, ddof=1) / np.sqrt(samples)
    dev = np.abs(draws.mean(axis=0) - x)
    assert np.all(dev <= 4.0 * se + 1e-12)


def test_determinism():
    x = np.arange(6, dtype=float)
    for comp in (RandK(k=2), BernoulliScale(q=0.7), Identity()):
        a = comp.compress(x, np.random.default_rng(123))
        b = comp.compress(x, np.random.default_rng(123))
        np.testing.assert_array_equal(a, b)


def test_batch_rows_match_compressor_distribution():
    # batched API compresses each row independently with the same algorithm
    comp = RandK(k=1)
    X = np.tile(np.array([3.0, 0.0, 4.0]), (1000, 1))
    out = comp.compress_batch(X, np.random.default_rng(7))
    valid = {(9.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 12.0)}
    assert {tuple(row) for row in out} == valid


def test_configuration_errors():
    with pytest.raises(ValueError, match="1 <= k <= d"):
        RandK(k=4).compress(np.zeros(3), np.random.default_rng(0))
    with pytest.raises(ValueError, match="keep probability"):
        BernoulliScale(q=0.0)
    with pytest.raises(ValueError, match="keep probability"):
        BernoulliScale(q=1.5)


def test_enumeration_size_limits():
    with pytest.raises(UnsupportedSizeError):
        RandK(k=10).exact_moments(np.zeros(50))
    with pytest.raises(UnsupportedSizeError):
        BernoulliScale(q=0.5).exact_moments(np.zeros(17))
