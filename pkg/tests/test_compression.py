import numpy as np
import pytest

from hiergrad import GaussianNoise, IdentityCompression, UniformQuantizer
from hiergrad.compression import make_scheme


def _roundtrip(scheme, a, b, worker=0, stamp=1):
    return scheme.recover(scheme.compress(a, b, worker=worker, stamp=stamp))


def test_identity_roundtrip_exact():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(4, 3)), rng.normal(size=4)
    a_hat, b_hat = _roundtrip(IdentityCompression(), a, b)
    assert np.array_equal(a_hat, a) and np.array_equal(b_hat, b)


def test_quantizer_error_bound_exhaustive_sweep():
    q = UniformQuantizer(bits=8, lo=-1.0, hi=1.0)
    values = np.linspace(-1.0, 1.0, 40001)
    a_hat, b_hat = _roundtrip(q, values.reshape(1, -1), np.zeros(1))
    err = np.abs(a_hat.ravel() - values)
    assert err.max() <= 2.0 / 256.0
    # midpoint-free grid reconstruction: error is at most half a pitch
    assert err.max() <= q.step / 2 + 1e-15


def test_quantizer_determinism_and_validation():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(3, 2)), rng.normal(size=3)
    q = UniformQuantizer(bits=6, lo=-4.0, hi=4.0)
    first = _roundtrip(q, a, b)
    second = _roundtrip(q, a, b)
    assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
    with pytest.raises(ValueError):
        UniformQuantizer(bits=0, lo=-1, hi=1)
    with pytest.raises(ValueError):
        UniformQuantizer(bits=4, lo=1.0, hi=1.0)


def test_noise_zero_std_is_identity():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(2, 2)), rng.normal(size=2)
    a_hat, b_hat = _roundtrip(GaussianNoise(std=0.0, seed=9), a, b)
    assert np.array_equal(a_hat, a) and np.array_equal(b_hat, b)


def test_noise_seeded_determinism_and_stamp_variation():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(3, 3)), rng.normal(size=3)
    g = GaussianNoise(std=0.1, seed=4)
    one = _roundtrip(g, a, b, worker=1, stamp=7)
    two = _roundtrip(g, a, b, worker=1, stamp=7)
    assert np.array_equal(one[0], two[0]) and np.array_equal(one[1], two[1])
    other = _roundtrip(g, a, b, worker=1, stamp=8)
    assert not np.array_equal(one[0], other[0])
    with pytest.raises(ValueError):
        GaussianNoise(std=-0.1)


def test_make_scheme_dispatch():
    assert make_scheme({"scheme": "identity"}).name == "identity"
    assert make_scheme({"scheme": "quantize", "bits": 8, "lo": -1, "hi": 1}).bits == 8
    assert make_scheme({"scheme": "noise", "std": 0.5, "seed": 2}).std == 0.5
    with pytest.raises(ValueError):
        make_scheme({"scheme": "wavelet"})
