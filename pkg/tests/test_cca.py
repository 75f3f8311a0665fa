import numpy as np
import pytest
from hypothesis import given, strategies as st

from adtrca.cca import cca_classify, cca_features, cca_rho
from adtrca.reference import build_dictionary, build_template
from oracles import cca_svd


def test_matches_svd_oracle(rng):
    tpl = build_template(9.0, 3, 128.0, 64)
    for _ in range(10):
        x = rng.standard_normal((4, 64))
        assert cca_rho(x, tpl) == pytest.approx(cca_svd(x, tpl.matrix), abs=1e-8)


def test_pure_sinusoid_gives_unit_correlation():
    fs, n = 128.0, 128
    t = np.arange(n) / fs
    x = np.vstack([np.sin(2 * np.pi * 10 * t + 0.3), np.cos(2 * np.pi * 20 * t)])
    assert cca_rho(x, build_template(10.0, 2, fs, n)) == pytest.approx(1.0, abs=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_invariant_to_channel_mixing(seed):
    rng = np.random.default_rng(seed)
    tpl = build_template(7.5, 2, 128.0, 64)
    x = rng.standard_normal((3, 64))
    m = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    assert cca_rho(m @ x, tpl) == pytest.approx(cca_rho(x, tpl), abs=1e-7)


def test_classify_recovers_frequency():
    fs, n = 128.0, 128
    d = build_dictionary([6.66, 7.5, 8.57, 10.0, 12.0], 3, fs, n)
    t = np.arange(n) / fs
    rng = np.random.default_rng(1)
    x = np.vstack([np.sin(2 * np.pi * 8.57 * t), np.sin(2 * np.pi * 8.57 * t + 1)]) + 0.5 * rng.standard_normal((2, n))
    label, rho = cca_classify(x, d)
    assert label == 2 and rho.shape == (5,)
    assert np.all((rho >= 0) & (rho <= 1))


def test_ties_break_to_lowest_index():
    fs, n = 128.0, 64
    d = build_dictionary([8.0, 8.5], 1, fs, n)
    # a trial with every sample identical in column space of both: use the sum of both templates' bases
    x = np.vstack([d.matrix.T, np.ones(n)])  # spans both templates fully -> rho = 1 for each
    label, rho = cca_classify(x, d)
    np.testing.assert_allclose(rho, 1.0, atol=1e-8)
    assert label == int(np.argmax(rho))
    assert cca_features(x, d).shape == (2,)
