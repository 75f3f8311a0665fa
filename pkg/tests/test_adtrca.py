import numpy as np
import pytest

from adtrca.adtrca import adtrca_classify, adtrca_fit
from adtrca.ard import ard_fit, build_problem, temporal_filter
from adtrca.core import prepare
from adtrca.errors import InvalidInputError
from adtrca.linalg import gen_eig_max, SymmetricPencil
from adtrca.reference import build_dictionary
from adtrca.trca import reproducibility_pencil, trca_classify, trca_fit


def _data(small_synth):
    data = prepare(small_synth, 1.0)
    d = build_dictionary(data.stimulus_frequencies_hz, 5, data.sampling_rate_hz, data.n_samples)
    return data, d


def test_identity_filter_reduces_to_trca(small_synth):
    data, d = _data(small_synth)
    train = data.subset_blocks([0, 1, 2])
    ad = adtrca_fit(train, d, identity_filter=True)
    tr = trca_fit(train)
    np.testing.assert_array_equal(ad.filters, tr.filters)
    for t in data.stimulus_trials(0, [3]) + data.stimulus_trials(3, [3]):
        for ens in (False, True):
            la, fa = adtrca_classify(ad, t, ens)
            lt, ft = trca_classify(tr, t, ens)
            assert la == lt
            np.testing.assert_array_equal(fa, ft)


def test_filtered_pencil_equals_weighted_pencil(small_synth):
    # (A F)(A F)^T = A C A^T and B_f B_f^T = B D B^T with D = blockdiag(C, ..., C)
    data, d = _data(small_synth)
    trials = np.stack([t.samples for t in data.stimulus_trials(2, [0, 1, 2])])
    f = temporal_filter(ard_fit(build_problem(list(trials), d)), d)
    pen_f = reproducibility_pencil(trials @ f.F)
    a = trials.mean(axis=0)
    b = np.concatenate(list(trials), axis=1)
    dmat = np.kron(np.eye(len(trials)), f.C)
    np.testing.assert_allclose(pen_f.numerator, a @ f.C @ a.T, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(pen_f.denominator, b @ dmat @ b.T, rtol=1e-10, atol=1e-12)
    l1, _ = gen_eig_max(pen_f)
    l2, _ = gen_eig_max(SymmetricPencil(a @ f.C @ a.T, 0.5 * (b @ dmat @ b.T + (b @ dmat @ b.T).T)))
    assert l1 == pytest.approx(l2, rel=1e-8)


def test_meta_and_shapes(small_synth):
    data, d = _data(small_synth)
    m = adtrca_fit(data.subset_blocks([0, 1, 2]), d)
    assert m.temporal_filters.shape == (5, data.n_samples, data.n_samples)
    assert m.meta["test_filter"] == "class" and len(m.meta["ard_fits"]) == 5
    label, feats = adtrca_classify(m, data.trial(3, 0))
    assert 0 <= label < 5 and np.all(np.abs(feats) <= 1 + 1e-12)


def test_shared_mode_and_bad_mode(small_synth):
    data, d = _data(small_synth)
    m = adtrca_fit(data.subset_blocks([0, 1, 2]), d, test_filter="shared")
    adtrca_classify(m, data.trial(3, 4), ensemble=True)
    with pytest.raises(InvalidInputError):
        adtrca_fit(data, d, test_filter="bogus")


def test_dictionary_length_mismatch(small_synth):
    data, _ = _data(small_synth)
    with pytest.raises(InvalidInputError):
        adtrca_fit(data, build_dictionary(data.stimulus_frequencies_hz, 2, data.sampling_rate_hz, 10))
