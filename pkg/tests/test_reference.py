import numpy as np
import pytest
from hypothesis import given, strategies as st

from adtrca.errors import AliasingError, InvalidInputError
from adtrca.reference import build_dictionary, build_template


def test_template_column_layout():
    fs, n, f = 100.0, 50, 4.0
    y = build_template(f, 2, fs, n).matrix
    t = np.arange(n) / fs
    expected = np.column_stack([np.sin(2 * np.pi * f * t), np.cos(2 * np.pi * f * t),
                                np.sin(4 * np.pi * f * t), np.cos(4 * np.pi * f * t)])
    np.testing.assert_allclose(y, expected, atol=1e-12)


def test_template_spectrum_peaks_at_harmonics():
    # integer number of cycles: each column's FFT has a single bin at k*f
    fs, n, f = 128.0, 128, 8.0
    y = build_template(f, 3, fs, n).matrix
    for k in range(3):
        for col in (2 * k, 2 * k + 1):
            spec = np.abs(np.fft.rfft(y[:, col]))
            assert np.argmax(spec) == int((k + 1) * f)
            assert spec[int((k + 1) * f)] == pytest.approx(n / 2, rel=1e-9)


def test_aliasing_rejected():
    with pytest.raises(AliasingError):
        build_template(13.0, 5, 128.0, 64)  # 65 Hz >= 64 Hz
    build_template(12.0, 5, 128.0, 64)


def test_dictionary_rejects_duplicates():
    with pytest.raises(InvalidInputError):
        build_dictionary([8.0, 8.0], 2, 128.0, 64)


@given(st.permutations([6.0, 7.5, 9.0, 11.0]))
def test_dictionary_blocks_follow_frequency_order(freqs):
    d = build_dictionary(freqs, 2, 128.0, 64)
    assert d.matrix.shape == (64, 16)
    for s, f in enumerate(freqs):
        np.testing.assert_array_equal(d.template(s).matrix, build_template(f, 2, 128.0, 64).matrix)
