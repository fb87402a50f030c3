import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import hilbert

from stm_detect.audio import AudioClip
from stm_detect.envelope import (analytic_signal, auditory_spectrogram, power_envelope,
                                 resample_envelope)
from stm_detect.filterbank import FilterbankSpec, build_filterbank

FS = 32000
EDGE = int(0.05 * FS)


def t_axis(seconds=3.0, fs=FS):
    return np.arange(int(seconds * fs)) / fs


def dominant_nondc(x, rate):
    spec = np.abs(np.fft.rfft(x - x.mean()))
    spec[0] = 0
    return np.fft.rfftfreq(x.size, 1 / rate)[np.argmax(spec)]


@pytest.fixture(scope="module")
def fb():
    return build_filterbank(FilterbankSpec())


@pytest.mark.parametrize("n", [999, 1000])
def test_analytic_signal_matches_scipy(n):
    x = np.random.default_rng(n).standard_normal((3, n))
    np.testing.assert_allclose(analytic_signal(x), hilbert(x), atol=1e-12)
    np.testing.assert_allclose(analytic_signal(x.T, axis=0), hilbert(x.T, axis=0), atol=1e-12)


def test_pure_tone_envelope_is_amplitude_squared():
    e = power_envelope(1.5 * np.cos(2 * np.pi * 1000 * t_axis()), FS)
    np.testing.assert_allclose(e[EDGE:-EDGE], 1.5 ** 2, rtol=0.01)


def test_am_tone_envelope():
    t = t_axis()
    e = power_envelope((1 + 0.5 * np.cos(2 * np.pi * 8 * t)) * np.cos(2 * np.pi * 1000 * t), FS)
    assert e.mean() == pytest.approx(1 + 0.5 ** 2 / 2, rel=1e-3)
    spec = np.abs(np.fft.rfft(e - e.mean()))
    freqs = np.fft.rfftfreq(e.size, 1 / FS)
    assert freqs[np.argmax(spec)] == pytest.approx(8.0)
    # squaring the AM envelope adds a weaker line at 16 Hz
    assert spec[np.argmin(abs(freqs - 16))] > 0.05 * spec.max()


def test_zeros():
    assert not power_envelope(np.zeros(4000), FS).any()


def test_empty_input():
    with pytest.raises(ValueError):
        power_envelope(np.zeros(0), FS)


def test_carrier_phase_invariance():
    t = t_axis(1.0)
    a = power_envelope(np.cos(2 * np.pi * 700 * t), FS)
    b = power_envelope(np.sin(2 * np.pi * 700 * t), FS)
    np.testing.assert_allclose(a[EDGE:-EDGE], b[EDGE:-EDGE], rtol=0.01)


@settings(max_examples=12, deadline=None)
@given(st.floats(2.0, 32.0), st.floats(0.2, 1.0), st.floats(400.0, 3000.0))
def test_modulation_rate_fidelity(fm, depth, fc):
    t = t_axis(2.0)
    e = power_envelope((1 + depth * np.cos(2 * np.pi * fm * t)) * np.cos(2 * np.pi * fc * t), FS)
    assert abs(dominant_nondc(e, FS) - fm) <= FS / e.size


@settings(max_examples=8, deadline=None)
@given(st.floats(0.01, 100.0))
def test_energy_scales_quadratically(a):
    x = np.random.default_rng(5).standard_normal(8000)
    base = power_envelope(x, FS)
    np.testing.assert_allclose(power_envelope(a * x, FS), a * a * base, rtol=1e-6, atol=1e-12 * a * a)


def test_resample_constant():
    r = resample_envelope(np.full(48000, 2.5), 16000, 160)
    assert r.size == 480
    np.testing.assert_allclose(r, 2.5, rtol=1e-4)


def test_resample_length_rounds():
    assert resample_envelope(np.ones(32100), 32000, 160).size == round(32100 * 160 / 32000)
    assert resample_envelope(np.ones(96000), 32000, 160).size == 480


def test_resample_preserves_8hz_sinusoid():
    n = 48000
    x = 1 + 0.3 * np.sin(2 * np.pi * 8 * np.arange(n) / 16000)
    r = resample_envelope(x, 16000, 160)
    amp_in = 2 * np.abs(np.fft.rfft(x))[24] / n
    amp_out = 2 * np.abs(np.fft.rfft(r))[24] / r.size
    assert dominant_nondc(r, 160) == pytest.approx(8.0)
    assert amp_out == pytest.approx(amp_in, rel=0.01)


def test_resample_needs_lower_rate():
    with pytest.raises(ValueError):
        resample_envelope(np.ones(100), 160, 160)


def test_spectrogram_of_1khz_tone(fb):
    clip = AudioClip(0.5 * np.sin(2 * np.pi * 1000 * t_axis()), FS)
    spec = auditory_spectrogram(fb, clip)
    assert spec.values.shape == (64, 480)
    assert spec.envelope_rate == 160
    nearest = np.argmin(abs(fb.center_freqs - 1000))
    assert np.argmax(spec.values.mean(axis=1)) == nearest
    assert np.all(spec.values >= 0)


def test_spectrogram_of_silence(fb):
    spec = auditory_spectrogram(fb, AudioClip(np.zeros(3 * FS), FS))
    assert spec.values.shape == (64, 480) and not spec.values.any()


def test_spectrogram_of_noise(fb):
    x = np.random.default_rng(2024).standard_normal(3 * FS) * 0.1
    spec = auditory_spectrogram(fb, AudioClip(x, FS))
    assert np.all(spec.values.mean(axis=1) > 0)
    assert np.all(np.isfinite(spec.values))
