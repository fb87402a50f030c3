"""Hilbert power envelopes and the auditory spectrogram."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .audio import AudioClip, resample
from .filterbank import AuditoryFilterbank, apply_filterbank

ENVELOPE_RATE = 160
LPF_CUTOFF = 64.0
LPF_ORDER = 4


@dataclass(frozen=True, eq=False)
class AuditorySpectrogram:
    values: np.ndarray
    envelope_rate: int
    channel_freqs: np.ndarray
    source_id: str = ""
    duration: float = 0.0

    @property
    def shape(self):
        return self.values.shape


def analytic_signal(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """FFT analytic signal: negative frequencies zeroed, positive ones doubled."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
    n = x.shape[-1]
    half = np.fft.rfft(x, axis=-1)
    half[..., 1:(n + 1) // 2] *= 2.0
    spectrum = np.zeros(x.shape[:-1] + (n,), dtype=np.complex128)
    spectrum[..., :half.shape[-1]] = half
    return np.moveaxis(np.fft.ifft(spectrum, axis=-1), -1, axis)


def _lowpass_sos(sample_rate: int, cutoff: float = LPF_CUTOFF, order: int = LPF_ORDER):
    return butter(order, cutoff, btype="low", fs=sample_rate, output="sos")


def power_envelope(y: np.ndarray, sample_rate: int, cutoff: float = LPF_CUTOFF,
                   order: int = LPF_ORDER) -> np.ndarray:
    """Low-passed squared magnitude of the analytic signal, along the last axis.

    The Butterworth low-pass runs forward and backward (zero phase); the
    small negative overshoots this can leave are clamped to zero.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] == 0:
        raise ValueError("empty subband signal")
    power = np.abs(analytic_signal(y, axis=-1)) ** 2
    sos = _lowpass_sos(sample_rate, cutoff, order)
    # odd extension over ~3 cutoff periods keeps the filter transient off the edges
    padlen = min(int(3 * sample_rate / cutoff), power.shape[-1] - 1)
    env = sosfiltfilt(sos, power, axis=-1, padlen=padlen)
    return np.maximum(env, 0.0)


def resample_envelope(e: np.ndarray, sample_rate: int, target_rate: int = ENVELOPE_RATE) -> np.ndarray:
    """Decimate an already low-passed envelope to ``target_rate``.

    Output length is ``round(len(e) * target_rate / sample_rate)``.
    """
    if target_rate >= sample_rate:
        raise ValueError(f"target rate {target_rate} Hz must be below {sample_rate} Hz")
    e = np.asarray(e, dtype=np.float64)
    n_in = e.shape[-1]
    n_out = int(round(n_in * target_rate / sample_rate))
    # linear edge extension keeps constant and slowly varying envelopes flat at the ends
    out = resample(e, sample_rate, target_rate, axis=-1, padtype="line")
    if out.shape[-1] >= n_out:
        out = out[..., :n_out]
    else:
        pad = [(0, 0)] * (out.ndim - 1) + [(0, n_out - out.shape[-1])]
        out = np.pad(out, pad, mode="edge")
    return np.maximum(out, 0.0)


def auditory_spectrogram(fb: AuditoryFilterbank, clip: AudioClip,
                         envelope_rate: int = ENVELOPE_RATE,
                         cutoff: float = LPF_CUTOFF, order: int = LPF_ORDER) -> AuditorySpectrogram:
    """Filterbank -> power envelope -> envelope-rate decimation, one row per channel."""
    subbands = apply_filterbank(fb, clip)
    env = power_envelope(subbands, clip.sample_rate, cutoff, order)
    values = resample_envelope(env, clip.sample_rate, envelope_rate)
    return AuditorySpectrogram(values, envelope_rate, np.asarray(fb.center_freqs),
                               clip.source_id, clip.duration)
