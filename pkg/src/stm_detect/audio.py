"""WAV input/output and resampling to the pipeline rate."""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

PIPELINE_RATE = 32000


class AudioError(Exception):
    """Base class for audio loading failures."""


class AudioReadError(AudioError):
    """The file is missing or is not a parseable WAV container."""


class UnsupportedEncodingError(AudioError):
    """The WAV sample format is neither PCM16 nor float32."""


class EmptyAudioError(AudioError):
    """The file holds zero samples."""


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer.

    Parameters
    ----------
    samples : ndarray, shape (n,)
        Real amplitudes, nominally in [-1, 1].
    sample_rate : int
        Sampling rate in Hz.
    source_id : str
        Identifier carried through the pipeline into reports and caches.
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"AudioClip expects mono samples, got shape {samples.shape}")
        if samples.size == 0:
            raise EmptyAudioError(f"{self.source_id or 'clip'}: zero-length audio")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size


def resample(x: np.ndarray, source_rate: int, target_rate: int, axis: int = -1, padtype: str = "constant") -> np.ndarray:
    """Band-limited polyphase rate conversion by the reduced ratio target/source."""
    if source_rate == target_rate:
        return np.asarray(x, dtype=np.float64)
    ratio = Fraction(int(target_rate), int(source_rate))
    return resample_poly(x, ratio.numerator, ratio.denominator, axis=axis, padtype=padtype)


def _read_wav(path):
    if not os.path.isfile(path):
        raise AudioReadError(f"{path}: no such file")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, OSError, EOFError) as exc:
        raise AudioReadError(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        data = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(f"{path}: sample format {data.dtype} is not PCM16 or float32")
    return int(rate), data


def load_audio(path, target_rate: int = PIPELINE_RATE, source_id: str | None = None) -> AudioClip:
    """Load a WAV file as a mono clip at ``target_rate``.

    Channels are averaged. Rate conversion uses a polyphase FIR resampler.

    Raises
    ------
    AudioReadError
        If the file is missing or not a WAV container.
    UnsupportedEncodingError
        If samples are not 16-bit integer or 32-bit float.
    EmptyAudioError
        If the file holds no samples.
    """
    rate, data = _read_wav(os.fspath(path))
    if source_id is None:
        source_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    if data.shape[0] == 0:
        raise EmptyAudioError(f"{path}: zero-length audio")
    if data.ndim == 2:
        data = data.mean(axis=1)
    data = resample(data, rate, target_rate)
    return AudioClip(data, target_rate, source_id)


def write_wav(path, clip: AudioClip, encoding: str = "pcm16") -> None:
    """Write ``clip`` as a mono WAV, either ``"pcm16"`` or ``"float32"``."""
    if encoding == "pcm16":
        data = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = clip.samples.astype(np.float32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    wavfile.write(os.fspath(path), clip.sample_rate, data)
