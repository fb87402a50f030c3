"""Spectro-temporal modulation maps and feature standardization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import AuditorySpectrogram

GLOBAL_FRAMES = 480
SEGMENT_FRAMES = 160
SEGMENT_HOP = 80


class ModulationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StmFeature:
    """Magnitude modulation spectrum of an auditory spectrogram.

    ``data`` is K x M (global) or K x M x S (segmental), DC-centred on both
    transform axes. The spectral axis is in cycles per channel, the temporal
    axis in Hz.
    """

    kind: str
    data: np.ndarray
    spectral_mod_axis: np.ndarray
    temporal_mod_axis: np.ndarray
    frontend: str = ""
    segment_times: np.ndarray | None = None
    source_id: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple:
        return tuple(self.data.shape)


def fit_frames(values: np.ndarray, frames: int) -> np.ndarray:
    """Truncate or zero-pad at the tail to exactly ``frames`` columns."""
    n = values.shape[1]
    if n >= frames:
        return values[:, :frames]
    return np.pad(values, ((0, 0), (0, frames - n)))


def modulation_spectrum(block: np.ndarray) -> np.ndarray:
    """|2-D DFT| over (channel, time), DC moved to the centre of both axes."""
    return np.abs(np.fft.fftshift(np.fft.fft2(block)))


def _axes(num_channels: int, frames: int, rate: float):
    spectral = np.fft.fftshift(np.fft.fftfreq(num_channels))
    temporal = np.fft.fftshift(np.fft.fftfreq(frames, d=1.0 / rate))
    return spectral, temporal


def stm_global(spec: AuditorySpectrogram, frames: int | None = GLOBAL_FRAMES,
               frontend: str = "") -> StmFeature:
    """Utterance-level modulation map, K x ``frames``.

    With ``frames=None`` the spectrogram is used at its own length.
    """
    values = np.asarray(spec.values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ModulationError("empty auditory spectrogram")
    n = values.shape[1]
    if frames is not None:
        values = fit_frames(values, frames)
    spectral, temporal = _axes(values.shape[0], values.shape[1], spec.envelope_rate)
    return StmFeature("stm_global", modulation_spectrum(values), spectral, temporal,
                      frontend=frontend, source_id=spec.source_id,
                      meta={"input_frames": n, "duration_s": spec.duration})


def segment_count(n_frames: int, length: int = SEGMENT_FRAMES, hop: int = SEGMENT_HOP) -> int:
    if n_frames < length:
        return 0
    return (n_frames - length) // hop + 1


def stm_segmental(spec: AuditorySpectrogram, frames: int | None = GLOBAL_FRAMES,
                  length: int = SEGMENT_FRAMES, hop: int = SEGMENT_HOP,
                  frontend: str = "") -> StmFeature:
    """Per-window modulation maps stacked to K x ``length`` x S.

    Windows are rectangular, ``length`` frames long with hop ``hop``. The
    envelope is first fitted to ``frames`` columns (as for the global map) so
    every clip yields the same S.

    Raises
    ------
    ModulationError
        If the spectrogram is shorter than one window.
    """
    values = np.asarray(spec.values, dtype=np.float64)
    n = values.shape[1] if values.ndim == 2 else 0
    if n < length:
        raise ModulationError(
            f"{spec.source_id or 'spectrogram'}: {n} frames is shorter than one {length}-frame segment")
    if frames is not None:
        values = fit_frames(values, frames)
    count = segment_count(values.shape[1], length, hop)
    starts = np.arange(count) * hop
    maps = np.stack([modulation_spectrum(values[:, s:s + length]) for s in starts], axis=-1)
    spectral, temporal = _axes(values.shape[0], length, spec.envelope_rate)
    return StmFeature("stm_segmental", maps, spectral, temporal, frontend=frontend,
                      segment_times=starts / spec.envelope_rate, source_id=spec.source_id,
                      meta={"input_frames": n, "duration_s": spec.duration})


class Standardizer:
    """Per-dimension z-scoring with population statistics.

    Dimensions that are constant on the fitting set map to 0.
    """

    def __init__(self, mean=None, std=None):
        self.mean_ = None if mean is None else np.asarray(mean, dtype=np.float64)
        self.std_ = None if std is None else np.asarray(std, dtype=np.float64)

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ModulationError("cannot fit standardization on an empty training set")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # round-off can leave a tiny nonzero spread on constant columns
        constant = np.all(X == X[0], axis=0)
        std[constant] = 0.0
        self.mean_, self.std_ = mean, std
        return self

    def transform(self, X):
        if self.mean_ is None:
            raise RuntimeError("Standardizer is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean_.size:
            raise ModulationError(f"feature length {X.shape[-1]} != fitted length {self.mean_.size}")
        scale = np.where(self.std_ > 0, self.std_, 1.0)
        out = (X - self.mean_) / scale
        out[..., self.std_ == 0] = 0.0
        return out

    def fit_transform(self, X):
        return self.fit(X).transform(X)


def flatten(features) -> np.ndarray:
    """Row-major flattening of a list of features into an (n, d) matrix."""
    features = list(features)
    if not features:
        raise ModulationError("no features to flatten")
    arrays = [f.data if isinstance(f, StmFeature) else np.asarray(f) for f in features]
    dims = {a.shape for a in arrays}
    if len(dims) != 1:
        raise ModulationError(f"feature dimensions differ: {sorted(dims)}")
    kinds = {f.kind for f in features if isinstance(f, StmFeature)}
    fronts = {f.frontend for f in features if isinstance(f, StmFeature)}
    if len(kinds) > 1 or len(fronts) > 1:
        raise ModulationError("features mix kinds or frontends")
    return np.stack([a.reshape(-1) for a in arrays]).astype(np.float64)


def flatten_standardize(features, fit_on):
    """Flatten ``features`` and z-score them with statistics from ``fit_on`` only.

    Returns ``(X, standardizer)`` where row ``i`` of ``X`` is feature ``i``.
    """
    X = flatten(features)
    fit_on = list(fit_on)
    if not fit_on:
        raise ModulationError("empty training subset")
    scaler = Standardizer().fit(X[fit_on])
    return scaler.transform(X), scaler
