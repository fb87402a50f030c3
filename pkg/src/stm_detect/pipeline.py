"""Feature extraction: audio clip -> auditory spectrogram -> STM features."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np

from .audio import PIPELINE_RATE, AudioClip
from .envelope import ENVELOPE_RATE, LPF_CUTOFF, LPF_ORDER, AuditorySpectrogram, auditory_spectrogram
from .filterbank import DEFAULT_CHIRP, FilterbankSpec, build_filterbank
from .modulation import GLOBAL_FRAMES, SEGMENT_FRAMES, SEGMENT_HOP, StmFeature, stm_global, stm_segmental

FRONTEND_KINDS = {"gtfb": "gammatone", "gcfb": "gammachirp"}
FEATURE_KINDS = {"global": "stm_global", "segmental": "stm_segmental"}
FORMAT_REVISION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """Every parameter that affects extracted feature values."""

    sample_rate: int = PIPELINE_RATE
    num_channels: int = 64
    f_min: float = 60.0
    f_max: float = 7600.0
    order: int = 4
    bandwidth_factor: float = 1.019
    chirp_coeff: float = DEFAULT_CHIRP
    ir_length: int = 4096
    envelope_rate: int = ENVELOPE_RATE
    lpf_cutoff: float = LPF_CUTOFF
    lpf_order: int = LPF_ORDER
    lpf_mode: str = "zero-phase"
    global_frames: int = GLOBAL_FRAMES
    segment_frames: int = SEGMENT_FRAMES
    segment_hop: int = SEGMENT_HOP

    def filterbank_spec(self, frontend: str) -> FilterbankSpec:
        return FilterbankSpec(kind=FRONTEND_KINDS[frontend], num_channels=self.num_channels,
                              f_min=self.f_min, f_max=self.f_max, order=self.order,
                              bandwidth_factor=self.bandwidth_factor, chirp_coeff=self.chirp_coeff,
                              sample_rate=self.sample_rate, ir_length=self.ir_length)

    def fingerprint(self, frontend: str, feature_kind: str) -> str:
        """SHA-256 over the parameters that shape one (frontend, feature kind) output."""
        params = asdict(self)
        if frontend == "gtfb":
            params["chirp_coeff"] = 0.0
        if feature_kind == "stm_global":
            params.pop("segment_frames")
            params.pop("segment_hop")
        params.update(frontend=frontend, feature_kind=feature_kind, revision=FORMAT_REVISION)
        return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def record_fingerprint(config: PipelineConfig, frontend: str, feature_kind: str, audio_digest: str) -> str:
    """Cache key: pipeline parameters plus the content hash of the source file."""
    return hashlib.sha256((config.fingerprint(frontend, feature_kind) + audio_digest).encode()).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@lru_cache(maxsize=8)
def filterbank_for(config: PipelineConfig, frontend: str):
    return build_filterbank(config.filterbank_spec(frontend))


def spectrogram(clip: AudioClip, frontend: str, config: PipelineConfig = PipelineConfig()) -> AuditorySpectrogram:
    fb = filterbank_for(config, frontend)
    return auditory_spectrogram(fb, clip, config.envelope_rate, config.lpf_cutoff, config.lpf_order)


def features_from_spectrogram(spec: AuditorySpectrogram, frontend: str, kinds,
                              config: PipelineConfig = PipelineConfig()) -> dict[str, StmFeature]:
    out = {}
    for kind in kinds:
        if kind == "stm_global":
            out[kind] = stm_global(spec, config.global_frames, frontend=frontend)
        elif kind == "stm_segmental":
            out[kind] = stm_segmental(spec, config.global_frames, config.segment_frames,
                                      config.segment_hop, frontend=frontend)
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
    return out


def extract(clip: AudioClip, frontend: str, kinds=("stm_global", "stm_segmental"),
            config: PipelineConfig = PipelineConfig()) -> dict[str, StmFeature]:
    """All requested STM features of one clip from a single spectrogram pass."""
    if clip.sample_rate != config.sample_rate:
        raise ValueError(f"clip is at {clip.sample_rate} Hz, pipeline expects {config.sample_rate} Hz")
    return features_from_spectrogram(spectrogram(clip, frontend, config), frontend, kinds, config)


def expected_dims(config: PipelineConfig, feature_kind: str) -> tuple:
    if feature_kind == "stm_global":
        return (config.num_channels, config.global_frames)
    count = (config.global_frames - config.segment_frames) // config.segment_hop + 1
    return (config.num_channels, config.segment_frames, count)


def as_float32(feature: StmFeature) -> np.ndarray:
    return np.ascontiguousarray(feature.data, dtype="<f4")
