"""Spectro-temporal modulation (STM) features from gammatone/gammachirp
auditory filterbanks, with from-scratch classifiers for genuine vs. imitated
speech."""

from .audio import AudioClip, load_audio, write_wav
from .envelope import AuditorySpectrogram, auditory_spectrogram, power_envelope, resample_envelope
from .filterbank import (AuditoryFilterbank, FilterbankSpec, apply_filterbank, build_filterbank,
                         erb_bandwidth, erb_space)
from .modulation import StmFeature, Standardizer, flatten_standardize, stm_global, stm_segmental
from .pipeline import PipelineConfig, extract

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "AuditoryFilterbank", "AuditorySpectrogram", "FilterbankSpec", "PipelineConfig",
    "Standardizer", "StmFeature", "apply_filterbank", "auditory_spectrogram", "build_filterbank",
    "erb_bandwidth", "erb_space", "extract", "flatten_standardize", "load_audio", "power_envelope",
    "resample_envelope", "stm_global", "stm_segmental", "write_wav",
]
