"""Synthetic two-class corpus for end-to-end checks.

``genuine`` clips are harmonic complexes with slow (about 4 Hz) amplitude
modulation; ``imitated`` clips are band-limited noise with fast (about 20 Hz)
modulation. Each clip is 3 s of 16 kHz PCM16.
"""

from __future__ import annotations

import os

import numpy as np

from .audio import AudioClip, write_wav
from .manifest import ManifestEntry, write_manifest

SYNTH_RATE = 16000
SYNTH_SECONDS = 3.0


def _clip_rng(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def harmonic_am(rng, rate=SYNTH_RATE, seconds=SYNTH_SECONDS) -> np.ndarray:
    t = np.arange(int(rate * seconds)) / rate
    f0 = rng.uniform(100.0, 250.0)
    n_harm = int(4000.0 // f0)
    h = np.arange(1, n_harm + 1)
    phases = rng.uniform(0, 2 * np.pi, n_harm)
    carrier = (np.cos(2 * np.pi * f0 * h[:, None] * t[None, :] + phases[:, None]) / h[:, None]).sum(0)
    am_rate = rng.uniform(3.5, 4.5)
    am = 1.0 + 0.8 * np.sin(2 * np.pi * am_rate * t + rng.uniform(0, 2 * np.pi))
    return carrier * am


def noise_am(rng, rate=SYNTH_RATE, seconds=SYNTH_SECONDS) -> np.ndarray:
    n = int(rate * seconds)
    t = np.arange(n) / rate
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    lo, hi = rng.uniform(300.0, 600.0), rng.uniform(3500.0, 5000.0)
    spectrum[(freqs < lo) | (freqs > hi)] = 0.0
    carrier = np.fft.irfft(spectrum, n)
    am_rate = rng.uniform(19.0, 21.0)
    am = 1.0 + 0.8 * np.sin(2 * np.pi * am_rate * t + rng.uniform(0, 2 * np.pi))
    return carrier * am


def make_clip(label: str, seed: int, index: int) -> AudioClip:
    rng = _clip_rng(seed, index)
    x = harmonic_am(rng) if label == "genuine" else noise_am(rng)
    x = x / np.abs(x).max() * rng.uniform(0.4, 0.6)
    return AudioClip(x, SYNTH_RATE, f"{label}_{index:03d}")


def generate_corpus(out_dir, seed: int = 0, n_train: int = 40, n_test: int = 60) -> str:
    """Write balanced train/test WAVs plus ``manifest.csv``; returns the manifest path."""
    audio_dir = os.path.join(os.fspath(out_dir), "audio")
    os.makedirs(audio_dir, exist_ok=True)
    entries = []
    index = 0
    for split, count in (("train", n_train), ("test", n_test)):
        for i in range(count):
            label = "genuine" if i % 2 == 0 else "imitated"
            clip = make_clip(label, seed, index)
            name = f"{split}_{clip.source_id}.wav"
            write_wav(os.path.join(audio_dir, name), clip)
            entries.append(ManifestEntry(f"audio/{name}", label, split, f"synth{index % 10}", "none"))
            index += 1
    path = os.path.join(os.fspath(out_dir), "manifest.csv")
    write_manifest(path, entries)
    return path
