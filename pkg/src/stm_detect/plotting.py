"""Matplotlib figures written next to the CSV/JSON outputs.

Imported lazily by the harness and CLI; only needed when figures are requested.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reports import CLASS_NAMES  # noqa: E402

# fixed metadata so repeated runs write identical files
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def plot_confusion(report, path, title=None):
    cm = np.asarray(report.confusion)
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    ax.imshow(cm, cmap="Blues", vmin=0)
    for (r, c), v in np.ndenumerate(cm):
        ax.text(c, r, str(v), ha="center", va="center",
                color="white" if v > cm.max() / 2 else "black")
    ax.set_xticks([0, 1], CLASS_NAMES)
    ax.set_yticks([0, 1], CLASS_NAMES)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    cfg = report.config
    ax.set_title(title or f"{cfg.get('frontend')} {cfg.get('feature_kind')} {cfg.get('classifier')}\n"
                          f"accuracy {report.accuracy:.3f}", fontsize=9)
    _save(fig, path)


def plot_grid(configs, reports, path):
    labels = [f"{c.frontend}\n{c.feature_kind.replace('stm_', '')}\n{c.classifier}" for c in configs]
    acc = [r.accuracy for r in reports]
    ref = [np.nan if r.reference_accuracy is None else r.reference_accuracy for r in reports]
    x = np.arange(len(configs))
    fig, ax = plt.subplots(figsize=(10, 3.5))
    ax.bar(x - 0.2, acc, 0.4, label="this run")
    ax.bar(x + 0.2, ref, 0.4, label="reference corpus", color="0.7")
    ax.set_xticks(x, labels, fontsize=7)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.legend(fontsize=8, loc="lower right")
    _save(fig, path)


def plot_spectrogram(spec, path):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    n = spec.values.shape[1]
    ax.imshow(spec.values, aspect="auto", origin="lower", cmap="magma",
              extent=(0, n / spec.envelope_rate, 0, spec.values.shape[0]))
    ax.set_xlabel("time (s)")
    ax.set_ylabel("channel")
    ax.set_title(spec.source_id, fontsize=9)
    _save(fig, path)


def plot_stm(feature, path, floor_db=-60.0):
    data = feature.data if feature.data.ndim == 2 else feature.data.mean(axis=-1)
    db = 20 * np.log10(np.maximum(data / data.max(), 10 ** (floor_db / 20)))
    t, s = feature.temporal_mod_axis, feature.spectral_mod_axis
    fig, ax = plt.subplots(figsize=(6, 3.5))
    im = ax.imshow(db, aspect="auto", origin="lower", cmap="viridis",
                   extent=(t[0], t[-1], s[0], s[-1]))
    fig.colorbar(im, ax=ax, label="dB re max")
    ax.set_xlabel("temporal modulation (Hz)")
    ax.set_ylabel("spectral modulation (cyc/channel)")
    ax.set_title(f"{feature.source_id} {feature.frontend} {feature.kind}", fontsize=9)
    _save(fig, path)


def plot_filterbank(fb, path, nfft=None):
    freqs, H = fb.frequency_response(nfft)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    db = 20 * np.log10(np.maximum(np.abs(H), 1e-6))
    for row in db:
        ax.plot(freqs, row, lw=0.6)
    ax.set_xscale("log")
    ax.set_xlim(fb.spec.f_min / 2, fb.spec.sample_rate / 2)
    ax.set_ylim(-60, 3)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("gain (dB)")
    ax.set_title(f"{fb.spec.kind}, {fb.num_channels} channels", fontsize=9)
    _save(fig, path)
