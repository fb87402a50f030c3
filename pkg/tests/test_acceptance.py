"""Acceptance criteria 1-10; a PASS/FAIL line per criterion is printed at the end of the run."""

import glob
import json
import os
import time

import numpy as np
import pytest

from stm_detect.audio import AudioClip
from stm_detect.cache import decode_record
from stm_detect.classifiers import KNN, SVM, ExtraTrees, gini
from stm_detect.envelope import auditory_spectrogram
from stm_detect.filterbank import (FilterbankSpec, apply_filterbank, build_filterbank, direct_convolve,
                                   erb_bandwidth, measure_channels)
from stm_detect.modulation import stm_global
from stm_detect.reports import EvalReport

criterion = pytest.mark.criterion


@criterion(1)
def test_c01_erb_formula():
    assert abs(erb_bandwidth(1.0) - 132.639) <= 1e-9
    assert erb_bandwidth(0) == 24.7


@criterion(2)
def test_c02_filterbank_fidelity():
    start = time.perf_counter()
    gt = build_filterbank(FilterbankSpec(kind="gammatone", num_channels=64, f_min=60, f_max=7600))
    bin_width = gt.spec.sample_rate / gt.spec.ir_length
    for row in measure_channels(gt):
        assert abs(row["measured_peak_hz"] - row["center_freq_hz"]) <= bin_width, row
    for kind, chirp in (("gammatone", 0.0), ("gammachirp", -3.7)):
        fb = build_filterbank(FilterbankSpec(kind=kind, chirp_coeff=chirp))
        _, H = fb.frequency_response()
        assert np.abs(np.abs(H).max(axis=1) - 1).max() <= 1e-6
    gc0 = build_filterbank(FilterbankSpec(kind="gammachirp", chirp_coeff=0.0))
    assert np.abs(gc0.impulse_responses - gt.impulse_responses).max() <= 1e-12
    assert time.perf_counter() - start < 10


def _side_energy_ratio(c):
    fb = build_filterbank(FilterbankSpec(kind="gammachirp", chirp_coeff=c))
    _, H = fb.frequency_response(1 << 16)
    p = np.abs(H[fb.num_channels // 2]) ** 2
    i = np.argmax(p)
    return p[:i].sum() / p[i + 1:].sum()


@criterion(3)
def test_c03_gammachirp_asymmetry():
    assert abs(_side_energy_ratio(-3.7) - 1) > 0.05
    assert abs(_side_energy_ratio(0.0) - 1) < 0.01


@criterion(4)
def test_c04_convolution_oracle():
    rng = np.random.default_rng(2024)
    for kind in ("gammatone", "gammachirp"):
        fb = build_filterbank(FilterbankSpec(kind=kind))
        for _ in range(20):
            x = rng.standard_normal(1000)
            fast = apply_filterbank(fb, AudioClip(x, fb.spec.sample_rate))
            slow = direct_convolve(fb, x)
            assert np.abs(fast - slow).max() <= 1e-6 * np.abs(slow).max()


@criterion(5)
def test_c05_envelope_modulation_probe():
    start = time.perf_counter()
    fb = build_filterbank(FilterbankSpec(kind="gammatone"))
    fs = fb.spec.sample_rate
    t = np.arange(3 * fs) / fs
    x = 0.5 * (1 + 0.5 * np.cos(2 * np.pi * 8 * t)) * np.sin(2 * np.pi * 1000 * t)
    spec = auditory_spectrogram(fb, AudioClip(x, fs))
    v = spec.values
    freqs = np.fft.rfftfreq(v.shape[1], 1 / spec.envelope_rate)
    mag = np.abs(np.fft.rfft(v - v.mean(axis=1, keepdims=True), axis=1))
    energetic = v.mean(axis=1) > 1e-3 * v.mean(axis=1).max()
    assert energetic.sum() >= 5
    assert np.all(freqs[np.argmax(mag[energetic, 1:], axis=1) + 1] == 8.0)

    stm = stm_global(spec)
    assert stm.dims == (64, 480)
    dc = np.argmin(np.abs(stm.temporal_mod_axis))
    bin_width = 160 / 480
    # strongest temporal modulation on the spectral-DC row and on the marginal
    for profile in (stm.data[np.argmin(np.abs(stm.spectral_mod_axis))], stm.data.sum(axis=0)):
        profile = profile.copy()
        profile[dc] = 0
        peak = abs(stm.temporal_mod_axis[np.argmax(profile)])
        assert abs(peak - 8.0) <= bin_width
    assert time.perf_counter() - start < 5


@criterion(6)
def test_c06_dimensional_contract(synth_runs):
    records = glob.glob(os.path.join(synth_runs[0]["out"], "cache", "*.stmf"))
    assert len(records) == 100 * 4
    dims = {"stm_global": (64, 480), "stm_segmental": (64, 160, 5)}
    for path in records:
        with open(path, "rb") as fh:
            rec = decode_record(fh.read(), os.path.basename(path))
        assert rec.dims == dims[rec.feature_kind]
    x = np.random.default_rng(6).random((64, 480))
    X = np.fft.fft2(x)
    assert abs((np.abs(X) ** 2).sum() / (64 * 480 * (x ** 2).sum()) - 1) <= 1e-6


@criterion(7)
def test_c07_classifier_oracles():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((100, 6))
    y = rng.choice([-1, 1], 100)
    Q = rng.standard_normal((200, 6))
    knn = KNN(k=5).fit(X, y)
    for q in Q:
        d = np.sqrt(((X - q) ** 2).sum(axis=1))
        brute = sorted(range(100), key=lambda i: (d[i], i))[:5]
        assert list(knn.neighbors(q)) == brute
        assert knn.predict(q[None])[0] == (1 if y[brute].sum() > 0 else -1)

    yb = np.repeat([-1, 1], 20)
    Xb = rng.standard_normal((40, 2)) + 2.0 * yb[:, None]
    svm = SVM(C=10).fit(Xb, yb)
    assert np.all(svm.alphas_ >= 0) and np.all(svm.alphas_ <= 10)
    assert abs((svm.alphas_ * svm.sv_labels_).sum()) <= 1e-6
    assert np.all(svm.predict(Xb) == yb)

    et = ExtraTrees(n_trees=1, seed=3, min_samples_split=20).fit(X, y)
    tree = et.trees_[0]
    assert np.array_equal(et.predict_proba(Q), tree.value[tree.apply(Q)])
    assert gini([12, 0]) == 0.0
    assert gini([6, 6]) == 0.5


def _files(root, pattern):
    return sorted(os.path.relpath(p, root) for p in glob.glob(os.path.join(root, "runs", "**", pattern),
                                                                recursive=True))


@criterion(8)
def test_c08_determinism(synth_runs):
    a, b = synth_runs[0]["out"], synth_runs[1]["out"]
    for pattern in ("*.stmm", "report.json", "confusion.csv", "predictions.csv", "grid_summary.csv"):
        names = _files(a, pattern)
        assert names and names == _files(b, pattern)
        for name in names:
            with open(os.path.join(a, name), "rb") as fa, open(os.path.join(b, name), "rb") as fb:
                assert fa.read() == fb.read(), name
    assert len(_files(a, "model.stmm")) == 12


@criterion(9)
def test_c09_synthetic_demo(synth_runs):
    run = synth_runs[0]
    assert run["code"] == 0
    reports = _files(run["out"], "report.json")
    assert len(reports) == 12
    for name in reports:
        with open(os.path.join(run["out"], name)) as fh:
            acc = json.load(fh)["accuracy"]
        assert acc >= 0.95, (name, acc)
    assert run["seconds"] < 300, run["seconds"]


@criterion(10)
def test_c10_report_integrity(synth_runs):
    out = synth_runs[0]["out"]
    for name in _files(out, "report.json"):
        with open(os.path.join(out, name)) as fh:
            report = EvalReport.from_json(fh.read())
        assert sum(map(sum, report.confusion)) == len(report.predictions) == 60
        assert report.recomputed_accuracy() == report.accuracy
        with open(os.path.join(out, os.path.dirname(name), "predictions.csv")) as fh:
            rows = fh.read().strip().splitlines()[1:]
        hits = sum(r.split(",")[1] == r.split(",")[2] for r in rows)
        assert hits / len(rows) == report.accuracy
