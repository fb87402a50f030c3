import json
import os
from dataclasses import replace

import numpy as np
import pytest
from scipy.io import wavfile

from conftest import SMALL_LAYOUT, write_corpus
from stm_detect import cache
from stm_detect.harness import (ExperimentConfig, ExtractionError, MissingFeatureError, SingleClassError,
                                grid_configs, run_evaluate, run_extract, run_train)
from stm_detect.manifest import load_manifest, write_manifest
from stm_detect.pipeline import PipelineConfig
from stm_detect.reports import EvalReport, confusion_matrix, read_pgm, write_pgm


@pytest.fixture(scope="module")
def extracted(small_corpus, tmp_path_factory):
    store = str(tmp_path_factory.mktemp("cache"))
    manifest = load_manifest(small_corpus)
    first = run_extract(manifest, store)
    return manifest, store, first


def test_extract_dims_and_cache_reuse(extracted):
    manifest, store, first = extracted
    assert first.computed == len(SMALL_LAYOUT) * 4
    again = run_extract(manifest, store)
    assert again.computed == 0 and again.cached == len(SMALL_LAYOUT) * 4
    files = sorted(os.listdir(store))
    assert len(files) == len(SMALL_LAYOUT) * 4
    for e in manifest.entries:
        for fe in ("gtfb", "gcfb"):
            for kind, dims in (("stm_global", (64, 480)), ("stm_segmental", (64, 160, 5))):
                with open(cache.cache_path(store, e.source_id, fe, kind), "rb") as fh:
                    rec = cache.decode_record(fh.read(), e.source_id)
                assert rec.dims == dims
                assert np.all(np.isfinite(rec.array()))


def test_pipeline_change_recomputes(extracted, tmp_path):
    manifest, store, _ = extracted
    changed = PipelineConfig().with_overrides(chirp_coeff=-2.0)
    s = run_extract(manifest, store, ("gcfb",), ("stm_global",), changed)
    assert s.computed == len(SMALL_LAYOUT)
    # and the default configuration is still a hit for everything else
    assert run_extract(manifest, store, ("gtfb",), ("stm_global",)).computed == 0


def test_train_evaluate_round_trip(extracted, tmp_path):
    manifest, store, _ = extracted
    cfg = ExperimentConfig(frontend="gtfb", feature_kind="stm_global", classifier="knn", k=1)
    run_train(cfg, manifest, store, tmp_path)
    report = run_evaluate(cfg, manifest, store, tmp_path, tmp_path)
    assert sum(map(sum, report.confusion)) == 2
    assert report.accuracy == report.recomputed_accuracy()
    assert report.reference_accuracy == 0.68
    saved = EvalReport.from_json(open(tmp_path / "report.json").read())
    assert saved == report
    assert "manifest" not in json.dumps(report.config) and str(tmp_path) not in json.dumps(report.config)
    assert open(tmp_path / "predictions.csv").read().count("\n") == 3


def test_model_bytes_are_deterministic(extracted, tmp_path):
    manifest, store, _ = extracted
    cfg = ExperimentConfig(frontend="gcfb", feature_kind="stm_segmental", classifier="extratrees", n_trees=5)
    for d in ("a", "b"):
        run_train(cfg, manifest, store, tmp_path / d)
    for name in ("model.stmm", "scaler.stmm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_evaluate_rejects_other_pipeline(extracted, tmp_path):
    manifest, store, _ = extracted
    cfg = ExperimentConfig(frontend="gtfb", feature_kind="stm_global", classifier="knn", k=1)
    run_train(cfg, manifest, store, tmp_path)
    other = ExperimentConfig(frontend="gtfb", feature_kind="stm_global", classifier="knn", k=1,
                             pipeline=PipelineConfig().with_overrides(order=3))
    with pytest.raises(Exception, match="different pipeline"):
        run_evaluate(other, manifest, store, tmp_path)


def test_missing_features(small_corpus, tmp_path):
    manifest = load_manifest(small_corpus)
    with pytest.raises(MissingFeatureError) as info:
        run_train(ExperimentConfig(), manifest, tmp_path / "empty", tmp_path / "out")
    assert len(info.value.failures) == 4


def test_single_class_training_fails(tmp_path):
    path = write_corpus(str(tmp_path), [("genuine", "train"), ("genuine", "train"), ("imitated", "test")])
    with pytest.raises(SingleClassError, match="genuine"):
        run_train(ExperimentConfig(), load_manifest(path), tmp_path / "c", tmp_path / "o")


def test_failures_are_aggregated(tmp_path):
    path = write_corpus(str(tmp_path), [("genuine", "train"), ("imitated", "train"), ("genuine", "test")])
    (tmp_path / "audio" / "broken.wav").write_bytes(b"RIFF\x00\x00")
    wavfile.write(str(tmp_path / "audio" / "int32.wav"), 16000, np.zeros(16000, np.int32))
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("audio/broken.wav,imitated,test,x,none\naudio/int32.wav,genuine,test,y,none\n")
    manifest = load_manifest(path)
    store = tmp_path / "cache"
    with pytest.raises(ExtractionError) as info:
        run_extract(manifest, store, ("gtfb",), ("stm_global",))
    failed = sorted(os.path.basename(f["path"]) for f in info.value.failures)
    assert failed == ["broken.wav", "int32.wav"]
    errors = {f["error"] for f in info.value.failures}
    assert "UnsupportedEncodingError" in errors
    # the good files were still cached
    assert len(os.listdir(store)) == 3


def test_label_swap_swaps_predictions(extracted, tmp_path):
    manifest, store, _ = extracted
    cfg = ExperimentConfig(frontend="gtfb", feature_kind="stm_global", classifier="knn", k=1)
    run_train(cfg, manifest, store, tmp_path / "a")
    a = run_evaluate(cfg, manifest, store, tmp_path / "a")
    flip = {"genuine": "imitated", "imitated": "genuine"}
    entries = [replace(e, label=flip[e.label]) for e in manifest.entries]
    # next to the original so the relative audio paths still resolve
    swapped = os.path.join(manifest.root, "swapped.csv")
    write_manifest(swapped, entries)
    try:
        m2 = load_manifest(swapped)
    finally:
        os.remove(swapped)
    run_train(cfg, m2, store, tmp_path / "b")
    b = run_evaluate(cfg, m2, store, tmp_path / "b")
    assert [p["predicted"] for p in b.predictions] == [flip[p["predicted"]] for p in a.predictions]


def test_grid_has_twelve_configs():
    names = {c.name for c in grid_configs()}
    assert len(names) == 12


def test_confusion_of_constant_and_perfect_predictors():
    y = np.repeat([-1, 1], 50)
    cm = confusion_matrix(y, np.full(100, -1))
    assert cm.tolist() == [[50, 0], [50, 0]]
    r = EvalReport.from_predictions([str(i) for i in range(100)], y, np.full(100, -1), np.zeros(100), {}, "")
    assert r.accuracy == 0.5 == r.recomputed_accuracy()
    perfect = EvalReport.from_predictions([str(i) for i in range(100)], y, y, np.zeros(100), {}, "")
    assert perfect.accuracy == 1.0 and perfect.confusion == [[50, 0], [0, 50]]


def test_pgm_round_trip(tmp_path):
    m = np.arange(12.0).reshape(3, 4)
    write_pgm(tmp_path / "m.pgm", m)
    back = read_pgm(tmp_path / "m.pgm")
    assert back.shape == (3, 4)
    assert back.min() == 0 and back.max() == 255
