"""Experiment orchestration: extract -> train -> evaluate, and the 12-run grid."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import cache
from .audio import load_audio
from .classifiers import ExtraTrees, KNN, SVM, read_model, write_model
from .manifest import DatasetManifest, ManifestEntry
from .modulation import Standardizer, flatten
from .pipeline import (FEATURE_KINDS, PipelineConfig, expected_dims, extract, file_digest,
                       record_fingerprint)
from .reports import REFERENCE_ACCURACY, EvalReport, write_report

log = logging.getLogger(__name__)

FRONTENDS = ("gtfb", "gcfb")
CLASSIFIER_NAMES = ("svm", "knn", "extratrees")
MODEL_FILE = "model.stmm"
SCALER_FILE = "scaler.stmm"


class HarnessError(Exception):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])


class ExtractionError(HarnessError):
    pass


class MissingFeatureError(HarnessError):
    pass


class SingleClassError(HarnessError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    frontend: str = "gcfb"
    feature_kind: str = "stm_segmental"
    classifier: str = "extratrees"
    C: float = 1.0
    gamma: object = "scale"
    k: int = 5
    n_trees: int = 100
    features_per_node: int | None = None
    min_samples_split: int = 2
    seed: int = 0
    disjoint_splits: bool = False
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.frontend not in FRONTENDS:
            raise ValueError(f"unknown frontend {self.frontend!r}")
        if self.feature_kind not in FEATURE_KINDS.values():
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        if self.classifier not in CLASSIFIER_NAMES:
            raise ValueError(f"unknown classifier {self.classifier!r}")

    @property
    def name(self) -> str:
        return f"{self.frontend}-{self.feature_kind}-{self.classifier}"

    @property
    def fingerprint(self) -> str:
        return self.pipeline.fingerprint(self.frontend, self.feature_kind)

    def echo(self) -> dict:
        """Settings relevant to the result, without any filesystem paths."""
        d = asdict(self)
        keep = {"svm": ("C", "gamma"), "knn": ("k",),
                "extratrees": ("n_trees", "features_per_node", "min_samples_split")}[self.classifier]
        for key in ("C", "gamma", "k", "n_trees", "features_per_node", "min_samples_split"):
            if key not in keep:
                d.pop(key)
        return d

    def make_classifier(self):
        if self.classifier == "svm":
            return SVM(C=self.C, gamma=self.gamma)
        if self.classifier == "knn":
            return KNN(k=self.k)
        return ExtraTrees(n_trees=self.n_trees, features_per_node=self.features_per_node,
                          min_samples_split=self.min_samples_split, seed=self.seed)


def grid_configs(base: ExperimentConfig = ExperimentConfig()) -> list[ExperimentConfig]:
    """The 2 frontends x 2 feature kinds x 3 classifiers grid."""
    return [replace(base, frontend=f, feature_kind=k, classifier=c)
            for k in ("stm_global", "stm_segmental") for f in FRONTENDS for c in CLASSIFIER_NAMES]


# --- extraction -------------------------------------------------------------

@dataclass
class ExtractSummary:
    computed: int = 0
    cached: int = 0
    records: int = 0
    failures: list = field(default_factory=list)


def _extract_one(path, source_id, frontends, kinds, pipeline, store):
    """Fill the cache for one file; returns the number of records computed."""
    digest = file_digest(path)
    todo = {}
    for fe in frontends:
        missing = [k for k in kinds
                   if cache.cache_get(store, source_id, k, fe,
                                      record_fingerprint(pipeline, fe, k, digest)) is None]
        if missing:
            todo[fe] = missing
    if not todo:
        return 0
    clip = load_audio(path, pipeline.sample_rate, source_id)
    n = 0
    for fe, missing in todo.items():
        feats = extract(clip, fe, missing, pipeline)
        for k, feat in feats.items():
            data = np.ascontiguousarray(feat.data, dtype="<f4")
            cache.cache_put(cache.FeatureCacheRecord(source_id, k, fe, data.shape, data,
                                                     record_fingerprint(pipeline, fe, k, digest)), store)
            n += 1
    return n


def _unique_entries(manifest: DatasetManifest) -> list[ManifestEntry]:
    seen, out = set(), []
    for e in manifest.entries:
        if e.path not in seen:
            seen.add(e.path)
            out.append(e)
    return out


def run_extract(manifest: DatasetManifest, cache_dir, frontends=FRONTENDS,
                kinds=("stm_global", "stm_segmental"), pipeline: PipelineConfig = PipelineConfig(),
                jobs: int = 1) -> ExtractSummary:
    """Populate the cache with one record per (clip, frontend, kind).

    Every file is attempted; failures are collected and raised together as an
    :class:`ExtractionError` at the end.
    """
    entries = _unique_entries(manifest)
    summary = ExtractSummary()
    per_file = len(frontends) * len(kinds)
    args = [(manifest.resolve(e), e.source_id, tuple(frontends), tuple(kinds), pipeline, os.fspath(cache_dir))
            for e in entries]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            futures = [pool.submit(_extract_one, *a) for a in args]
            results = []
            for a, fut in zip(args, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - reported in aggregate
                    results.append(exc)
    else:
        results = []
        for a in args:
            try:
                results.append(_extract_one(*a))
            except Exception as exc:  # noqa: BLE001 - reported in aggregate
                results.append(exc)
    for a, res in zip(args, results):
        if isinstance(res, Exception):
            summary.failures.append({"path": a[0], "error": type(res).__name__, "message": str(res)})
            log.error("extraction failed for %s: %s", a[0], res)
        else:
            summary.computed += res
            summary.cached += per_file - res
            summary.records += per_file
    if summary.failures:
        raise ExtractionError(f"{len(summary.failures)} of {len(entries)} file(s) failed", summary.failures)
    log.info("extracted %d record(s), %d cache hit(s)", summary.computed, summary.cached)
    return summary


def load_features(manifest: DatasetManifest, entries, config: ExperimentConfig, cache_dir) -> np.ndarray:
    """Flattened cached features for ``entries`` as an (n, d) matrix."""
    arrays, missing = [], []
    dims = expected_dims(config.pipeline, config.feature_kind)
    for e in entries:
        path = manifest.resolve(e)
        try:
            fp = record_fingerprint(config.pipeline, config.frontend, config.feature_kind, file_digest(path))
        except OSError as exc:
            missing.append({"path": e.path, "error": type(exc).__name__, "message": str(exc)})
            continue
        rec = cache.cache_get(cache_dir, e.source_id, config.feature_kind, config.frontend, fp)
        if rec is None:
            missing.append({"path": e.path, "error": "MissingFeature",
                            "message": f"no cached {config.frontend}/{config.feature_kind} feature"})
            continue
        if rec.dims != dims:
            missing.append({"path": e.path, "error": "DimensionMismatch",
                            "message": f"cached dims {rec.dims} != expected {dims}"})
            continue
        arrays.append(rec.array())
    if missing:
        raise MissingFeatureError(f"{len(missing)} feature(s) unavailable; run extract first", missing)
    return flatten(arrays)


# --- training / evaluation ----------------------------------------------------

def run_train(config: ExperimentConfig, manifest: DatasetManifest, cache_dir, out_dir):
    """Fit the standardizer and classifier on the train split and persist both.

    Returns ``(model, scaler)``.
    """
    entries = manifest.split("train")
    if not entries:
        raise HarnessError("training split is empty")
    y = np.array([e.y for e in entries])
    if np.all(y == y[0]):
        raise SingleClassError(f"training split holds only '{entries[0].label}' samples")
    X = load_features(manifest, entries, config, cache_dir)
    scaler = Standardizer().fit(X)
    model = config.make_classifier().fit(scaler.transform(X), y)
    meta = {"config": config.echo(), "seed": config.seed, "pipeline_fingerprint": config.fingerprint,
            "feature_dims": list(expected_dims(config.pipeline, config.feature_kind)),
            "train_ids": [e.source_id for e in entries]}
    os.makedirs(out_dir, exist_ok=True)
    write_model(os.path.join(out_dir, MODEL_FILE), model, meta)
    write_model(os.path.join(out_dir, SCALER_FILE), scaler, meta)
    model.meta = meta
    return model, scaler


def run_evaluate(config: ExperimentConfig, manifest: DatasetManifest, cache_dir, model_dir,
                 out_dir=None, figures: bool = False) -> EvalReport:
    """Score the test split with the model stored in ``model_dir``."""
    model = read_model(os.path.join(model_dir, MODEL_FILE), config.classifier)
    scaler = read_model(os.path.join(model_dir, SCALER_FILE), "scaler")
    if model.meta.get("pipeline_fingerprint") != config.fingerprint:
        raise HarnessError("model was trained on features from a different pipeline configuration")
    entries = manifest.split("test", disjoint=config.disjoint_splits)
    if not entries:
        raise HarnessError("test split is empty")
    X = scaler.transform(load_features(manifest, entries, config, cache_dir))
    y_true = np.array([e.y for e in entries])
    y_pred = model.predict(X)
    scores = model.score_samples(X)
    report = EvalReport.from_predictions(
        [e.source_id for e in entries], y_true, y_pred, scores, config.echo(), config.fingerprint,
        REFERENCE_ACCURACY.get((config.frontend, config.feature_kind, config.classifier)))
    report.extra["n_train"] = len(model.meta.get("train_ids", []))
    report.extra["split_overlap"] = bool(manifest.split_overlap) and not config.disjoint_splits
    if out_dir is not None:
        write_report(out_dir, report)
        if figures:
            from .plotting import plot_confusion
            plot_confusion(report, os.path.join(out_dir, "confusion.png"))
    return report


def run_experiment(config: ExperimentConfig, manifest: DatasetManifest, cache_dir, out_dir,
                   figures: bool = False) -> EvalReport:
    run_extract(manifest, cache_dir, (config.frontend,), (config.feature_kind,), config.pipeline)
    run_train(config, manifest, cache_dir, out_dir)
    return run_evaluate(config, manifest, cache_dir, out_dir, out_dir, figures)


def run_grid(manifest: DatasetManifest, cache_dir, out_dir, base: ExperimentConfig = ExperimentConfig(),
             configs=None, jobs: int = 1, figures: bool = False) -> list[EvalReport]:
    """Run every configuration and write ``grid_summary.csv`` in ``out_dir``."""
    configs = list(configs or grid_configs(base))
    frontends = sorted({c.frontend for c in configs}, key=FRONTENDS.index)
    kinds = sorted({c.feature_kind for c in configs})
    run_extract(manifest, cache_dir, frontends, kinds, base.pipeline, jobs)
    reports = []
    for cfg in configs:
        run_dir = os.path.join(out_dir, cfg.name)
        run_train(cfg, manifest, cache_dir, run_dir)
        rep = run_evaluate(cfg, manifest, cache_dir, run_dir, run_dir, figures)
        log.info("%s: accuracy %.3f", cfg.name, rep.accuracy)
        reports.append(rep)
    write_grid_summary(os.path.join(out_dir, "grid_summary.csv"), configs, reports)
    if figures:
        from .plotting import plot_grid
        plot_grid(configs, reports, os.path.join(out_dir, "grid_accuracy.png"))
    return reports


def write_grid_summary(path, configs, reports) -> None:
    lines = ["frontend,feature,classifier,accuracy,reference_accuracy,tn,fp,fn,tp"]
    for cfg, rep in zip(configs, reports):
        (tn, fp), (fn, tp) = rep.confusion
        ref = "" if rep.reference_accuracy is None else repr(rep.reference_accuracy)
        lines.append(f"{cfg.frontend},{cfg.feature_kind},{cfg.classifier},{rep.accuracy!r},{ref},{tn},{fp},{fn},{tp}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_synth_demo(out_dir, seed: int = 0, cache_dir=None, base: ExperimentConfig | None = None,
                   configs=None, jobs: int = 1, figures: bool = False) -> list[EvalReport]:
    """Generate the synthetic corpus under ``out_dir`` and run the grid on it."""
    from .manifest import load_manifest
    from .synth import generate_corpus

    base = replace(base or ExperimentConfig(), seed=seed)
    manifest_path = generate_corpus(out_dir, seed)
    manifest = load_manifest(manifest_path)
    cache_dir = cache_dir or os.path.join(out_dir, "cache")
    return run_grid(manifest, cache_dir, os.path.join(out_dir, "runs"), base, configs, jobs, figures)
