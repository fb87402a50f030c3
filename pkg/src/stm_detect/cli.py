"""Command-line entry point: ``stm-detect <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace

from . import harness
from .audio import AudioError, load_audio
from .cache import CacheIntegrityError
from .classifiers import ModelFormatError
from .filterbank import FilterbankError, build_filterbank, measure_channels
from .manifest import ManifestError, load_manifest
from .pipeline import PipelineConfig, filterbank_for, features_from_spectrogram, spectrogram
from .reports import write_matrix_csv, write_pgm

log = logging.getLogger("stm_detect")

FEATURES = {"global": "stm_global", "segmental": "stm_segmental"}
CLASSIFIERS = {"svm": "svm", "knn": "knn", "et": "extratrees", "extratrees": "extratrees"}


def _gamma(value):
    return value if value == "scale" else float(value)


def _pipeline_args(p):
    g = p.add_argument_group("filterbank / pipeline overrides")
    g.add_argument("--sample-rate", type=int)
    g.add_argument("--channels", dest="num_channels", type=int)
    g.add_argument("--fmin", dest="f_min", type=float)
    g.add_argument("--fmax", dest="f_max", type=float)
    g.add_argument("--order", type=int)
    g.add_argument("--bandwidth-factor", type=float)
    g.add_argument("--chirp", dest="chirp_coeff", type=float)
    g.add_argument("--ir-length", type=int)


def _common(p, single=True):
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache-dir", default=os.environ.get("STM_CACHE_DIR", ".stm_cache"),
                   help="feature cache directory (default: $STM_CACHE_DIR or .stm_cache)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--disjoint-splits", action="store_true",
                   help="drop test entries whose path also appears in the train split")
    p.add_argument("--jobs", type=int, default=1, help="extraction worker processes")
    if single:
        p.add_argument("--frontend", choices=("gtfb", "gcfb"), default="gcfb")
        p.add_argument("--feature", choices=tuple(FEATURES), default="segmental")
        p.add_argument("--classifier", choices=tuple(CLASSIFIERS), default="et")
    _classifier_args(p)
    _pipeline_args(p)


def _classifier_args(p):
    g = p.add_argument_group("classifier hyperparameters")
    g.add_argument("--C", dest="C", type=float, default=1.0)
    g.add_argument("--gamma", type=_gamma, default="scale")
    g.add_argument("--k", type=int, default=5)
    g.add_argument("--n-trees", type=int, default=100)
    g.add_argument("--features-per-node", type=int)
    g.add_argument("--min-samples-split", type=int, default=2)


def _pipeline_from(args) -> PipelineConfig:
    keys = ("sample_rate", "num_channels", "f_min", "f_max", "order", "bandwidth_factor", "chirp_coeff", "ir_length")
    return PipelineConfig().with_overrides(**{k: getattr(args, k, None) for k in keys})


def _config_from(args) -> harness.ExperimentConfig:
    cfg = harness.ExperimentConfig(
        C=args.C, gamma=args.gamma, k=args.k, n_trees=args.n_trees,
        features_per_node=args.features_per_node, min_samples_split=args.min_samples_split,
        seed=args.seed, disjoint_splits=args.disjoint_splits, pipeline=_pipeline_from(args))
    # only train/evaluate name a single configuration
    if hasattr(args, "classifier"):
        cfg = replace(cfg, frontend=args.frontend, feature_kind=FEATURES[args.feature],
                      classifier=CLASSIFIERS[args.classifier])
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stm-detect",
                                     description="Spectro-temporal modulation features and imitation detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="populate the feature cache for a manifest")
    _common(p, single=False)
    p.add_argument("--frontend", choices=("gtfb", "gcfb", "both"), default="both")
    p.add_argument("--feature", choices=("global", "segmental", "both"), default="both")
    p.add_argument("--dump-spectrogram", action="store_true",
                   help="write each auditory spectrogram as CSV + PGM under --out")
    p.add_argument("--dump-stm", action="store_true", help="write global STM maps as CSV + PGM under --out")
    p.add_argument("--figures", action="store_true", help="also render PNG figures of the dumps")

    p = sub.add_parser("train", help="fit standardization and a classifier on the train split")
    _common(p)

    p = sub.add_parser("evaluate", help="score the test split with a trained model")
    _common(p)
    p.add_argument("--model", required=True, help="directory written by 'train'")
    p.add_argument("--figures", action="store_true")

    p = sub.add_parser("grid", help="run all 12 frontend x feature x classifier configurations")
    _common(p, single=False)
    p.add_argument("--figures", action="store_true")

    p = sub.add_parser("inspect-filterbank", help="tabulate measured filterbank characteristics")
    p.add_argument("--frontend", choices=("gtfb", "gcfb"), default="gtfb")
    p.add_argument("--out", required=True, help="CSV path for the per-channel table")
    p.add_argument("--response-csv", help="also write per-channel magnitude responses here")
    p.add_argument("--nfft", type=int)
    p.add_argument("--figures", action="store_true", help="render the responses to <out>.png")
    _pipeline_args(p)

    p = sub.add_parser("synth-demo", help="generate the synthetic corpus and run the grid on it")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--frontend", choices=("gtfb", "gcfb"))
    p.add_argument("--feature", choices=tuple(FEATURES))
    p.add_argument("--classifier", choices=tuple(CLASSIFIERS))
    _classifier_args(p)
    return parser


def _cmd_extract(args):
    manifest = load_manifest(args.manifest)
    cfg = _config_from(args)
    frontends = ("gtfb", "gcfb") if args.frontend == "both" else (args.frontend,)
    kinds = tuple(FEATURES.values()) if args.feature == "both" else (FEATURES[args.feature],)
    summary = harness.run_extract(manifest, args.cache_dir, frontends, kinds, cfg.pipeline, args.jobs)
    if args.dump_spectrogram or args.dump_stm:
        _dump(manifest, frontends, cfg.pipeline, args)
    print(json.dumps({"computed": summary.computed, "cached": summary.cached, "records": summary.records}))


def _dump(manifest, frontends, pipeline, args):
    os.makedirs(args.out, exist_ok=True)
    for entry in harness._unique_entries(manifest):
        clip = load_audio(manifest.resolve(entry), pipeline.sample_rate, entry.source_id)
        for fe in frontends:
            spec = spectrogram(clip, fe, pipeline)
            stem = os.path.join(args.out, f"{entry.source_id}.{fe}")
            if args.dump_spectrogram:
                write_matrix_csv(stem + ".spectrogram.csv", spec.values)
                write_pgm(stem + ".spectrogram.pgm", spec.values)
                if args.figures:
                    from .plotting import plot_spectrogram
                    plot_spectrogram(spec, stem + ".spectrogram.png")
            if args.dump_stm:
                feat = features_from_spectrogram(spec, fe, ("stm_global",), pipeline)["stm_global"]
                write_matrix_csv(stem + ".stm.csv", feat.data, feat.spectral_mod_axis, feat.temporal_mod_axis)
                write_pgm(stem + ".stm.pgm", feat.data, log=True)
                if args.figures:
                    from .plotting import plot_stm
                    plot_stm(feat, stem + ".stm.png")


def _cmd_train(args):
    manifest = load_manifest(args.manifest)
    cfg = _config_from(args)
    model, _ = harness.run_train(cfg, manifest, args.cache_dir, args.out)
    print(json.dumps({"model": os.path.join(args.out, harness.MODEL_FILE), "kind": model.kind,
                      "pipeline_fingerprint": cfg.fingerprint}))


def _cmd_evaluate(args):
    manifest = load_manifest(args.manifest)
    cfg = _config_from(args)
    report = harness.run_evaluate(cfg, manifest, args.cache_dir, args.model, args.out, args.figures)
    print(json.dumps({"accuracy": report.accuracy, "confusion": report.confusion}))


def _cmd_grid(args):
    manifest = load_manifest(args.manifest)
    base = _config_from(args)
    reports = harness.run_grid(manifest, args.cache_dir, args.out, base, jobs=args.jobs, figures=args.figures)
    _print_grid(reports)


def _print_grid(reports):
    for r in reports:
        c = r.config
        print(f"{c['frontend']:5s} {c['feature_kind']:14s} {c['classifier']:11s} {r.accuracy:.3f}")


def _cmd_inspect(args):
    pipeline = _pipeline_from(args)
    fb = build_filterbank(pipeline.filterbank_spec(args.frontend))
    rows = measure_channels(fb, args.nfft)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    if args.response_csv:
        import numpy as np
        freqs, H = fb.frequency_response(args.nfft)
        write_matrix_csv(args.response_csv, np.abs(H), fb.center_freqs, freqs)
    if args.figures:
        from .plotting import plot_filterbank
        plot_filterbank(fb, os.path.splitext(args.out)[0] + ".png", args.nfft)
    print(json.dumps({"channels": len(rows), "out": args.out}))


def _cmd_synth(args):
    base = harness.ExperimentConfig(C=args.C, gamma=args.gamma, k=args.k, n_trees=args.n_trees,
                                    features_per_node=args.features_per_node,
                                    min_samples_split=args.min_samples_split, seed=args.seed)
    configs = harness.grid_configs(base)
    if args.frontend:
        configs = [c for c in configs if c.frontend == args.frontend]
    if args.feature:
        configs = [c for c in configs if c.feature_kind == FEATURES[args.feature]]
    if args.classifier:
        configs = [c for c in configs if c.classifier == CLASSIFIERS[args.classifier]]
    reports = harness.run_synth_demo(args.out, args.seed, args.cache_dir, base, configs, args.jobs, args.figures)
    _print_grid(reports)


COMMANDS = {"extract": _cmd_extract, "train": _cmd_train, "evaluate": _cmd_evaluate, "grid": _cmd_grid,
            "inspect-filterbank": _cmd_inspect, "synth-demo": _cmd_synth}

EXPECTED_ERRORS = (harness.HarnessError, ManifestError, AudioError, FilterbankError, CacheIntegrityError,
                   ModelFormatError, ValueError, OSError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except EXPECTED_ERRORS as exc:
        err = {"error": type(exc).__name__, "message": str(exc),
               "failures": getattr(exc, "failures", [])}
        print(json.dumps(err, indent=2), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
