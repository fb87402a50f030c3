"""Metrics and plain-text/binary report writers."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

CLASS_NAMES = ("genuine", "imitated")

# accuracy published for the human-imitated speech corpus, keyed by
# (frontend, feature kind, classifier); informative only
REFERENCE_ACCURACY = {
    ("gtfb", "stm_global", "svm"): 0.61,
    ("gcfb", "stm_global", "svm"): 0.62,
    ("gtfb", "stm_global", "knn"): 0.68,
    ("gcfb", "stm_global", "knn"): 0.69,
    ("gtfb", "stm_global", "extratrees"): 0.63,
    ("gcfb", "stm_global", "extratrees"): 0.62,
    ("gtfb", "stm_segmental", "svm"): 0.67,
    ("gcfb", "stm_segmental", "svm"): 0.67,
    ("gtfb", "stm_segmental", "knn"): 0.60,
    ("gcfb", "stm_segmental", "knn"): 0.60,
    ("gtfb", "stm_segmental", "extratrees"): 0.69,
    ("gcfb", "stm_segmental", "extratrees"): 0.71,
}
HUMAN_REFERENCE_ACCURACY = 0.70


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    """2x2 counts; rows are true (genuine, imitated), columns predicted."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    cm = np.zeros((2, 2), dtype=np.int64)
    for r, a in enumerate((-1, 1)):
        for c, b in enumerate((-1, 1)):
            cm[r, c] = int(np.sum((y_true == a) & (y_pred == b)))
    return cm


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    return int(np.sum(y_true == np.asarray(y_pred))) / y_true.size


@dataclass
class EvalReport:
    accuracy: float
    confusion: list
    predictions: list
    config: dict
    pipeline_fingerprint: str
    reference_accuracy: float | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_predictions(cls, source_ids, y_true, y_pred, scores, config, fingerprint, reference=None):
        preds = [{"source_id": s, "true": CLASS_NAMES[int(t > 0)], "predicted": CLASS_NAMES[int(p > 0)],
                  "score": float(v)}
                 for s, t, p, v in zip(source_ids, y_true, y_pred, scores)]
        return cls(accuracy(y_true, y_pred), confusion_matrix(y_true, y_pred).tolist(), preds,
                   config, fingerprint, reference)

    def recomputed_accuracy(self) -> float:
        hits = sum(p["true"] == p["predicted"] for p in self.predictions)
        return hits / len(self.predictions)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def write_text(path, text: str) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_report(out_dir, report: EvalReport) -> dict:
    """report.json, confusion.csv and predictions.csv under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": os.path.join(out_dir, "report.json"),
        "confusion": os.path.join(out_dir, "confusion.csv"),
        "predictions": os.path.join(out_dir, "predictions.csv"),
    }
    write_text(paths["report"], report.to_json())
    with open(paths["confusion"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\predicted", *CLASS_NAMES])
        for name, row in zip(CLASS_NAMES, report.confusion):
            w.writerow([name, *row])
    with open(paths["predictions"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "true", "predicted", "score"])
        for p in report.predictions:
            w.writerow([p["source_id"], p["true"], p["predicted"], repr(p["score"])])
    return paths


def write_matrix_csv(path, matrix, row_header=None, col_header=None) -> None:
    matrix = np.asarray(matrix)
    with open(os.fspath(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if col_header is not None:
            w.writerow(["", *[repr(float(c)) for c in col_header]])
        for i, row in enumerate(matrix):
            cells = [repr(float(v)) for v in row]
            w.writerow(([repr(float(row_header[i]))] if row_header is not None else []) + cells)


def write_pgm(path, matrix, log: bool = False) -> None:
    """8-bit binary PGM; image row 0 is matrix row 0.

    With ``log=True`` values are shown on a 60 dB scale below the maximum.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if log:
        peak = m.max()
        floor = peak * 1e-6 if peak > 0 else 1.0
        m = 10.0 * np.log10(np.maximum(m, floor) / floor)
    lo, hi = m.min(), m.max()
    scaled = np.zeros_like(m) if hi == lo else (m - lo) / (hi - lo)
    pixels = np.round(scaled * 255).astype(np.uint8)
    with open(os.fspath(path), "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(os.fspath(path), "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    width, height = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)
