"""Dataset manifest parsing.

A manifest is a UTF-8 CSV with header ``path,label,split,speaker_id,language``.
Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field

COLUMNS = ("path", "label", "split", "speaker_id", "language")
LABELS = ("genuine", "imitated")
SPLITS = ("train", "test")
LABEL_CODES = {"genuine": -1, "imitated": 1}


class ManifestError(ValueError):
    pass


class SplitOverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str
    speaker_id: str
    language: str

    @property
    def source_id(self) -> str:
        # unique within a manifest; safe as a file-name stem
        stem = os.path.splitext(self.path)[0].replace("\\", "/").strip("/")
        return stem.replace("../", "").replace("/", "__")

    @property
    def y(self) -> int:
        return LABEL_CODES[self.label]


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: str = "."
    split_overlap: bool = False
    overlap_paths: list[str] = field(default_factory=list)

    def resolve(self, entry: ManifestEntry) -> str:
        if os.path.isabs(entry.path):
            return entry.path
        return os.path.normpath(os.path.join(self.root, entry.path))

    def split(self, name: str, disjoint: bool = False) -> list[ManifestEntry]:
        """Entries of one split, in file order.

        With ``disjoint=True`` test entries whose path also appears in the
        training split are dropped.
        """
        chosen = [e for e in self.entries if e.split == name]
        if disjoint and name == "test":
            train_paths = {e.path for e in self.entries if e.split == "train"}
            chosen = [e for e in chosen if e.path not in train_paths]
        return chosen

    def __len__(self):
        return len(self.entries)


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Parse and validate a manifest CSV.

    Paths listed in both splits are accepted; the returned manifest has
    ``split_overlap`` set and a :class:`SplitOverlapWarning` is emitted.
    """
    path = os.fspath(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"{path}: missing column(s) {', '.join(missing)}")
        entries = []
        seen = {s: set() for s in SPLITS}
        # row numbers count the header as line 1
        for lineno, row in enumerate(reader, start=2):
            label = (row["label"] or "").strip()
            split = (row["split"] or "").strip()
            if label not in LABELS:
                raise ManifestError(f"{path}:{lineno}: unknown label {label!r}")
            if split not in SPLITS:
                raise ManifestError(f"{path}:{lineno}: unknown split {split!r}")
            p = (row["path"] or "").strip()
            if not p:
                raise ManifestError(f"{path}:{lineno}: empty path")
            if p in seen[split]:
                raise ManifestError(f"{path}:{lineno}: duplicate path {p!r} in split {split!r}")
            seen[split].add(p)
            entries.append(ManifestEntry(p, label, split,
                                         (row["speaker_id"] or "").strip(),
                                         (row["language"] or "").strip()))

    overlap = sorted(seen["train"] & seen["test"])
    manifest = DatasetManifest(entries, root=os.path.dirname(os.path.abspath(path)),
                               split_overlap=bool(overlap), overlap_paths=overlap)
    if check_files:
        absent = [e.path for e in entries if not os.path.isfile(manifest.resolve(e))]
        if absent:
            raise ManifestError(f"{path}: {len(absent)} missing audio file(s): {', '.join(absent[:5])}")
    if overlap:
        warnings.warn(f"{path}: {len(overlap)} path(s) appear in both train and test splits",
                      SplitOverlapWarning, stacklevel=2)
    return manifest


def write_manifest(path, entries) -> None:
    with open(os.fspath(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for e in entries:
            writer.writerow([e.path, e.label, e.split, e.speaker_id, e.language])
