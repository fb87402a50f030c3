import warnings

import pytest

from stm_detect.manifest import ManifestError, SplitOverlapWarning, load_manifest

HEADER = "path,label,split,speaker_id,language\n"


def write(tmp_path, body, header=HEADER, files=True):
    p = tmp_path / "m.csv"
    p.write_text(header + body, encoding="utf-8")
    if files:
        for line in body.strip().splitlines():
            (tmp_path / line.split(",")[0]).touch()
    return p


def test_valid_manifest_keeps_row_order(tmp_path):
    body = ("d.wav,genuine,train,s1,en\n"
            "a.wav,imitated,train,s1,en\n"
            "c.wav,genuine,test,s2,ja\n"
            "b.wav,imitated,test,s2,ja\n")
    m = load_manifest(write(tmp_path, body))
    assert [e.path for e in m.entries] == ["d.wav", "a.wav", "c.wav", "b.wav"]
    assert [e.y for e in m.entries] == [-1, 1, -1, 1]
    assert not m.split_overlap
    assert m.resolve(m.entries[0]) == str(tmp_path / "d.wav")


def test_unknown_label_names_row(tmp_path):
    body = "a.wav,genuine,train,s,en\nb.wav,synthetic,test,s,en\n"
    with pytest.raises(ManifestError, match=r":3: unknown label 'synthetic'"):
        load_manifest(write(tmp_path, body))


def test_unknown_split(tmp_path):
    with pytest.raises(ManifestError, match="unknown split"):
        load_manifest(write(tmp_path, "a.wav,genuine,dev,s,en\n"))


def test_missing_column(tmp_path):
    with pytest.raises(ManifestError, match="language"):
        load_manifest(write(tmp_path, "a.wav,genuine,train,s\n", header="path,label,split,speaker_id\n"))


def test_duplicate_within_split(tmp_path):
    body = "a.wav,genuine,train,s,en\na.wav,genuine,train,s,en\n"
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(write(tmp_path, body))


def test_missing_audio_file(tmp_path):
    with pytest.raises(ManifestError, match="missing audio"):
        load_manifest(write(tmp_path, "ghost.wav,genuine,train,s,en\n", files=False))


def test_train_subset_of_test_is_accepted_with_flag(tmp_path):
    rows = []
    for i in range(100):
        rows.append(f"clip{i:03d}.wav,{'genuine' if i < 50 else 'imitated'},test,s{i % 10},en")
    for i in list(range(20)) + list(range(50, 70)):
        rows.append(f"clip{i:03d}.wav,{'genuine' if i < 50 else 'imitated'},train,s{i % 10},en")
    p = write(tmp_path, "\n".join(rows) + "\n")
    with pytest.warns(SplitOverlapWarning):
        m = load_manifest(p)
    assert m.split_overlap and len(m.overlap_paths) == 40
    assert len(m.split("train")) == 40
    assert len(m.split("test")) == 100
    assert len(m.split("test", disjoint=True)) == 60


def test_no_warning_when_disjoint(tmp_path):
    p = write(tmp_path, "a.wav,genuine,train,s,en\nb.wav,imitated,test,s,en\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_manifest(p)


def test_source_ids_are_unique_across_directories(tmp_path):
    (tmp_path / "g").mkdir()
    (tmp_path / "i").mkdir()
    p = write(tmp_path, "g/x.wav,genuine,train,s,en\ni/x.wav,imitated,train,s,en\n")
    m = load_manifest(p)
    assert m.entries[0].source_id != m.entries[1].source_id
