"""Recording ingestion, labeling, SMOTE, splitting, and batching tests."""

import numpy as np
import pytest

from affekt.dataset import (
    BINARY_CLASS_NAMES,
    BinaryClass,
    EmotionTable,
    SmoteSpec,
    extract_windows,
    label_from_ratings,
    load_recording,
    make_batches,
    read_window_file,
    smote_resample,
    split_windows,
    write_window_file,
)
from affekt.errors import (
    ClassTooSmall,
    EmptyClass,
    MalformedEvent,
    MissingFile,
    ShapeMismatch,
    UnknownEmotionName,
)
from conftest import make_events, write_subject
from oracles import is_convex_combination


def test_load_recording_roundtrip(subject_dir):
    rec, events = load_recording(subject_dir)
    assert rec.subject_id == "sub-001"
    assert rec.sample_rate_hz == 512.0
    assert rec.data.shape == (4, 6000)
    assert rec.data.dtype == np.float64
    assert [ev.emotion for ev in events] == ["joy", "sad", "neutral"]
    assert events[0].onset_s == pytest.approx(0.5)


def test_load_recording_missing_files(tmp_path):
    with pytest.raises(MissingFile):
        load_recording(tmp_path / "nope")
    sdir = tmp_path / "sub-002"
    write_subject(sdir, np.zeros((2, 100)), 512.0, [])
    (sdir / "events.tsv").unlink()
    with pytest.raises(MissingFile):
        load_recording(sdir)


def test_load_recording_payload_size_check(tmp_path):
    sdir = tmp_path / "sub-003"
    write_subject(sdir, np.zeros((2, 100)), 512.0, [])
    payload = (sdir / "eeg.f32").read_bytes()
    (sdir / "eeg.f32").write_bytes(payload[:-8])
    with pytest.raises(ShapeMismatch):
        load_recording(sdir)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda lines: lines[1].replace("joy", ""),  # empty emotion
        lambda lines: lines[1].replace("7.5", "abc"),  # unparseable rating
        lambda lines: lines[1].replace("7.5", "12.0"),  # rating out of range
        lambda lines: lines[1].replace("0.5", "-0.5", 1),  # negative onset
        lambda lines: "\t".join(lines[1].split("\t")[:-1]),  # missing column
    ],
)
def test_malformed_event_rows(tmp_path, mutate):
    sdir = tmp_path / "sub-004"
    write_subject(
        sdir,
        np.zeros((2, 4000)),
        512.0,
        make_events([(0.5, 7.5, 7.0, "joy")]),
    )
    lines = (sdir / "events.tsv").read_text().splitlines()
    lines[1] = mutate(lines)
    (sdir / "events.tsv").write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedEvent):
        load_recording(sdir)


def test_label_thresholds():
    table = EmotionTable()
    events = make_events(
        [
            (0.0, 5.0, 3.0, "calm"),
            (0.0, 5.0, 7.0, "joy"),
            (0.0, 5.0, 5.0, "neutral"),
            (0.0, 5.0, 4.0, "edge-low"),
            (0.0, 5.0, 6.0, "edge-high"),
        ]
    )
    from affekt.dataset import EmotionEvent

    evs = [
        EmotionEvent(
            onset_s=ev["onset"],
            duration_s=ev["duration"],
            trial_type="stimulus",
            valence=ev["valence"],
            arousal=ev["arousal"],
            emotion=ev["emotion"],
        )
        for ev in events
    ]
    labels = [label_from_ratings(ev, table, (4.0, 6.0), "arousal") for ev in evs]
    assert labels[0].binary == BinaryClass.NEGATIVE
    assert labels[1].binary == BinaryClass.POSITIVE
    assert labels[2].binary is None
    # thresholds are exclusive: ratings at 4 and 6 stay neutral
    assert labels[3].binary is None
    assert labels[4].binary is None


def test_label_dimension_switch():
    from affekt.dataset import EmotionEvent

    table = EmotionTable()
    ev = EmotionEvent(
        onset_s=0.0,
        duration_s=1.0,
        trial_type="stimulus",
        valence=2.0,
        arousal=8.0,
        emotion="mixed",
    )
    assert label_from_ratings(ev, table, (4.0, 6.0), "arousal").binary == BinaryClass.POSITIVE
    assert label_from_ratings(ev, table, (4.0, 6.0), "valence").binary == BinaryClass.NEGATIVE


def test_emotion_table_ids_and_freeze():
    table = EmotionTable()
    assert table.id_for("joy") == 0
    assert table.id_for("sad") == 1
    assert table.id_for("joy") == 0
    frozen = EmotionTable(names={"joy": 0, "sad": 1}, frozen=True)
    assert frozen.id_for("sad") == 1
    with pytest.raises(UnknownEmotionName):
        frozen.id_for("anger")


def test_extract_windows_onset_and_skip(tmp_path, caplog):
    fs = 512.0
    sdir = tmp_path / "sub-005"
    write_subject(
        sdir,
        np.arange(2 * 4000, dtype=np.float64).reshape(2, 4000),
        fs,
        make_events(
            [
                (1.0, 7.0, 7.0, "joy"),
                (7.5, 2.0, 2.0, "sad"),  # 7.5*512+1500 > 4000: dropped
            ]
        ),
    )
    rec, events = load_recording(sdir)
    table = EmotionTable()
    import logging

    with caplog.at_level(logging.WARNING):
        windows = extract_windows(rec, events, table)
    assert len(windows) == 1
    start = round(1.0 * fs)
    np.testing.assert_array_equal(windows[0].data, rec.data[:, start : start + 1500])
    assert windows[0].window_id == "sub-005-e000"
    assert any("skip" in rec_.message.lower() for rec_ in caplog.records)


def test_smote_equalizes_and_marks_synthetic():
    rng = np.random.default_rng(15)
    x = np.vstack([rng.normal(0, 1, (12, 6)), rng.normal(5, 1, (30, 6))])
    y = np.array([0] * 12 + [1] * 30)
    xb, yb, synthetic = smote_resample(x, y, SmoteSpec(k_neighbors=5, seed=0))
    assert np.bincount(yb).tolist() == [30, 30]
    assert synthetic.sum() == 18
    # originals first and untouched
    np.testing.assert_array_equal(xb[: x.shape[0]], x)
    np.testing.assert_array_equal(yb[: x.shape[0]], y)
    assert not synthetic[: x.shape[0]].any()
    assert synthetic[x.shape[0] :].all()


def test_smote_points_are_convex_combinations():
    rng = np.random.default_rng(16)
    x = np.vstack([rng.normal(0, 1, (10, 4)), rng.normal(3, 1, (25, 4))])
    y = np.array([0] * 10 + [1] * 25)
    xb, yb, synthetic = smote_resample(x, y, SmoteSpec(k_neighbors=5, seed=2))
    for idx in np.flatnonzero(synthetic):
        originals = x[y == yb[idx]]
        assert is_convex_combination(xb[idx], originals, tol=1e-9)


def test_smote_collinear_toy_set():
    # minority on a line: every synthetic point stays on it
    minority = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    majority = np.array([[10.0, 0.0]] * 7)
    x = np.vstack([minority, majority])
    y = np.array([0, 0, 0, 1, 1, 1, 1, 1, 1, 1])
    xb, yb, synthetic = smote_resample(x, y, SmoteSpec(k_neighbors=2, seed=3))
    for idx in np.flatnonzero(synthetic):
        px, py = xb[idx]
        assert px == pytest.approx(py, abs=1e-12)
        assert 0.0 <= px <= 2.0


def test_smote_class_too_small():
    x = np.vstack([np.zeros((4, 3)), np.ones((10, 3))])
    y = np.array([0] * 4 + [1] * 10)
    with pytest.raises(ClassTooSmall):
        smote_resample(x, y, SmoteSpec(k_neighbors=5, seed=0))


def test_smote_deterministic():
    rng = np.random.default_rng(17)
    x = np.vstack([rng.normal(0, 1, (8, 5)), rng.normal(4, 1, (20, 5))])
    y = np.array([0] * 8 + [1] * 20)
    spec = SmoteSpec(k_neighbors=5, seed=9)
    a = smote_resample(x, y, spec)
    b = smote_resample(x, y, spec)
    np.testing.assert_array_equal(a[0], b[0])


class FakeWindow:
    def __init__(self, window_id, subject_id, categorical):
        self.window_id = window_id
        self.subject_id = subject_id
        from affekt.dataset import ClassLabel

        self.label = ClassLabel(categorical=categorical, binary=None)


def make_fake_windows(n_per_class=20, n_subjects=10):
    windows = []
    idx = 0
    for cat in (0, 1, 2):
        for k in range(n_per_class):
            subject = f"sub-{(idx % n_subjects):03d}"
            windows.append(FakeWindow(f"{subject}-e{idx:03d}", subject, cat))
            idx += 1
    return windows


def test_split_ratios_and_determinism():
    windows = make_fake_windows()
    a = split_windows(windows, (0.7, 0.15, 0.15), seed=1)
    b = split_windows(windows, (0.7, 0.15, 0.15), seed=1)
    c = split_windows(windows, (0.7, 0.15, 0.15), seed=2)
    assert {k: [w.window_id for w in v] for k, v in a.items()} == {
        k: [w.window_id for w in v] for k, v in b.items()
    }
    assert [w.window_id for w in a["train"]] != [w.window_id for w in c["train"]]
    sizes = {k: len(v) for k, v in a.items()}
    assert sizes == {"train": 42, "val": 9, "test": 9}
    ids = [w.window_id for split in a.values() for w in split]
    assert sorted(ids) == sorted(w.window_id for w in windows)


def test_split_stratified_per_class():
    windows = make_fake_windows()
    splits = split_windows(windows, (0.7, 0.15, 0.15), seed=3)
    for name, expected in (("train", 14), ("val", 3), ("test", 3)):
        counts = {}
        for w in splits[name]:
            counts[w.label.categorical] = counts.get(w.label.categorical, 0) + 1
        assert counts == {0: expected, 1: expected, 2: expected}


def test_split_subject_level_keeps_subjects_whole():
    windows = make_fake_windows(n_per_class=20, n_subjects=10)
    splits = split_windows(windows, (0.7, 0.15, 0.15), seed=4, level="subject")
    seen = {}
    for name, split in splits.items():
        for w in split:
            assert seen.setdefault(w.subject_id, name) == name


def test_split_errors():
    windows = make_fake_windows()
    with pytest.raises(EmptyClass):
        split_windows([], (0.7, 0.15, 0.15), seed=0)
    with pytest.raises(EmptyClass):
        split_windows(windows, (0.5, 0.25), seed=0)
    with pytest.raises(EmptyClass):
        split_windows(windows, (0.7, 0.15, 0.15), seed=0, level="trial")


def test_make_batches_ragged_rule():
    items = list(range(33))
    batches = make_batches(items, 32)
    assert [len(b) for b in batches] == [32, 1]
    assert make_batches([], 32) == []


def test_window_file_roundtrip(tmp_path):
    rng = np.random.default_rng(18)
    data = rng.standard_normal((4, 100)).astype(np.float32).astype(np.float64)
    path = tmp_path / "w.f32"
    write_window_file(path, data)
    got = read_window_file(path, 4, 100)
    np.testing.assert_array_equal(got, data)
    with pytest.raises(ShapeMismatch):
        read_window_file(path, 4, 99)


def test_binary_class_name_order():
    assert BINARY_CLASS_NAMES.index("negative") == 0
    assert BinaryClass.NEGATIVE.value == "negative"
    assert BinaryClass.POSITIVE.value == "positive"
