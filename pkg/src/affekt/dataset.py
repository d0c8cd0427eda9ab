"""Local dataset handling: loading, windowing, labeling, balancing, splitting.

A dataset is a directory of subject subdirectories, each holding an eeg.json
sidecar (subject id, sampling rate, channel names, sample count), an eeg.f32
raw payload (channel-major little-endian float32), and an events.tsv table
with onset / duration / trial_type / valence / arousal / emotion columns.

Labels carry two views of the same event: a categorical id from a dataset-wide
first-seen emotion-name table, and an optional binary polarity derived from a
rating dimension against (low, high) thresholds. Ratings in the open middle
band have no binary polarity.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    ClassTooSmall,
    EmptyClass,
    MalformedEvent,
    MissingFile,
    ShapeMismatch,
    UnknownEmotionName,
)
from .signals import Recording

log = logging.getLogger(__name__)

RATING_MIN = 1.0
RATING_MAX = 9.0
DEFAULT_THRESHOLDS = (4.0, 6.0)
DEFAULT_WINDOW_LEN = 1500
EVENT_COLUMNS = ("onset", "duration", "trial_type", "valence", "arousal", "emotion")


class BinaryClass(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


# Fixed output order for the two-class head: index 0 detects the negative state.
BINARY_CLASS_NAMES = (BinaryClass.NEGATIVE.value, BinaryClass.POSITIVE.value)


@dataclass(frozen=True)
class EmotionEvent:
    onset_s: float
    duration_s: float
    trial_type: str
    valence: float
    arousal: float
    emotion: str


@dataclass(frozen=True)
class ClassLabel:
    categorical: int
    binary: BinaryClass | None


@dataclass
class LabeledWindow:
    window_id: str
    subject_id: str
    data: np.ndarray
    label: ClassLabel
    emotion: str
    rating: float


class EmotionTable:
    """Deterministic emotion-name -> id table, ids in first-seen order."""

    def __init__(self, names: dict[str, int] | None = None, frozen: bool = False):
        self._ids = dict(names) if names else {}
        self.frozen = frozen

    def id_for(self, name: str) -> int:
        if name in self._ids:
            return self._ids[name]
        if self.frozen:
            raise UnknownEmotionName(f"emotion {name!r} not in frozen label table")
        self._ids[name] = len(self._ids)
        return self._ids[name]

    def name_for(self, label_id: int) -> str:
        for name, idx in self._ids.items():
            if idx == label_id:
                return name
        raise UnknownEmotionName(f"no emotion with id {label_id}")

    def to_dict(self) -> dict[str, int]:
        return dict(self._ids)

    def __len__(self) -> int:
        return len(self._ids)


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingFile(str(path))
    return path


def load_recording(subject_dir) -> tuple[Recording, list[EmotionEvent]]:
    """Read one subject directory into a Recording plus its event list."""
    subject_dir = Path(subject_dir)
    sidecar_path = _require(subject_dir / "eeg.json")
    data_path = _require(subject_dir / "eeg.f32")
    events_path = _require(subject_dir / "events.tsv")

    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    n_channels = len(sidecar["channel_names"])
    n_samples = int(sidecar["n_samples"])
    raw = np.fromfile(data_path, dtype="<f4")
    if raw.size != n_channels * n_samples:
        raise ShapeMismatch(
            f"{data_path}: {raw.size} floats on disk, sidecar says {n_channels}x{n_samples}"
        )
    rec = Recording(
        subject_id=sidecar["subject_id"],
        sample_rate_hz=float(sidecar["sample_rate_hz"]),
        channel_names=list(sidecar["channel_names"]),
        data=raw.reshape(n_channels, n_samples).astype(np.float64),
    )
    return rec, _load_events(events_path)


def _load_events(events_path: Path) -> list[EmotionEvent]:
    events = []
    with open(events_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        header = reader.fieldnames or []
        missing = [c for c in EVENT_COLUMNS if c not in header]
        if missing:
            raise MalformedEvent(f"{events_path}: header missing columns {missing}")
        for row_num, row in enumerate(reader, start=2):
            try:
                ev = EmotionEvent(
                    onset_s=float(row["onset"]),
                    duration_s=float(row["duration"]),
                    trial_type=row["trial_type"],
                    valence=float(row["valence"]),
                    arousal=float(row["arousal"]),
                    emotion=row["emotion"].strip(),
                )
            except (TypeError, ValueError, KeyError, AttributeError) as exc:
                raise MalformedEvent(f"{events_path} row {row_num}: {exc}") from exc
            if ev.onset_s < 0 or ev.duration_s < 0:
                raise MalformedEvent(f"{events_path} row {row_num}: negative onset or duration")
            for dim, value in (("valence", ev.valence), ("arousal", ev.arousal)):
                if not (RATING_MIN <= value <= RATING_MAX):
                    raise MalformedEvent(
                        f"{events_path} row {row_num}: {dim}={value} outside "
                        f"[{RATING_MIN}, {RATING_MAX}]"
                    )
            if not ev.emotion:
                raise MalformedEvent(f"{events_path} row {row_num}: empty emotion name")
            events.append(ev)
    return events


def label_from_ratings(
    event: EmotionEvent,
    table: EmotionTable,
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
    dimension: str = "arousal",
) -> ClassLabel:
    """Binary polarity from one rating dimension plus the categorical id."""
    if dimension not in ("arousal", "valence"):
        raise MalformedEvent(f"rating dimension must be arousal or valence, got {dimension!r}")
    low, high = thresholds
    rating = event.arousal if dimension == "arousal" else event.valence
    if rating < low:
        binary: BinaryClass | None = BinaryClass.NEGATIVE
    elif rating > high:
        binary = BinaryClass.POSITIVE
    else:
        binary = None
    return ClassLabel(categorical=table.id_for(event.emotion), binary=binary)


def extract_windows(
    rec: Recording,
    events: list[EmotionEvent],
    table: EmotionTable,
    window_len: int = DEFAULT_WINDOW_LEN,
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
    dimension: str = "arousal",
) -> list[LabeledWindow]:
    """Fixed-length windows at each event onset; short events are skipped."""
    windows = []
    skipped = 0
    for idx, ev in enumerate(events):
        start = int(round(ev.onset_s * rec.sample_rate_hz))
        if start + window_len > rec.n_samples:
            skipped += 1
            continue
        label = label_from_ratings(ev, table, thresholds, dimension)
        rating = ev.arousal if dimension == "arousal" else ev.valence
        windows.append(
            LabeledWindow(
                window_id=f"{rec.subject_id}-e{idx:03d}",
                subject_id=rec.subject_id,
                data=rec.data[:, start:start + window_len].copy(),
                label=label,
                emotion=ev.emotion,
                rating=rating,
            )
        )
    if skipped:
        log.warning(
            "%s: skipped %d of %d events with fewer than %d samples remaining",
            rec.subject_id, skipped, len(events), window_len,
        )
    return windows


# --- minority-class oversampling ---


@dataclass(frozen=True)
class SmoteSpec:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ClassTooSmall(f"k_neighbors must be >= 1, got {self.k_neighbors}")


def smote_resample(
    features: np.ndarray, labels: np.ndarray, spec: SmoteSpec = SmoteSpec()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Equalize class counts by interpolating between same-class neighbors.

    Every synthetic point is x_i + u * (x_nn - x_i) with u ~ U(0, 1) and x_nn
    one of the k nearest same-class neighbors of x_i (Euclidean). Originals
    are returned first and untouched. Returns (features, labels, synthetic)
    where synthetic is a boolean mask, False for every original row.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"features {x.shape} vs labels {y.shape}")
    if x.shape[0] == 0:
        raise EmptyClass("cannot resample an empty feature set")
    classes, counts = np.unique(y, return_counts=True)
    target = int(counts.max())
    rng = np.random.default_rng(spec.seed)
    new_rows = []
    new_labels = []
    for cls, count in zip(classes, counts):
        deficit = target - int(count)
        if deficit == 0:
            continue
        if count <= spec.k_neighbors:
            raise ClassTooSmall(
                f"class {cls!r} has {count} members, needs more than "
                f"k_neighbors={spec.k_neighbors} to interpolate"
            )
        idx = np.flatnonzero(y == cls)
        pts = x[idx]
        # Squared Euclidean via the Gram matrix; avoids an (n, n, d) blow-up.
        sq = np.einsum("ij,ij->i", pts, pts)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
        np.fill_diagonal(d2, np.inf)
        neighbor_ids = np.argsort(d2, axis=1, kind="stable")[:, : spec.k_neighbors]
        for _ in range(deficit):
            i = int(rng.integers(len(idx)))
            nn = int(neighbor_ids[i, int(rng.integers(spec.k_neighbors))])
            u = rng.random()
            new_rows.append(pts[i] + u * (pts[nn] - pts[i]))
            new_labels.append(cls)
    if not new_rows:
        return x.copy(), y.copy(), np.zeros(len(y), dtype=bool)
    out_x = np.vstack([x, np.array(new_rows)])
    out_y = np.concatenate([y, np.array(new_labels, dtype=y.dtype)])
    synthetic = np.zeros(len(out_y), dtype=bool)
    synthetic[len(y):] = True
    return out_x, out_y, synthetic


# --- splitting and batching ---


DEFAULT_RATIOS = (0.70, 0.15, 0.15)
DEFAULT_BATCH_SIZE = 32
SPLIT_NAMES = ("train", "val", "test")


def _allocate(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    n_test = n - n_train - n_val
    if n_test < 0:
        n_val += n_test
        n_test = 0
    return n_train, n_val, n_test


def split_windows(
    windows: list[LabeledWindow],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
    level: str = "window",
) -> dict[str, list[LabeledWindow]]:
    """Seeded train/val/test split, stratified by categorical label.

    level="subject" keeps each subject's windows in a single split instead
    (coarser, no stratification guarantee).
    """
    if not windows:
        raise EmptyClass("no windows to split")
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise EmptyClass(f"ratios must be nonnegative and sum to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    out: dict[str, list[LabeledWindow]] = {name: [] for name in SPLIT_NAMES}
    if level == "subject":
        subjects = sorted({w.subject_id for w in windows})
        order = [subjects[i] for i in rng.permutation(len(subjects))]
        n_train, n_val, _ = _allocate(len(order), ratios)
        assignment = {}
        for pos, subject in enumerate(order):
            assignment[subject] = (
                "train" if pos < n_train else "val" if pos < n_train + n_val else "test"
            )
        for w in windows:
            out[assignment[w.subject_id]].append(w)
    elif level == "window":
        groups: dict[int, list[LabeledWindow]] = {}
        for w in windows:
            groups.setdefault(w.label.categorical, []).append(w)
        for cls in sorted(groups):
            ws = groups[cls]
            shuffled = [ws[i] for i in rng.permutation(len(ws))]
            n_train, n_val, _ = _allocate(len(ws), ratios)
            out["train"].extend(shuffled[:n_train])
            out["val"].extend(shuffled[n_train:n_train + n_val])
            out["test"].extend(shuffled[n_train + n_val:])
    else:
        raise EmptyClass(f"split level must be window or subject, got {level!r}")
    # Mix classes within each split so batches are not class-sorted.
    for name in SPLIT_NAMES:
        items = out[name]
        out[name] = [items[i] for i in rng.permutation(len(items))]
    return out


def make_batches(items: list, batch_size: int = DEFAULT_BATCH_SIZE) -> list[list]:
    """Consecutive chunks of batch_size; the final batch may be short."""
    if batch_size < 1:
        raise EmptyClass(f"batch_size must be >= 1, got {batch_size}")
    return [items[i:i + batch_size] for i in range(0, len(items), batch_size)]


def split_and_batch(
    windows: list[LabeledWindow],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    seed: int = 0,
    level: str = "window",
) -> dict[str, list[list[LabeledWindow]]]:
    splits = split_windows(windows, ratios, seed, level)
    return {name: make_batches(splits[name], batch_size) for name in SPLIT_NAMES}


# --- raw window payload files ---


def write_window_file(path, data: np.ndarray) -> None:
    np.ascontiguousarray(data, dtype="<f4").tofile(path)


def read_window_file(path, n_channels: int, window_len: int) -> np.ndarray:
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != n_channels * window_len:
        raise ShapeMismatch(
            f"{path}: {raw.size} floats on disk, manifest says {n_channels}x{window_len}"
        )
    return raw.reshape(n_channels, window_len).astype(np.float64)
