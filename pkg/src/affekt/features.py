"""Spectral feature matrices.

Each analysis window becomes a (channels x frequency-bins) image: Welch power
spectral density per channel (Hann window, 50% overlap, mean-removed
segments, density scaling so the spectrum integrates to the signal variance),
bins kept for 0 < f <= max_freq_hz, log-compressed, then standardized over
the whole matrix. With a 1-second segment at fs=512 and the default 128 Hz
threshold the canonical 128-channel montage yields a 128x128 matrix.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InvalidFormat, NyquistExceeded, ShapeMismatch, WindowTooShort

LOG_FLOOR = 1e-12
FEATURE_MAGIC = b"EEGF"
FEATURE_VERSION = 1


@dataclass(frozen=True)
class PsdSpec:
    """Welch estimator settings. segment_len=None means one second of samples."""

    segment_len: int | None = None
    overlap_fraction: float = 0.5
    max_freq_hz: float = 128.0

    def __post_init__(self) -> None:
        if self.segment_len is not None and self.segment_len < 2:
            raise WindowTooShort(f"segment_len must be >= 2, got {self.segment_len}")
        if not (0.0 <= self.overlap_fraction < 1.0):
            raise WindowTooShort(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        if self.max_freq_hz <= 0:
            raise NyquistExceeded(f"max_freq_hz must be positive, got {self.max_freq_hz}")

    def resolve_segment_len(self, fs_hz: float) -> int:
        return self.segment_len if self.segment_len is not None else int(round(fs_hz))


@dataclass
class FeatureMatrix:
    """Standardized log-power image for one window."""

    values: np.ndarray
    bin_freqs_hz: np.ndarray
    label_id: int | None = None
    source_window_id: str | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.bin_freqs_hz = np.asarray(self.bin_freqs_hz, dtype=np.float64)
        if self.values.ndim != 2:
            raise ShapeMismatch(f"values must be 2-D, got ndim={self.values.ndim}")
        if self.values.shape[1] != self.bin_freqs_hz.size:
            raise ShapeMismatch(
                f"{self.values.shape[1]} columns vs {self.bin_freqs_hz.size} bin frequencies"
            )

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


def welch_psd(channel, fs_hz: float, spec: PsdSpec = PsdSpec()) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Welch density estimate for a single channel.

    Returns (freqs_hz, psd). Densities satisfy Parseval up to window effects:
    sum(psd) * df approximates the channel variance.
    """
    x = np.asarray(channel, dtype=np.float64).ravel()
    seg = spec.resolve_segment_len(fs_hz)
    if x.size < seg:
        raise WindowTooShort(f"window of {x.size} samples shorter than segment {seg}")
    freqs, psd = sps.welch(
        x,
        fs=fs_hz,
        window="hann",
        nperseg=seg,
        noverlap=int(round(seg * spec.overlap_fraction)),
        detrend="constant",
        scaling="density",
    )
    return freqs, psd


def psd_feature_values(
    data: np.ndarray, fs_hz: float, spec: PsdSpec = PsdSpec()
) -> tuple[np.ndarray, np.ndarray]:
    """Standardized log-power matrix for (channels, samples) data.

    DC is excluded; bins run over 0 < f <= max_freq_hz. The log matrix is
    standardized as a whole (population sigma); a degenerate all-equal matrix
    comes back as zeros.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if spec.max_freq_hz > fs_hz / 2.0:
        raise NyquistExceeded(
            f"max_freq_hz {spec.max_freq_hz} exceeds Nyquist {fs_hz / 2.0}"
        )
    rows = []
    bin_freqs: np.ndarray | None = None
    for ch in data:
        freqs, psd = welch_psd(ch, fs_hz, spec)
        if bin_freqs is None:
            keep = (freqs > 0.0) & (freqs <= spec.max_freq_hz)
            bin_freqs = freqs[keep]
        rows.append(psd[keep])
    logp = np.log(np.stack(rows) + LOG_FLOOR)
    mu = logp.mean()
    sigma = logp.std()
    if sigma < 1e-12:
        return np.zeros_like(logp), bin_freqs
    return (logp - mu) / sigma, bin_freqs


def build_feature_matrix(window, fs_hz: float, spec: PsdSpec = PsdSpec()) -> FeatureMatrix:
    """FeatureMatrix for a labeled window (anything with .data/.window_id/.label)."""
    values, bin_freqs = psd_feature_values(window.data, fs_hz, spec)
    label = getattr(window, "label", None)
    return FeatureMatrix(
        values=values,
        bin_freqs_hz=bin_freqs,
        label_id=None if label is None else label.categorical,
        source_window_id=getattr(window, "window_id", None),
    )


# --- binary container: magic, version, dims, label id, row-major f32 LE ---


def write_feature_file(path, values: np.ndarray, label_id: int) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeMismatch(f"feature payload must be 2-D, got ndim={values.ndim}")
    n_channels, n_bins = values.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<IIII", FEATURE_VERSION, n_channels, n_bins, label_id))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_feature_file(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise InvalidFormat(f"{path}: bad magic {magic!r}")
        header = fh.read(16)
        if len(header) != 16:
            raise InvalidFormat(f"{path}: truncated header")
        version, n_channels, n_bins, label_id = struct.unpack("<IIII", header)
        if version != FEATURE_VERSION:
            raise InvalidFormat(f"{path}: unsupported version {version}")
        raw = fh.read()
    if len(raw) % 4:
        raise InvalidFormat(f"{path}: payload truncated mid-float")
    payload = np.frombuffer(raw, dtype="<f4")
    if payload.size != n_channels * n_bins:
        raise ShapeMismatch(
            f"{path}: payload has {payload.size} floats, header says {n_channels}x{n_bins}"
        )
    return payload.reshape(n_channels, n_bins).astype(np.float64), label_id
