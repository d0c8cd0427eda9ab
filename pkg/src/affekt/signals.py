"""Powerline filtering and per-channel standardization.

The cleanup chain for every recording is: zero-phase Butterworth band-stop
around the mains frequency, then a per-channel standard score. Filters are
designed with the bilinear transform (frequency pre-warped) and realized as
cascaded second-order sections, so the digital magnitude matches the analog
prototype 1/sqrt(1 + w^(2n)) at pre-warped frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import signal as sps

from .errors import EdgeOutOfRange, InvalidOrder, ShapeMismatch

SIGMA_FLOOR = 1e-12


@dataclass
class Recording:
    """Multichannel signal block, channel-major float64."""

    subject_id: str
    sample_rate_hz: float
    channel_names: list[str]
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.sample_rate_hz <= 0:
            raise ShapeMismatch("sample_rate_hz must be positive")
        if self.data.ndim != 2:
            raise ShapeMismatch(f"data must be 2-D (channels, samples), got ndim={self.data.ndim}")
        if len(self.channel_names) != self.data.shape[0]:
            raise ShapeMismatch(
                f"{len(self.channel_names)} channel names for {self.data.shape[0]} data rows"
            )

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


class FilterKind(str, Enum):
    LOWPASS = "lowpass"
    HIGHPASS = "highpass"
    BANDPASS = "bandpass"
    BANDSTOP = "bandstop"


@dataclass(frozen=True)
class FilterSpec:
    """Design request for a Butterworth filter."""

    kind: FilterKind
    order_n: int
    edges_hz: tuple[float, ...]
    fs_hz: float

    def __post_init__(self) -> None:
        if not isinstance(self.order_n, int) or self.order_n < 1:
            raise InvalidOrder(f"order_n must be a positive integer, got {self.order_n!r}")
        kind = FilterKind(self.kind)
        object.__setattr__(self, "kind", kind)
        edges = tuple(float(e) for e in self.edges_hz)
        object.__setattr__(self, "edges_hz", edges)
        want = 1 if kind in (FilterKind.LOWPASS, FilterKind.HIGHPASS) else 2
        if len(edges) != want:
            raise EdgeOutOfRange(f"{kind.value} takes {want} edge(s), got {len(edges)}")
        nyq = self.fs_hz / 2.0
        for e in edges:
            if not (0.0 < e < nyq):
                raise EdgeOutOfRange(f"edge {e} Hz outside (0, {nyq}) for fs={self.fs_hz}")
        if want == 2 and not edges[0] < edges[1]:
            raise EdgeOutOfRange(f"band edges must increase, got {edges}")


@dataclass
class FilterRealization:
    """Cascaded biquads produced by design_filter.

    Application is stateless: every call runs its own forward-backward pass,
    so realizations are safe to share across channels and windows.
    """

    spec: FilterSpec
    sections: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.sections = np.asarray(self.sections, dtype=np.float64)
        if self.sections.ndim != 2 or self.sections.shape[1] != 6:
            raise ShapeMismatch("sections must be (n_sections, 6)")

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    def poles(self) -> np.ndarray:
        roots = [np.roots(row[3:]) for row in self.sections]
        return np.concatenate([r for r in roots if r.size]) if roots else np.empty(0)

    def is_stable(self) -> bool:
        p = self.poles()
        return bool(p.size == 0 or np.all(np.abs(p) < 1.0))


def analog_butterworth_gain(order_n: int, w: float) -> float:
    """Magnitude of the analog lowpass prototype at normalized frequency w.

    Monotone from 1 toward 0; exactly 1/sqrt(2) at w=1.
    """
    if not isinstance(order_n, int) or order_n < 1:
        raise InvalidOrder(f"order_n must be a positive integer, got {order_n!r}")
    return 1.0 / math.sqrt(1.0 + float(w) ** (2 * order_n))


def design_filter(spec: FilterSpec) -> FilterRealization:
    """Design a digital Butterworth filter as second-order sections."""
    wn = spec.edges_hz[0] if len(spec.edges_hz) == 1 else list(spec.edges_hz)
    sections = sps.butter(
        spec.order_n, wn, btype=spec.kind.value, fs=spec.fs_hz, output="sos"
    )
    real = FilterRealization(spec=spec, sections=sections)
    # Pole check is cheap; a blow-up here means the design request was degenerate.
    if not real.is_stable():
        raise EdgeOutOfRange(f"design for {spec} produced an unstable realization")
    return real


def powerline_notch(
    fs_hz: float,
    center_hz: float = 50.0,
    half_width_hz: float = 2.0,
    order_n: int = 4,
) -> FilterSpec:
    """Default mains-rejection band-stop: 48-52 Hz at order 4 for 50 Hz mains."""
    return FilterSpec(
        kind=FilterKind.BANDSTOP,
        order_n=order_n,
        edges_hz=(center_hz - half_width_hz, center_hz + half_width_hz),
        fs_hz=fs_hz,
    )


def filter_array(real: FilterRealization, data: np.ndarray) -> np.ndarray:
    """Zero-phase (forward-backward) filtering along the last axis."""
    return sps.sosfiltfilt(real.sections, np.asarray(data, dtype=np.float64), axis=-1)


def apply_filter(real: FilterRealization, rec: Recording) -> Recording:
    """Filter every channel independently; returns a new Recording."""
    if rec.sample_rate_hz != real.spec.fs_hz:
        raise ShapeMismatch(
            f"recording fs {rec.sample_rate_hz} != filter design fs {real.spec.fs_hz}"
        )
    return Recording(
        subject_id=rec.subject_id,
        sample_rate_hz=rec.sample_rate_hz,
        channel_names=list(rec.channel_names),
        data=filter_array(real, rec.data),
    )


def zscore_array(data: np.ndarray) -> np.ndarray:
    """Standard score per row with population sigma.

    Rows with sigma below SIGMA_FLOOR come back as all zeros instead of
    dividing by ~0.
    """
    data = np.asarray(data, dtype=np.float64)
    mu = data.mean(axis=-1, keepdims=True)
    sigma = data.std(axis=-1, keepdims=True)
    centered = data - mu
    out = np.where(sigma < SIGMA_FLOOR, 0.0, centered / np.where(sigma < SIGMA_FLOOR, 1.0, sigma))
    return out


def zscore(rec: Recording) -> Recording:
    return Recording(
        subject_id=rec.subject_id,
        sample_rate_hz=rec.sample_rate_hz,
        channel_names=list(rec.channel_names),
        data=zscore_array(rec.data),
    )
