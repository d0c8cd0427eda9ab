"""Separable synthetic EEG dataset generator.

Each subject directory gets a pink-noise background recording with event
spans whose spectral content depends on the emotion class: high-rated events
carry a broad 15-40 Hz shelf, low-rated events carry sharp narrowband ridges
near 6 and 10 Hz, neutral events are background only. Class is therefore
recoverable from spectral shape, and positive windows keep mean 15-40 Hz
power above mean 4-12 Hz power.

Generation is bit-exact for a given (seed, layout): every subject draws from
its own generator seeded with seed XOR subject index, in a fixed order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DEFAULT_WINDOW_LEN
from .errors import ShapeMismatch

MUSE_CHANNELS = ("TP9", "AF7", "AF8", "TP10")


@dataclass(frozen=True)
class EmotionTemplate:
    arousal_range: tuple[float, float]
    valence_range: tuple[float, float]
    band: str  # "high" (15-40 shelf), "low" (6/10 Hz ridges), "none"


EMOTION_TEMPLATES = {
    "joy": EmotionTemplate((6.6, 8.4), (6.6, 8.4), "high"),
    "sad": EmotionTemplate((1.6, 3.4), (1.6, 3.4), "low"),
    "neutral": EmotionTemplate((4.6, 5.4), (4.6, 5.4), "none"),
}

DEFAULT_CLASS_MIX = {"joy": 3, "sad": 2, "neutral": 3}

LEAD_SAMPLES = 256
GAP_SAMPLES = 100
SHELF_BAND = (15.0, 40.0)
SHELF_RMS = 1.2
RIDGE_FREQS = (6.0, 10.0)
RIDGE_AMP = (1.2, 1.8)
RIDGE_JITTER = 0.15


def _pink_noise(rng: np.random.Generator, n_channels: int, n_samples: int) -> np.ndarray:
    white = rng.standard_normal((n_channels, n_samples))
    spectrum = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n_samples, d=1.0)
    shaping = 1.0 / np.sqrt(np.maximum(freqs, freqs[1]))
    shaped = np.fft.irfft(spectrum * shaping, n=n_samples, axis=1)
    return shaped / shaped.std(axis=1, keepdims=True)


def _band_noise(
    rng: np.random.Generator, n_channels: int, n_samples: int, fs_hz: float,
    band: tuple[float, float], rms: float,
) -> np.ndarray:
    white = rng.standard_normal((n_channels, n_samples))
    spectrum = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / fs_hz)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    shaped = np.fft.irfft(spectrum * mask, n=n_samples, axis=1)
    return rms * shaped / shaped.std(axis=1, keepdims=True)


def _ridges(
    rng: np.random.Generator, n_channels: int, n_samples: int, fs_hz: float
) -> np.ndarray:
    t = np.arange(n_samples) / fs_hz
    out = np.zeros((n_channels, n_samples))
    for f0 in RIDGE_FREQS:
        amps = rng.uniform(RIDGE_AMP[0], RIDGE_AMP[1], size=(n_channels, 1))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_channels, 1))
        jitter = rng.uniform(-RIDGE_JITTER, RIDGE_JITTER, size=(n_channels, 1))
        out += amps * np.sin(2.0 * np.pi * (f0 + jitter) * t[None, :] + phases)
    return out


def _channel_names(n_channels: int) -> list[str]:
    if n_channels == len(MUSE_CHANNELS):
        return list(MUSE_CHANNELS)
    return [f"ch{idx:03d}" for idx in range(n_channels)]


def synth_generate(
    out_dir,
    n_subjects: int = 40,
    events_per_subject: int = 8,
    channels: int = 128,
    fs_hz: float = 512.0,
    class_mix: dict[str, int] | None = None,
    seed: int = 0,
    window_len: int = DEFAULT_WINDOW_LEN,
) -> dict:
    """Write n_subjects subject directories under out_dir; returns a report."""
    class_mix = dict(class_mix) if class_mix else dict(DEFAULT_CLASS_MIX)
    unknown = sorted(set(class_mix) - set(EMOTION_TEMPLATES))
    if unknown:
        raise ShapeMismatch(f"unknown synthetic emotion classes {unknown}")
    if sum(class_mix.values()) != events_per_subject:
        raise ShapeMismatch(
            f"class_mix sums to {sum(class_mix.values())}, expected {events_per_subject}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = _channel_names(channels)
    slot = window_len + GAP_SAMPLES
    n_samples = LEAD_SAMPLES + events_per_subject * slot

    for subject_idx in range(n_subjects):
        subject_id = f"sub-{subject_idx + 1:03d}"
        rng = np.random.default_rng(seed ^ subject_idx)
        roster = [name for name, count in sorted(class_mix.items()) for _ in range(count)]
        roster = [roster[i] for i in rng.permutation(len(roster))]

        data = _pink_noise(rng, channels, n_samples)
        rows = []
        for ev_idx, emotion in enumerate(roster):
            template = EMOTION_TEMPLATES[emotion]
            arousal = rng.uniform(*template.arousal_range)
            valence = rng.uniform(*template.valence_range)
            start = LEAD_SAMPLES + ev_idx * slot
            span = slice(start, start + window_len)
            if template.band == "high":
                data[:, span] += _band_noise(rng, channels, window_len, fs_hz, SHELF_BAND, SHELF_RMS)
            elif template.band == "low":
                data[:, span] += _ridges(rng, channels, window_len, fs_hz)
            rows.append(
                (start / fs_hz, window_len / fs_hz, "stimulus", valence, arousal, emotion)
            )

        subject_dir = out_dir / subject_id
        subject_dir.mkdir(parents=True, exist_ok=True)
        with open(subject_dir / "eeg.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "subject_id": subject_id,
                    "sample_rate_hz": fs_hz,
                    "channel_names": names,
                    "n_samples": n_samples,
                },
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        np.ascontiguousarray(data, dtype="<f4").tofile(subject_dir / "eeg.f32")
        with open(subject_dir / "events.tsv", "w", encoding="utf-8", newline="") as fh:
            fh.write("onset\tduration\ttrial_type\tvalence\tarousal\temotion\n")
            for onset, duration, trial_type, valence, arousal, emotion in rows:
                fh.write(f"{onset!r}\t{duration!r}\t{trial_type}\t{valence!r}\t{arousal!r}\t{emotion}\n")

    return {
        "n_subjects": n_subjects,
        "events_per_subject": events_per_subject,
        "channels": channels,
        "fs_hz": fs_hz,
        "n_samples_per_subject": n_samples,
        "class_mix": {k: class_mix[k] for k in sorted(class_mix)},
    }
