"""Stage implementations behind the CLI.

Every stage reads only artifacts from earlier stages plus the config, and
writes its outputs under the workdir:

    raw/            synth          subject dirs (eeg.json, eeg.f32, events.tsv)
    windows/        preprocess     filtered+standardized windows, windows.json
    windows_noisy/  augment        perturbed copies of the windows
    features/       featurize      EEGF feature files, manifest.json
    model/          train          checkpoints + epoch logs (JSONL)
    reports/        entropy, eval, stream

Stages are pure functions of (inputs, config): re-running one with the same
seeds rewrites byte-identical artifacts, except wall-clock timing fields,
which are confined to metrics.json's time_per_batch_ms and the separate
stream_timing.json.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import dataset as ds
from .checkpoint import load_checkpoint, save_checkpoint
from .config import PipelineConfig, paths_for
from .entropy import EntropyParams, EntropyProfile, NoiseSpec, add_gaussian_noise, multiscale_entropy
from .errors import EmptyEvaluationSet, MissingFile, ShapeMismatch
from .features import PsdSpec, psd_feature_values, read_feature_file, write_feature_file
from .nn import CnnConfig
from .signals import FilterKind, FilterSpec, apply_filter, design_filter, zscore
from .stream import StreamSpec, stream_classify
from .training import TrainConfig, evaluate, train

log = logging.getLogger(__name__)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise MissingFile(f"{path} does not exist; run the producing stage first")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _filter_spec(cfg: PipelineConfig, fs_hz: float) -> FilterSpec:
    return FilterSpec(
        kind=FilterKind(cfg.filter.kind),
        order_n=cfg.filter.order_n,
        edges_hz=tuple(cfg.filter.edges_hz),
        fs_hz=fs_hz,
    )


def _psd_spec(cfg: PipelineConfig) -> PsdSpec:
    return PsdSpec(
        segment_len=cfg.psd.segment_len,
        overlap_fraction=cfg.psd.overlap_fraction,
        max_freq_hz=cfg.psd.max_freq_hz,
    )


# --- synth ---


def cmd_synth(cfg: PipelineConfig) -> dict:
    from .synth import synth_generate

    paths = paths_for(cfg)
    report = synth_generate(
        paths.raw,
        n_subjects=cfg.synth.n_subjects,
        events_per_subject=cfg.synth.events_per_subject,
        channels=cfg.synth.channels,
        fs_hz=cfg.synth.fs_hz,
        class_mix=cfg.synth.class_mix,
        seed=cfg.synth.seed,
        window_len=cfg.window.length_samples,
    )
    report["stage"] = "synth"
    report["out"] = str(paths.raw)
    return report


# --- preprocess ---


def cmd_preprocess(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    if not paths.raw.exists():
        raise MissingFile(f"{paths.raw} does not exist; run synth or point workdir at a dataset")
    subject_dirs = sorted(p for p in paths.raw.iterdir() if p.is_dir())
    if not subject_dirs:
        raise MissingFile(f"{paths.raw} contains no subject directories")

    table = ds.EmotionTable()
    windows: list[ds.LabeledWindow] = []
    n_events = 0
    fs_hz = None
    channel_names = None
    realization = None
    for subject_dir in subject_dirs:
        rec, events = ds.load_recording(subject_dir)
        if fs_hz is None:
            fs_hz = rec.sample_rate_hz
            channel_names = rec.channel_names
            realization = design_filter(_filter_spec(cfg, fs_hz))
        elif rec.sample_rate_hz != fs_hz:
            raise ShapeMismatch(
                f"{subject_dir}: fs {rec.sample_rate_hz} differs from {fs_hz}"
            )
        cleaned = zscore(apply_filter(realization, rec))
        windows.extend(
            ds.extract_windows(
                cleaned,
                events,
                table,
                window_len=cfg.window.length_samples,
                thresholds=tuple(cfg.window.thresholds),
                dimension=cfg.window.rating_dimension,
            )
        )
        n_events += len(events)

    splits = ds.split_windows(
        windows,
        ratios=tuple(cfg.split.ratios),
        seed=cfg.split.seed,
        level=cfg.split.level,
    )
    split_of = {w.window_id: name for name, ws in splits.items() for w in ws}

    paths.windows.mkdir(parents=True, exist_ok=True)
    records = []
    for w in sorted(windows, key=lambda w: w.window_id):
        fname = f"{w.window_id}.f32"
        ds.write_window_file(paths.windows / fname, w.data)
        records.append(
            {
                "id": w.window_id,
                "file": fname,
                "subject_id": w.subject_id,
                "categorical": w.label.categorical,
                "binary": None if w.label.binary is None else w.label.binary.value,
                "emotion": w.emotion,
                "rating": w.rating,
                "split": split_of[w.window_id],
            }
        )
    manifest = {
        "sample_rate_hz": fs_hz,
        "window_len": cfg.window.length_samples,
        "channel_names": channel_names,
        "rating_dimension": cfg.window.rating_dimension,
        "thresholds": list(cfg.window.thresholds),
        "emotion_table": table.to_dict(),
        "skipped_events": n_events - len(windows),
        "windows": records,
        "split_order": {name: [w.window_id for w in ws] for name, ws in splits.items()},
    }
    _write_json(paths.windows / "windows.json", manifest)
    class_counts: dict[str, int] = {}
    for r in records:
        class_counts[r["emotion"]] = class_counts.get(r["emotion"], 0) + 1
    return {
        "stage": "preprocess",
        "n_subjects": len(subject_dirs),
        "n_events": n_events,
        "n_windows": len(records),
        "skipped_events": n_events - len(windows),
        "split_counts": {name: len(ws) for name, ws in splits.items()},
        "class_counts": class_counts,
        "out": str(paths.windows),
    }


# --- augment ---


def _load_windows(dir_path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    manifest = _read_json(dir_path / "windows.json")
    n_channels = len(manifest["channel_names"])
    window_len = manifest["window_len"]
    data = {}
    for record in manifest["windows"]:
        data[record["id"]] = ds.read_window_file(
            dir_path / record["file"], n_channels, window_len
        )
    return manifest, data


def cmd_augment(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    manifest, data = _load_windows(paths.windows)
    paths.windows_noisy.mkdir(parents=True, exist_ok=True)
    for idx, record in enumerate(manifest["windows"]):
        spec = NoiseSpec(max_magnitude=cfg.noise.max_magnitude, seed=cfg.noise.seed ^ idx)
        noisy = add_gaussian_noise(data[record["id"]], spec)
        ds.write_window_file(paths.windows_noisy / record["file"], noisy)
    manifest = dict(manifest)
    manifest["noise"] = {"max_magnitude": cfg.noise.max_magnitude, "seed": cfg.noise.seed}
    _write_json(paths.windows_noisy / "windows.json", manifest)
    return {
        "stage": "augment",
        "n_windows": len(manifest["windows"]),
        "max_magnitude": cfg.noise.max_magnitude,
        "out": str(paths.windows_noisy),
    }


# --- entropy ---


def _profile_json(profile: EntropyProfile) -> dict:
    return {
        "scales": [{"tau": tau, "sampen": value} for tau, value in profile.per_scale],
        "ci": profile.complexity_index,
    }


def cmd_entropy(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    manifest, clean = _load_windows(paths.windows)
    _, noisy = _load_windows(paths.windows_noisy)
    params = EntropyParams(
        m=cfg.entropy.m, r_factor=cfg.entropy.r_factor, max_scale=cfg.entropy.max_scale
    )
    ids = sorted(clean)[: cfg.entropy.n_windows]
    names = manifest["channel_names"]
    windows_out = []
    deltas = []
    for wid in ids:
        channels = []
        for ch_idx, ch_name in enumerate(names):
            prof_clean = multiscale_entropy(clean[wid][ch_idx], params)
            prof_noisy = multiscale_entropy(noisy[wid][ch_idx], params)
            delta = prof_noisy.complexity_index - prof_clean.complexity_index
            deltas.append(delta)
            channels.append(
                {
                    "channel": ch_name,
                    "clean": _profile_json(prof_clean),
                    "noisy": _profile_json(prof_noisy),
                    "delta": delta,
                }
            )
        windows_out.append({"window_id": wid, "channels": channels})
    report = {
        "params": {"m": params.m, "r_factor": params.r_factor, "max_scale": params.max_scale},
        "windows": windows_out,
        "summary": {
            "n_channels": len(deltas),
            "n_delta_positive": int(sum(1 for d in deltas if d > 0)),
            "mean_delta": float(np.mean(deltas)),
        },
    }
    paths.reports.mkdir(parents=True, exist_ok=True)
    _write_json(paths.reports / "entropy.json", report)
    return {
        "stage": "entropy",
        "n_windows": len(ids),
        **report["summary"],
        "out": str(paths.reports / "entropy.json"),
    }


# --- featurize ---


def cmd_featurize(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    source = cfg.featurize.source
    if source not in ("clean", "augmented"):
        raise ShapeMismatch(f"featurize.source must be clean or augmented, got {source!r}")
    src_dir = paths.windows if source == "clean" else paths.windows_noisy
    manifest, data = _load_windows(src_dir)
    fs_hz = manifest["sample_rate_hz"]
    psd_spec = _psd_spec(cfg)

    paths.features.mkdir(parents=True, exist_ok=True)
    records = []
    matrices: dict[str, np.ndarray] = {}
    bin_freqs = None
    for record in manifest["windows"]:
        values, freqs = psd_feature_values(data[record["id"]], fs_hz, psd_spec)
        if bin_freqs is None:
            bin_freqs = freqs
        matrices[record["id"]] = values
        fname = f"{record['id']}.eegf"
        write_feature_file(paths.features / fname, values, record["categorical"])
        records.append(
            {
                "id": record["id"],
                "file": fname,
                "window_id": record["id"],
                "split": record["split"],
                "synthetic": False,
                "task": "both",
                "categorical": record["categorical"],
                "binary": record["binary"],
            }
        )

    n_channels, n_bins = next(iter(matrices.values())).shape
    train_ids = manifest["split_order"]["train"]
    n_synth = {"categorical": 0, "binary": 0}
    by_id = {r["id"]: r for r in records}

    # Categorical balancing over all train windows.
    cat_vectors = np.stack([matrices[wid].ravel() for wid in train_ids])
    cat_labels = np.array([by_id[wid]["categorical"] for wid in train_ids])
    smote_spec = ds.SmoteSpec(k_neighbors=cfg.smote.k_neighbors, seed=cfg.smote.seed)
    out_x, out_y, synthetic = ds.smote_resample(cat_vectors, cat_labels, smote_spec)
    for i in np.flatnonzero(synthetic):
        sid = f"smote-cat-{n_synth['categorical']:04d}"
        n_synth["categorical"] += 1
        fname = f"{sid}.eegf"
        write_feature_file(
            paths.features / fname, out_x[i].reshape(n_channels, n_bins), int(out_y[i])
        )
        records.append(
            {
                "id": sid,
                "file": fname,
                "window_id": None,
                "split": "train",
                "synthetic": True,
                "task": "categorical",
                "categorical": int(out_y[i]),
                "binary": None,
            }
        )

    # Binary balancing over the train windows that carry a polarity.
    bin_ids = [wid for wid in train_ids if by_id[wid]["binary"] is not None]
    if bin_ids:
        bin_vectors = np.stack([matrices[wid].ravel() for wid in bin_ids])
        bin_labels = np.array(
            [ds.BINARY_CLASS_NAMES.index(by_id[wid]["binary"]) for wid in bin_ids]
        )
        smote_spec_bin = ds.SmoteSpec(k_neighbors=cfg.smote.k_neighbors, seed=cfg.smote.seed + 1)
        out_x, out_y, synthetic = ds.smote_resample(bin_vectors, bin_labels, smote_spec_bin)
        for i in np.flatnonzero(synthetic):
            sid = f"smote-bin-{n_synth['binary']:04d}"
            n_synth["binary"] += 1
            fname = f"{sid}.eegf"
            write_feature_file(
                paths.features / fname, out_x[i].reshape(n_channels, n_bins), int(out_y[i])
            )
            records.append(
                {
                    "id": sid,
                    "file": fname,
                    "window_id": None,
                    "split": "train",
                    "synthetic": True,
                    "task": "binary",
                    "categorical": None,
                    "binary": ds.BINARY_CLASS_NAMES[int(out_y[i])],
                }
            )

    feature_manifest = {
        "source": source,
        "fs_hz": fs_hz,
        "n_channels": n_channels,
        "n_bins": n_bins,
        "bin_freqs_hz": [float(f) for f in bin_freqs],
        "emotion_table": manifest["emotion_table"],
        "train_order": train_ids,
        "records": records,
    }
    _write_json(paths.features / "manifest.json", feature_manifest)
    return {
        "stage": "featurize",
        "source": source,
        "n_real": len(matrices),
        "n_synthetic": n_synth,
        "matrix_shape": [n_channels, n_bins],
        "out": str(paths.features),
    }


# --- train ---


def _task_arrays(paths, manifest: dict, task: str):
    """(train_items, val_items, test_items) as (x, label_index) pairs."""
    table = manifest["emotion_table"]
    n_classes = len(table) if task == "categorical" else 2
    by_split: dict[str, list] = {"train": [], "val": [], "test": []}
    id_order = {rid: pos for pos, rid in enumerate(manifest["train_order"])}
    records = sorted(
        manifest["records"],
        key=lambda r: (id_order.get(r["id"], len(id_order)), r["id"]),
    )
    for record in records:
        if task == "categorical":
            if record["task"] not in ("both", "categorical") or record["categorical"] is None:
                continue
            label = int(record["categorical"])
        else:
            if record["task"] not in ("both", "binary") or record["binary"] is None:
                continue
            label = ds.BINARY_CLASS_NAMES.index(record["binary"])
        values, _ = read_feature_file(paths.features / record["file"])
        by_split[record["split"]].append((values, label))
    return by_split, n_classes


def _as_batches(items, n_classes: int, batch_size: int, rng: np.random.Generator | None):
    if rng is not None and len(items) > 1:
        items = [items[i] for i in rng.permutation(len(items))]
    batches = []
    for chunk in ds.make_batches(items, batch_size):
        x = np.stack([values for values, _ in chunk])
        y = np.zeros((len(chunk), n_classes))
        for row, (_, label) in enumerate(chunk):
            y[row, label] = 1.0
        batches.append((x, y))
    return batches


TASKS = {
    "task1": ("binary", "task1_binary"),
    "task2": ("categorical", "task2_categorical"),
}


def cmd_train(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    manifest = _read_json(paths.features / "manifest.json")
    paths.model.mkdir(parents=True, exist_ok=True)
    report: dict = {"stage": "train"}
    for task_key, (task, stem) in TASKS.items():
        by_split, n_classes = _task_arrays(paths, manifest, task)
        if not by_split["train"] or not by_split["val"]:
            raise EmptyEvaluationSet(f"{task}: empty train or val split")
        rng = np.random.default_rng(cfg.train.seed + (0 if task == "binary" else 1))
        train_batches = _as_batches(by_split["train"], n_classes, cfg.split.batch_size, rng)
        val_batches = _as_batches(by_split["val"], n_classes, cfg.split.batch_size, None)
        cnn_cfg = CnnConfig(
            input_channels=manifest["n_channels"],
            input_bins=manifest["n_bins"],
            blocks=cfg.model.resolve_blocks(),
            n_classes=n_classes,
            seed=cfg.model.seed + (0 if task == "binary" else 1),
        )
        tcfg = TrainConfig(
            max_epochs=cfg.train.max_epochs,
            lr0=cfg.train.lr0,
            lr_decay=cfg.train.lr_decay,
            patience=cfg.train.patience,
            beta1=cfg.train.beta1,
            beta2=cfg.train.beta2,
            eps=cfg.train.eps,
            seed=cfg.train.seed,
        )
        result = train(cnn_cfg, tcfg, train_batches, val_batches)
        if task == "binary":
            class_names = list(ds.BINARY_CLASS_NAMES)
        else:
            table = manifest["emotion_table"]
            class_names = [name for name, _ in sorted(table.items(), key=lambda kv: kv[1])]
        save_checkpoint(
            paths.model / f"{stem}.ckpt",
            cnn_cfg,
            result.params,
            meta={"task": task, "class_names": class_names, "source": manifest["source"]},
        )
        with open(paths.model / f"{stem}_log.jsonl", "w", encoding="utf-8") as fh:
            for rec in result.epoch_log:
                fh.write(
                    json.dumps(
                        {
                            "epoch": rec.epoch,
                            "lr": rec.lr,
                            "train_loss": rec.train_loss,
                            "val_loss": rec.val_loss,
                            "val_acc": rec.val_acc,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        report[task_key] = {
            "task": task,
            "epochs_run": result.stopped_epoch,
            "best_epoch": result.best_epoch,
            "best_val_loss": min(r.val_loss for r in result.epoch_log),
            "final_val_acc": result.epoch_log[-1].val_acc,
            "checkpoint": str(paths.model / f"{stem}.ckpt"),
        }
    report["out"] = str(paths.model)
    return report


# --- eval ---


def cmd_eval(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    manifest = _read_json(paths.features / "manifest.json")
    metrics: dict = {"task1": {}, "task2": {}}
    times = []
    for task_key, (task, stem) in TASKS.items():
        ckpt_path = paths.model / f"{stem}.ckpt"
        if not ckpt_path.exists():
            raise MissingFile(f"{ckpt_path} does not exist; run train first")
        cnn_cfg, params, _meta = load_checkpoint(ckpt_path)
        by_split, n_classes = _task_arrays(paths, manifest, task)
        if n_classes != cnn_cfg.n_classes:
            raise ShapeMismatch(
                f"{task}: checkpoint has {cnn_cfg.n_classes} classes, data has {n_classes}"
            )
        test_batches = _as_batches(by_split["test"], n_classes, cfg.split.batch_size, None)
        result = evaluate(params, cnn_cfg, test_batches, task)
        times.append(result.time_per_batch_ms)
        if task == "binary":
            metrics["task1"] = {
                "binary_loss": result.binary_loss,
                "binary_accuracy": result.binary_accuracy,
            }
        else:
            metrics["task2"] = {
                "categorical_loss": result.categorical_loss,
                "categorical_accuracy": result.categorical_accuracy,
            }
    metrics["time_per_batch_ms"] = float(np.mean(times))
    paths.reports.mkdir(parents=True, exist_ok=True)
    _write_json(paths.reports / "metrics.json", metrics)
    return {"stage": "eval", **metrics, "out": str(paths.reports / "metrics.json")}


# --- stream ---


def cmd_stream(cfg: PipelineConfig) -> dict:
    paths = paths_for(cfg)
    ckpt_path = paths.model / "task1_binary.ckpt"
    if not ckpt_path.exists():
        raise MissingFile(f"{ckpt_path} does not exist; run train first")
    cnn_cfg, params, meta = load_checkpoint(ckpt_path)
    subject_dir = paths.raw / cfg.stream.source_subject
    rec, _events = ds.load_recording(subject_dir)
    realization = design_filter(_filter_spec(cfg, rec.sample_rate_hz))
    spec = StreamSpec(
        window_len=cfg.window.length_samples,
        hop_samples=cfg.stream.hop_samples,
        trigger_consecutive=cfg.stream.trigger_consecutive,
        strategy_policy=cfg.stream.strategy_policy,
    )
    result = stream_classify(
        rec,
        realization,
        _psd_spec(cfg),
        params,
        cnn_cfg,
        tuple(meta.get("class_names", ds.BINARY_CLASS_NAMES)),
        spec,
    )
    paths.reports.mkdir(parents=True, exist_ok=True)
    with open(paths.reports / "interventions.jsonl", "w", encoding="utf-8") as fh:
        for ev in result.events:
            fh.write(
                json.dumps(
                    {
                        "t_s": ev.timestamp_s,
                        "window_id": ev.window_index,
                        "class": ev.detected_class,
                        "confidence": ev.confidence,
                        "strategy": ev.strategy,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    budget_ms = spec.hop_samples / rec.sample_rate_hz * 1e3
    _write_json(
        paths.reports / "stream_timing.json",
        {
            "mean_proc_ms": result.mean_proc_ms,
            "budget_ms": budget_ms,
            "n_windows": len(result.decisions),
            "realtime_ok": result.mean_proc_ms < budget_ms,
        },
    )
    return {
        "stage": "stream",
        "subject": cfg.stream.source_subject,
        "n_windows": len(result.decisions),
        "n_events": len(result.events),
        "mean_proc_ms": result.mean_proc_ms,
        "budget_ms": budget_ms,
        "out": str(paths.reports / "interventions.jsonl"),
    }
