"""End-to-end orchestration: generate, featurize, train, evaluate, report.

Everything fans out from one master seed so the whole run is
reproducible byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import classical, cnn
from .classical import SaParams
from .cnn import TrainConfig
from .dataset import derive_seed, load_segments, sensor_ids
from .evaluation import MethodResult, SplitSpec, evaluate, report, split
from .synth import generate_dataset, load_manifest

METHODS = ("dl-1", "classical-1", "classical-vel")


def split_spec_for_manifest(manifest: dict) -> SplitSpec:
    # the split is a property of the dataset, so every command that
    # touches the same manifest sees the same partition
    return SplitSpec(seed=derive_seed(manifest["seed"], "split"))


def train_method(method: str, train_set, val_set, seed: int,
                 fp_weight: float = 2.0, epochs: int = 40):
    """Train one detector on already-featurized segments."""
    if method == "classical-1" or method == "classical-vel":
        normalize = method == "classical-vel"
        data = [(seg.frames, seg.is_event) for seg in train_set]
        return classical.train_thresholds(
            data, SaParams(seed=seed), fp_weight=fp_weight,
            normalize_by_speed=normalize)
    if method == "dl-1":
        cfg = TrainConfig(seed=seed, epochs=epochs)
        return cnn.train([s.to_tensor() for s in train_set],
                         [s.to_tensor() for s in val_set], cfg)
    raise ValueError(f"unknown method: {method!r}")


def save_method_model(method: str, model, models_dir: Path, sensor: str) -> Path:
    models_dir.mkdir(parents=True, exist_ok=True)
    if method == "dl-1":
        path = models_dir / f"{method}__{sensor}.cnn.json"
        cnn.save_model(model, path)
    else:
        path = models_dir / f"{method}__{sensor}.json"
        classical.save_model(model, path)
    return path


def load_method_model(path: Path):
    if path.name.endswith(".cnn.json"):
        return cnn.load_model(path)
    return classical.load_model(path)


def run_pipeline(
    out_dir: str | Path,
    master_seed: int,
    n_events: int = 60,
    n_regular: int = 96,
    epochs: int = 40,
    fp_weight: float = 2.0,
    figures: bool = True,
) -> dict:
    """Full run on a fresh synthetic dataset; returns the result summary."""
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    models_dir = out_dir / "models"
    report_dir = out_dir / "report"

    manifest = generate_dataset(data_dir, derive_seed(master_seed, "generate"),
                                n_events=n_events, n_regular=n_regular)
    spec = split_spec_for_manifest(manifest)

    results = {m: MethodResult(m, {}, {}) for m in METHODS}
    per_sensor_multiclass = {}
    for sensor in sensor_ids(manifest):
        segments = load_segments(data_dir / "manifest.json", sensor)
        train_set, val_set, test_set = split(segments, spec)
        for method in METHODS:
            seed = derive_seed(master_seed, f"{method}:{sensor}")
            model = train_method(method, train_set, val_set, seed,
                                 fp_weight=fp_weight, epochs=epochs)
            save_method_model(method, model, models_dir, sensor)
            res = evaluate(model, test_set, mode="binary")
            results[method].per_sensor[sensor] = res.accuracy
            results[method].confusions[sensor] = res.confusion
            if method == "dl-1":
                multi = evaluate(model, test_set, mode="multiclass")
                per_sensor_multiclass[sensor] = multi

    ordered = [results[m] for m in METHODS]
    text = report(ordered, report_dir, figures=figures)
    return {
        "manifest": manifest,
        "results": results,
        "multiclass": per_sensor_multiclass,
        "table": text,
        "report_dir": report_dir,
        "models_dir": models_dir,
    }
