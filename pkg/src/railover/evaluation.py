"""Splitting, per-sensor evaluation, accuracy summaries and reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical, cnn
from .classical import ThresholdModel
from .cnn import CnnModel
from .dataset import LabeledSegment
from .synth import CLASS_ORDER, Material

MIN_DATASET_SIZE = 10


@dataclass
class SplitSpec:
    train: float = 0.40
    val: float = 0.30
    test: float = 0.30
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1.0")


def largest_remainder(n: int, fractions: tuple[float, ...]) -> list[int]:
    """Integer allocation of n items; remainders go to the largest
    fractional parts (lowest index on ties)."""
    raw = [n * f for f in fractions]
    base = [int(np.floor(r)) for r in raw]
    order = sorted(range(len(raw)),
                   key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[: n - sum(base)]:
        base[i] += 1
    return base


def split(
    segments: list[LabeledSegment], spec: SplitSpec
) -> tuple[list[LabeledSegment], list[LabeledSegment], list[LabeledSegment]]:
    """Disjoint train/val/test partition, stratified by (event, speed)."""
    n = len(segments)
    if n < MIN_DATASET_SIZE:
        raise ValueError("dataset too small to split")
    rng = np.random.default_rng(spec.seed)
    fractions = (spec.train, spec.val, spec.test)
    targets = largest_remainder(n, fractions)

    if not spec.stratified:
        order = rng.permutation(n)
        bounds = np.cumsum([0] + targets)
        return tuple(
            [segments[i] for i in order[bounds[j]:bounds[j + 1]]]
            for j in range(3)
        )

    strata: dict[tuple, list[int]] = {}
    for i, seg in enumerate(segments):
        strata.setdefault((seg.is_event, round(seg.speed_mps, 6)), []).append(i)

    assigned: list[list[int]] = [[], [], []]
    leftovers: list[int] = []
    for key in sorted(strata):
        idx = np.array(strata[key])
        rng.shuffle(idx)
        counts = [int(np.floor(len(idx) * f)) for f in fractions]
        pos = 0
        for j, c in enumerate(counts):
            assigned[j].extend(idx[pos:pos + c].tolist())
            pos += c
        leftovers.extend(idx[pos:].tolist())
    # hand stratum leftovers to whichever split is furthest from its target
    for i in leftovers:
        deficits = [targets[j] - len(assigned[j]) for j in range(3)]
        j = int(np.argmax(deficits))
        assigned[j].append(i)
    return tuple([segments[i] for i in sorted(part)] for part in assigned)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # rows = truth, cols = prediction
    mode: str


def predict_event(model, seg: LabeledSegment) -> bool:
    if isinstance(model, ThresholdModel):
        return classical.classify_segment(seg.frames, model)
    if isinstance(model, CnnModel):
        return cnn.predict(model, seg.to_tensor())[1]
    raise TypeError(f"unknown model type: {type(model).__name__}")


def evaluate(model, test_set: list[LabeledSegment],
             mode: str = "binary") -> EvalResult:
    """Accuracy and confusion matrix over a test set.

    Binary mode collapses CNN classes to event/non-event so all methods
    are comparable; multiclass mode is defined for the CNN only.
    """
    if not test_set:
        raise ValueError("empty test set")
    if mode == "binary":
        conf = np.zeros((2, 2), int)
        for seg in test_set:
            truth = int(seg.is_event)
            pred = int(predict_event(model, seg))
            conf[truth, pred] += 1
    elif mode == "multiclass":
        if not isinstance(model, CnnModel):
            raise ValueError("multiclass mode requires the CNN model")
        conf = np.zeros((len(CLASS_ORDER), len(CLASS_ORDER)), int)
        for seg in test_set:
            truth = CLASS_ORDER.index(seg.label)
            pred = CLASS_ORDER.index(cnn.predict(model, seg.to_tensor())[0])
            conf[truth, pred] += 1
    else:
        raise ValueError(f"unknown mode: {mode!r}")
    acc = float(np.trace(conf) / conf.sum())
    return EvalResult(acc, conf, mode)


def summarize(per_sensor: dict[str, float]) -> tuple[float, float, float]:
    """(max, min, mean) accuracy over sensors."""
    if not per_sensor:
        raise ValueError("no sensors")
    vals = np.array(list(per_sensor.values()), float)
    return float(vals.max()), float(vals.min()), float(vals.mean())


@dataclass
class MethodResult:
    method: str
    per_sensor: dict[str, float]
    confusions: dict[str, np.ndarray] = field(default_factory=dict)


def report(results: list[MethodResult], out_dir: str | Path,
           figures: bool = True) -> str:
    """Render the accuracy table (text + CSV) and figures.

    Returns the text table. CSV columns: method, sensor, accuracy, with
    max/min/mean summary rows per method appended.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["method,sensor,accuracy"]
    for r in results:
        for sensor in sorted(r.per_sensor):
            lines.append(f"{r.method},{sensor},{r.per_sensor[sensor]!r}")
    for r in results:
        mx, mn, mean = summarize(r.per_sensor)
        for name, val in (("max", mx), ("min", mn), ("mean", mean)):
            lines.append(f"{r.method},{name},{val!r}")
    (out_dir / "report.csv").write_text("\n".join(lines) + "\n")

    header = f"{'':<16}" + "".join(f"{r.method:>16}" for r in results)
    rows = [header]
    for i, name in enumerate(["Max accuracy", "Min accuracy", "Mean accuracy"]):
        cells = []
        for r in results:
            val = summarize(r.per_sensor)[i]
            cells.append(f"{100 * val:15.1f}%")
        rows.append(f"{name:<16}" + "".join(cells))
    text = "\n".join(rows) + "\n"
    (out_dir / "report.txt").write_text(text)

    if figures:
        from .plots import plot_accuracy_bars, plot_confusions

        plot_accuracy_bars(results, out_dir / "accuracy_per_sensor.png")
        plot_confusions(results, out_dir)
    return text


def read_report_csv(path: str | Path) -> dict[str, dict[str, float]]:
    """Parse report.csv back to {method: {sensor_or_summary: accuracy}}."""
    out: dict[str, dict[str, float]] = {}
    lines = Path(path).read_text().strip().splitlines()
    if lines[0] != "method,sensor,accuracy":
        raise ValueError("malformed report CSV header")
    for line in lines[1:]:
        method, sensor, acc = line.split(",")
        out.setdefault(method, {})[sensor] = float(acc)
    return out
