"""Threshold detectors fitted by simulated annealing with majority voting.

Two variants: plain ("classical-1") and velocity-normalized
("classical-vel"), each with one threshold per quantity and a
false-positive-weighted training loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import FeatureFrame

N_QUANTITIES = 5
QUANTITY_NAMES = ["vel_pp", "vel_rms", "acc_pp", "acc_rms", "octave_max"]

MODEL_VERSION = 1


@dataclass
class ThresholdModel:
    """5 per-quantity decision thresholds; a window votes event when a
    quantity exceeds its threshold, the window fires on >=3 of 5 votes."""

    thresholds: np.ndarray
    fp_weight: float = 2.0
    normalize_by_speed: bool = False

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, float)
        if self.thresholds.shape != (N_QUANTITIES,):
            raise ValueError("need exactly 5 thresholds")
        if not np.all(np.isfinite(self.thresholds)):
            raise ValueError("thresholds must be finite")
        if self.fp_weight < 1:
            raise ValueError("fp_weight must be >= 1")


@dataclass
class SaParams:
    initial_temp: float = 5.0
    cooling: float = 0.95
    iters_per_temp: int = 30
    min_temp: float = 1e-3
    neighbor_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0,1)")
        if min(self.initial_temp, self.iters_per_temp, self.min_temp,
               self.neighbor_scale) <= 0:
            raise ValueError("SA parameters must be positive")


def reduce_quantities(f: FeatureFrame, normalize_by_speed: bool) -> np.ndarray:
    """The 5 decision quantities of one frame (octave reduced by max)."""
    q = np.array([f.vel_pp, f.vel_rms, f.acc_pp, f.acc_rms, np.max(f.octave)])
    if normalize_by_speed:
        if f.speed_mps <= 0:
            raise ValueError("zero speed")
        q = q / f.speed_mps
    return q


def segment_quantities(frames: list[FeatureFrame],
                       normalize_by_speed: bool) -> np.ndarray:
    """(T, 5) quantity matrix for a whole segment."""
    if not frames:
        raise ValueError("empty segment")
    return np.stack([reduce_quantities(f, normalize_by_speed) for f in frames])


def classify_window(q: np.ndarray, m: ThresholdModel) -> tuple[np.ndarray, bool]:
    votes = np.asarray(q, float) > m.thresholds
    return votes, bool(votes.sum() >= 3)


def classify_segment(frames: list[FeatureFrame], m: ThresholdModel) -> bool:
    """Event iff any window's majority vote fires."""
    q = segment_quantities(frames, m.normalize_by_speed)
    return _decide_segment(q, m.thresholds)


def _decide_segment(q: np.ndarray, thresholds: np.ndarray) -> bool:
    # q: (T, 5); any window with >=3 quantities above threshold
    votes = q > thresholds
    return bool(np.any(votes.sum(axis=1) >= 3))


def weighted_loss_from_quantities(
    thresholds: np.ndarray,
    quantities: list[np.ndarray],
    labels: np.ndarray,
    fp_weight: float,
) -> float:
    """FN count plus fp_weight times FP count over segments."""
    try:
        stacked = np.stack(quantities)  # uniform T fast path
    except ValueError:
        preds = np.array([_decide_segment(q, thresholds) for q in quantities])
    else:
        votes = stacked > thresholds
        preds = np.any(votes.sum(axis=2) >= 3, axis=1)
    fn = np.sum(labels & ~preds)
    fp = np.sum(~labels & preds)
    return float(fn + fp_weight * fp)


def weighted_loss(m: ThresholdModel,
                  data: list[tuple[list[FeatureFrame], bool]]) -> float:
    """Training loss over labeled segments (label True = event)."""
    if not data:
        raise ValueError("empty data")
    qs = [segment_quantities(frames, m.normalize_by_speed) for frames, _ in data]
    labels = np.array([bool(lbl) for _, lbl in data])
    return weighted_loss_from_quantities(m.thresholds, qs, labels, m.fp_weight)


def train_thresholds(
    data: list[tuple[list[FeatureFrame], bool]],
    sa: SaParams,
    fp_weight: float = 2.0,
    normalize_by_speed: bool = False,
) -> ThresholdModel:
    """Fit the 5 thresholds by simulated annealing.

    Start at the per-quantity 95th percentile of the non-event segments'
    values (each segment contributes its frame maximum); a neighbor
    perturbs one random coordinate by a Gaussian step scaled with that
    quantity's IQR over segment values; geometric cooling; the best
    state ever visited is returned.
    """
    labels = np.array([bool(lbl) for _, lbl in data])
    if labels.all() or not labels.any():
        raise ValueError("degenerate training set")
    qs = [segment_quantities(frames, normalize_by_speed) for frames, _ in data]

    seg_max = np.stack([q.max(axis=0) for q in qs])
    start = np.percentile(seg_max[~labels], 95, axis=0)
    iqr = np.percentile(seg_max, 75, axis=0) - np.percentile(seg_max, 25, axis=0)
    step = sa.neighbor_scale * np.where(iqr > 0, iqr, np.abs(start) + 1e-9)

    rng = np.random.default_rng(sa.seed)

    def loss(t):
        return weighted_loss_from_quantities(t, qs, labels, fp_weight)

    cur = start.copy()
    cur_loss = loss(cur)
    best, best_loss = cur.copy(), cur_loss
    temp = sa.initial_temp
    while temp > sa.min_temp:
        for _ in range(sa.iters_per_temp):
            cand = cur.copy()
            k = int(rng.integers(N_QUANTITIES))
            cand[k] += rng.normal(0.0, step[k])
            cand_loss = loss(cand)
            delta = cand_loss - cur_loss
            if delta <= 0 or rng.random() < np.exp(-delta / temp):
                cur, cur_loss = cand, cand_loss
                if cur_loss < best_loss:
                    best, best_loss = cur.copy(), cur_loss
        temp *= sa.cooling
    return ThresholdModel(best, fp_weight=fp_weight,
                          normalize_by_speed=normalize_by_speed)


def sweep_oracle_loss(
    data: list[tuple[list[FeatureFrame], bool]],
    fp_weight: float = 2.0,
    normalize_by_speed: bool = False,
) -> float:
    """Per-coordinate brute-force sweep reference.

    Starting from the SA initial state, each coordinate in turn is swept
    over all candidate cuts (midpoints between sorted observed values,
    plus open ends) and fixed at its best value.
    """
    labels = np.array([bool(lbl) for _, lbl in data])
    qs = [segment_quantities(frames, normalize_by_speed) for frames, _ in data]
    seg_max = np.stack([q.max(axis=0) for q in qs])
    t = np.percentile(seg_max[~labels], 95, axis=0)

    best_loss = weighted_loss_from_quantities(t, qs, labels, fp_weight)
    for k in range(N_QUANTITIES):
        vals = np.unique(seg_max[:, k])
        cands = np.concatenate([
            [vals[0] - 1.0],
            (vals[:-1] + vals[1:]) / 2.0,
            [vals[-1] + 1.0],
        ])
        for c in cands:
            trial = t.copy()
            trial[k] = c
            l = weighted_loss_from_quantities(trial, qs, labels, fp_weight)
            if l < best_loss:
                best_loss = l
                t = trial
    return best_loss


def save_model(m: ThresholdModel, path: str | Path) -> None:
    payload = {
        "version": MODEL_VERSION,
        "thresholds": [float(x) for x in m.thresholds],
        "fp_weight": m.fp_weight,
        "normalize_by_speed": m.normalize_by_speed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_model(path: str | Path) -> ThresholdModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported threshold model version: "
                         f"{payload.get('version')!r}")
    return ThresholdModel(
        np.array(payload["thresholds"], float),
        fp_weight=float(payload["fp_weight"]),
        normalize_by_speed=bool(payload["normalize_by_speed"]),
    )
