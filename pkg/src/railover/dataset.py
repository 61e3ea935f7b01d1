"""Labeled segments, feature CSVs and manifest-driven loading."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cnn import SegmentTensor
from .dsp import FeatureFrame, N_BANDS, FEATURE_NAMES, featurize, frames_to_matrix
from .synth import Material, load_manifest, read_waveform_csv

FEATURE_CSV_HEADER = "frame," + ",".join(FEATURE_NAMES) + ",speed_mps"


@dataclass
class LabeledSegment:
    """A feature-frame sequence with its ground truth and provenance."""

    frames: list[FeatureFrame]
    label: Material
    speed_mps: float
    sensor_id: str
    recording_index: int

    @property
    def is_event(self) -> bool:
        return self.label is not Material.NONE

    @property
    def features(self) -> np.ndarray:
        return frames_to_matrix(self.frames)

    def to_tensor(self) -> SegmentTensor:
        return SegmentTensor(self.features, self.speed_mps, self.label)


def derive_seed(master_seed: int, role: str) -> int:
    """Stable sub-seed for one role, fanned out from the master seed."""
    digest = hashlib.sha256(f"{master_seed}:{role}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def write_features_csv(path: str | Path, frames: list[FeatureFrame]) -> None:
    rows = np.stack([
        np.concatenate([[f.frame_index], f.as_vector(), [f.speed_mps]])
        for f in frames
    ])
    np.savetxt(path, rows, fmt="%.17g", delimiter=",",
               header=FEATURE_CSV_HEADER, comments="")


def read_features_csv(path: str | Path) -> list[FeatureFrame]:
    with open(path) as fh:
        header = fh.readline().strip()
    if header != FEATURE_CSV_HEADER:
        raise ValueError(f"malformed feature CSV header in {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    frames = []
    for row in data:
        frames.append(FeatureFrame(
            vel_pp=row[1], vel_rms=row[2], acc_pp=row[3], acc_rms=row[4],
            octave=row[5:5 + N_BANDS], speed_mps=row[5 + N_BANDS],
            frame_index=int(row[0]),
        ))
    return frames


def load_segments(
    manifest_path: str | Path,
    sensor_id: str | None = None,
) -> list[LabeledSegment]:
    """Featurize every manifest record (optionally one sensor profile)."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    segments = []
    for rec in manifest["records"]:
        if sensor_id is not None and rec["sensor_profile"] != sensor_id:
            continue
        wf = read_waveform_csv(base / rec["path"], rec["channel_id"],
                               rec["sample_rate_hz"])
        frames = featurize(wf, rec["speed_mps"])
        segments.append(LabeledSegment(
            frames=frames,
            label=Material(rec["label"]),
            speed_mps=rec["speed_mps"],
            sensor_id=rec["sensor_profile"],
            recording_index=rec["recording_index"],
        ))
    return segments


def sensor_ids(manifest: dict) -> list[str]:
    return [s["sensor_id"] for s in manifest["sensors"]]
