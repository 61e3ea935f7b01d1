"""Seeded generator of labeled synthetic drive-over recordings.

Stands in for the (unavailable) measurement-campaign data: operational
background noise plus material-specific impact bursts, confounding track
transients for regular runs, and per-sensor damping so that the
wheelset-bearing channel carries the cleanest signatures.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .dsp import DEFAULT_SAMPLE_RATE_HZ, Waveform, low_pass, rms

KMH = 1.0 / 3.6  # km/h in m/s
DEFAULT_SPEEDS_MPS = (5 * KMH, 10 * KMH, 15 * KMH)

MANIFEST_VERSION = 1


class Material(enum.Enum):
    """Object classes; NONE covers regular operation."""

    NONE = "none"
    STEEL = "steel"
    WOOD = "wood"
    STONE = "stone"
    BONE = "bone"


# canonical class order for classifier outputs; NONE is index 0
CLASS_ORDER = [Material.NONE, Material.STEEL, Material.WOOD, Material.STONE, Material.BONE]
EVENT_MATERIALS = CLASS_ORDER[1:]


class Confounder(enum.Enum):
    NONE = "none"
    SWITCH = "switch"
    RAIL_JOINT = "rail_joint"


@dataclass
class ScenarioConfig:
    seed: int
    speed_mps: float = 10 * KMH
    duration_s: float = 3.0
    noise_rms: float = 0.1
    event_time_s: float = 1.5
    confounder: Confounder = Confounder.NONE
    impact_gain: float = 1.0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        if not 0 <= self.event_time_s < self.duration_s:
            raise ValueError("event_time_s must lie inside the recording")
        if self.noise_rms <= 0:
            raise ValueError("noise_rms must be positive")


@dataclass
class LabeledRecording:
    waveform: Waveform
    label: Material
    speed_mps: float
    sensor_id: str
    provenance: ScenarioConfig


@dataclass(frozen=True)
class SensorProfile:
    """Mounting position and its gain relative to the wheelset bearing."""

    sensor_id: str
    gain: float


# car body is additionally damped; wheelset bearing is the undamped reference
DEFAULT_SENSORS = (
    SensorProfile("wheelset_bearing", 1.0),
    SensorProfile("bogie_frame", 0.5),
    SensorProfile("car_body", 0.15),
)

# Self-noise of the sensing chain, identical for all mounts; it is what
# makes the heavily damped car-body channel genuinely harder.
SENSOR_NOISE_RMS = 0.05


@dataclass(frozen=True)
class ImpactSignature:
    """Decaying-sinusoid model of one material's drive-over burst.

    amp_per_mps sets the burst amplitude per m/s of train speed; the
    optional echo produces the secondary burst seen for stone.
    """

    freqs_hz: tuple[float, ...]
    rel_amps: tuple[float, ...]
    decay_s: float
    amp_per_mps: float
    echo_delay_s: float = 0.0
    echo_gain: float = 0.0


IMPACT_SIGNATURES = {
    Material.STEEL: ImpactSignature((700.0, 950.0), (1.0, 0.6), 0.030, 4.0),
    Material.WOOD: ImpactSignature((400.0, 550.0), (1.0, 0.5), 0.040, 2.5),
    Material.STONE: ImpactSignature((240.0, 330.0), (1.0, 0.6), 0.050, 2.2,
                                    echo_delay_s=0.08, echo_gain=0.4),
    Material.BONE: ImpactSignature((150.0, 215.0), (1.0, 0.5), 0.010, 2.0),
}

# Switch transient: broad, below 300 Hz, amplitude also grows with speed.
SWITCH_SIGNATURE = ImpactSignature((85.0, 140.0), (1.0, 0.7), 0.060, 0.55)
# Rail joint: small periodic clicks.
RAIL_JOINT_SIGNATURE = ImpactSignature((250.0,), (1.0,), 0.008, 0.0)
RAIL_JOINT_AMP = 0.4
RAIL_JOINT_PERIOD_S = 0.5

AMP_JITTER = 0.2  # +-20% per-recording amplitude spread


def _burst(t: np.ndarray, sig: ImpactSignature, amp: float,
           phases: np.ndarray) -> np.ndarray:
    """Decaying sinusoids starting at t=0; zero for t<0."""
    y = np.zeros_like(t)
    live = t >= 0
    tt = t[live]
    comp = np.zeros_like(tt)
    for f, rel, ph in zip(sig.freqs_hz, sig.rel_amps, phases):
        comp += rel * np.exp(-tt / sig.decay_s) * np.sin(2 * np.pi * f * tt + ph)
    y[live] = amp * comp
    if sig.echo_gain > 0:
        te = t - sig.echo_delay_s
        live = te >= 0
        tt = te[live]
        comp = np.zeros_like(tt)
        for f, rel, ph in zip(sig.freqs_hz, sig.rel_amps, phases):
            comp += rel * np.exp(-tt / sig.decay_s) * np.sin(2 * np.pi * f * tt + ph)
        y[live] += amp * sig.echo_gain * comp
    return y


def _background(rng: np.random.Generator, n: int, fs: float,
                noise_rms: float) -> np.ndarray:
    """Band-limited operational noise, clipped so its peak-to-peak stays
    within 4x the RMS (no rogue peaks in quiet recordings)."""
    raw = low_pass(rng.standard_normal(n), fs)
    raw *= noise_rms / rms(raw)
    raw = np.clip(raw, -2.0 * noise_rms, 2.0 * noise_rms)
    raw *= noise_rms / rms(raw)
    return np.clip(raw, -2.0 * noise_rms, 2.0 * noise_rms)


def _track_signal(cfg: ScenarioConfig, material: Material,
                  rng: np.random.Generator) -> np.ndarray:
    """Noise + injected transients at track level (before sensor damping)."""
    fs = cfg.sample_rate_hz
    n = int(round(cfg.duration_s * fs))
    t = np.arange(n) / fs
    noise = _background(rng, n, fs, cfg.noise_rms)

    clean = np.zeros(n)
    if material is not Material.NONE:
        sig = IMPACT_SIGNATURES[material]
        jitter = 1.0 + AMP_JITTER * (2.0 * rng.random() - 1.0)
        phases = rng.uniform(0, 2 * np.pi, size=len(sig.freqs_hz))
        amp = sig.amp_per_mps * cfg.speed_mps * cfg.impact_gain * jitter
        clean = _burst(t - cfg.event_time_s, sig, amp, phases)
    elif cfg.confounder is Confounder.SWITCH:
        sig = SWITCH_SIGNATURE
        jitter = 1.0 + AMP_JITTER * (2.0 * rng.random() - 1.0)
        phases = rng.uniform(0, 2 * np.pi, size=len(sig.freqs_hz))
        amp = sig.amp_per_mps * cfg.speed_mps * jitter
        clean = _burst(t - cfg.event_time_s, sig, amp, phases)
    elif cfg.confounder is Confounder.RAIL_JOINT:
        sig = RAIL_JOINT_SIGNATURE
        jitter = 1.0 + AMP_JITTER * (2.0 * rng.random() - 1.0)
        first = cfg.event_time_s % RAIL_JOINT_PERIOD_S
        for t0 in np.arange(first, cfg.duration_s, RAIL_JOINT_PERIOD_S):
            phases = rng.uniform(0, 2 * np.pi, size=1)
            clean += _burst(t - t0, sig, RAIL_JOINT_AMP * jitter, phases)

    if clean.any():
        clean = low_pass(clean, fs)
    return noise + clean


def generate_event(material: Material, cfg: ScenarioConfig) -> LabeledRecording:
    """Drive-over recording for one material at track level."""
    if material is Material.NONE:
        raise ValueError("use generate_regular for non-events")
    rng = np.random.default_rng(cfg.seed)
    samples = _track_signal(cfg, material, rng)
    wf = Waveform("track", samples, cfg.sample_rate_hz)
    return LabeledRecording(wf, material, cfg.speed_mps, "track", cfg)


def generate_regular(cfg: ScenarioConfig) -> LabeledRecording:
    """Regular-operation recording (optionally switch / rail-joint transient)."""
    rng = np.random.default_rng(cfg.seed)
    samples = _track_signal(cfg, Material.NONE, rng)
    wf = Waveform("track", samples, cfg.sample_rate_hz)
    return LabeledRecording(wf, Material.NONE, cfg.speed_mps, "track", cfg)


def render_for_sensor(track: np.ndarray, profile: SensorProfile, fs: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Apply mount damping and add the (undamped) sensor self-noise."""
    self_noise = _background(rng, track.size, fs, SENSOR_NOISE_RMS)
    return profile.gain * track + self_noise


def _event_plan(n_events: int) -> list[Material]:
    """Even split over the 4 materials, remainder round-robin."""
    base, rem = divmod(n_events, len(EVENT_MATERIALS))
    plan = []
    for i, mat in enumerate(EVENT_MATERIALS):
        plan.extend([mat] * (base + (1 if i < rem else 0)))
    return plan


def _regular_plan(n_regular: int) -> list[Confounder]:
    confs = list(Confounder)
    base, rem = divmod(n_regular, len(confs))
    plan = []
    for i, c in enumerate(confs):
        plan.extend([c] * (base + (1 if i < rem else 0)))
    return plan


def _recording_seed(master_seed: int, index: int) -> np.random.Generator:
    # per-recording stream: parallel and serial generation agree
    return np.random.default_rng([master_seed, index])


def generate_dataset(
    out_dir: str | Path,
    seed: int,
    n_events: int = 60,
    n_regular: int = 96,
    sensors: tuple[SensorProfile, ...] = DEFAULT_SENSORS,
    speeds_mps: tuple[float, ...] = DEFAULT_SPEEDS_MPS,
    duration_s: float = 3.0,
    noise_rms: float = 0.1,
) -> dict:
    """Write waveform CSVs plus a JSON manifest; returns the manifest.

    Events split evenly across materials and speeds; regular runs across
    confounders. Every recording is rendered once per sensor profile.
    """
    if n_events < 0 or n_regular < 0:
        raise ValueError("counts must be non-negative")
    out_dir = Path(out_dir)
    wave_dir = out_dir / "waveforms"
    wave_dir.mkdir(parents=True, exist_ok=True)

    specs: list[tuple[Material, Confounder]] = [
        (m, Confounder.NONE) for m in _event_plan(n_events)
    ] + [(Material.NONE, c) for c in _regular_plan(n_regular)]

    records = []
    for idx, (material, confounder) in enumerate(specs):
        rng = _recording_seed(seed, idx)
        speed = speeds_mps[idx % len(speeds_mps)]
        # burst start snapped near a frame boundary so the burst sits
        # inside one 100 ms window
        event_time = 0.01 + 0.1 * int(rng.integers(8, 20))
        cfg = ScenarioConfig(
            seed=seed,
            speed_mps=speed,
            duration_s=duration_s,
            noise_rms=noise_rms,
            event_time_s=event_time,
            confounder=confounder,
            sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ,
        )
        track = _track_signal(cfg, material, rng)
        for s_idx, profile in enumerate(sensors):
            srng = np.random.default_rng([seed, idx, s_idx])
            samples = render_for_sensor(track, profile, cfg.sample_rate_hz, srng)
            rel = f"waveforms/rec{idx:04d}_{profile.sensor_id}.csv"
            write_waveform_csv(out_dir / rel, samples, cfg.sample_rate_hz)
            records.append({
                "path": rel,
                "channel_id": f"rec{idx:04d}_{profile.sensor_id}",
                "sensor_profile": profile.sensor_id,
                "sample_rate_hz": cfg.sample_rate_hz,
                "label": material.value,
                "speed_mps": speed,
                "seed": seed,
                "recording_index": idx,
                "confounder": confounder.value,
                "event_time_s": event_time,
            })

    manifest = {
        "version": MANIFEST_VERSION,
        "seed": seed,
        "n_events": n_events,
        "n_regular": n_regular,
        "sensors": [asdict(s) for s in sensors],
        "records": records,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def write_waveform_csv(path: str | Path, samples: np.ndarray, fs: float) -> None:
    t = np.arange(samples.size) / fs
    np.savetxt(path, np.column_stack([t, samples]), fmt="%.17g",
               delimiter=",", header="time_s,acc_mps2", comments="")


def read_waveform_csv(path: str | Path, channel_id: str = "",
                      sample_rate_hz: float | None = None) -> Waveform:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"malformed waveform CSV: {path}") from exc
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"malformed waveform CSV: {path}")
    if sample_rate_hz is None:
        dt = np.diff(data[:, 0])
        sample_rate_hz = 1.0 / float(np.median(dt))
    return Waveform(channel_id or Path(path).stem, data[:, 1], sample_rate_hz)


def load_manifest(path: str | Path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version: {manifest.get('version')!r}")
    for key in ("records", "sensors", "seed"):
        if key not in manifest:
            raise ValueError(f"manifest missing field: {key!r}")
    return manifest
