"""Command-line entry point: generate, featurize, train, evaluate, detect."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import classical, cnn
from .classical import SaParams
from .dataset import (derive_seed, load_segments, read_features_csv,
                      sensor_ids, write_features_csv)
from .evaluation import MethodResult, evaluate, report, split
from .pipeline import (load_method_model, save_method_model,
                       split_spec_for_manifest, train_method)
from .dsp import frames_to_matrix
from .synth import KMH, Material, generate_dataset, load_manifest

log = logging.getLogger("railover")


def _speed_to_mps(value: float, unit: str) -> float:
    return value * KMH if unit == "kmh" else value


def cmd_generate(args) -> int:
    manifest = generate_dataset(args.out, args.seed,
                                n_events=args.events, n_regular=args.regular)
    log.info("generated %d recordings x %d sensors into %s (seed %d)",
             len(manifest["records"]) // len(manifest["sensors"]),
             len(manifest["sensors"]), args.out, args.seed)
    return 0


def cmd_featurize(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    segments = load_segments(args.manifest)
    for seg in segments:
        name = f"rec{seg.recording_index:04d}_{seg.sensor_id}.features.csv"
        write_features_csv(out / name, seg.frames)
    log.info("wrote %d feature CSVs to %s", len(segments), out)
    return 0


def _train_common(args, method: str) -> int:
    manifest = load_manifest(args.manifest)
    spec = split_spec_for_manifest(manifest)
    sensors = [args.sensor] if args.sensor else sensor_ids(manifest)
    out = Path(args.out)
    for sensor in sensors:
        segments = load_segments(args.manifest, sensor)
        if not segments:
            raise ValueError(f"no recordings for sensor {sensor!r}")
        train_set, val_set, _ = split(segments, spec)
        seed = derive_seed(args.seed, f"{method}:{sensor}")
        model = train_method(
            method, train_set, val_set, seed,
            fp_weight=getattr(args, "fp_weight", 2.0),
            epochs=getattr(args, "epochs", 40))
        path = save_method_model(method, model, out, sensor)
        log.info("trained %s for %s -> %s", method, sensor, path)
    return 0


def cmd_train_classical(args) -> int:
    method = "classical-vel" if args.variant == "vel" else "classical-1"
    return _train_common(args, method)


def cmd_train_cnn(args) -> int:
    return _train_common(args, "dl-1")


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    spec = split_spec_for_manifest(manifest)
    models_dir = Path(args.models)
    model_files = sorted(models_dir.glob("*__*.json"))
    if not model_files:
        raise FileNotFoundError(f"no model files in {models_dir}")

    by_method: dict[str, MethodResult] = {}
    test_cache: dict[str, list] = {}
    for path in model_files:
        stem = path.name[: -len(".cnn.json")] if path.name.endswith(".cnn.json") \
            else path.stem
        method, _, sensor = stem.partition("__")
        if sensor not in test_cache:
            segments = load_segments(args.manifest, sensor)
            test_cache[sensor] = split(segments, spec)[2]
        model = load_method_model(path)
        res = evaluate(model, test_cache[sensor], mode=args.mode)
        r = by_method.setdefault(method, MethodResult(method, {}, {}))
        r.per_sensor[sensor] = res.accuracy
        r.confusions[sensor] = res.confusion
    ordered = [by_method[m] for m in sorted(by_method)]
    text = report(ordered, args.out, figures=not args.no_figures)
    sys.stdout.write(text)
    return 0


def cmd_detect(args) -> int:
    path = Path(args.model)
    model = load_method_model(path)
    is_cnn = isinstance(model, cnn.CnnModel)
    method = "dl-1" if is_cnn else (
        "classical-vel" if model.normalize_by_speed else "classical-1")
    for feat_path in args.features:
        frames = read_features_csv(feat_path)
        seg_id = Path(feat_path).stem
        if is_cnn:
            tensor = cnn.SegmentTensor(frames_to_matrix(frames),
                                       frames[0].speed_mps, Material.NONE)
            cls, is_event = cnn.predict(model, tensor)
            verdict = "event" if is_event else "non-event"
            print(f"{seg_id}\t{method}\t{verdict}\tclass={cls.value}")
        else:
            votes_any = np.zeros(classical.N_QUANTITIES, dtype=bool)
            fired = False
            for f in frames:
                q = classical.reduce_quantities(f, model.normalize_by_speed)
                votes, decision = classical.classify_window(q, model)
                votes_any |= votes
                fired = fired or decision
            verdict = "event" if fired else "non-event"
            breakdown = ",".join(
                f"{name}={'1' if v else '0'}"
                for name, v in zip(classical.QUANTITY_NAMES, votes_any))
            print(f"{seg_id}\t{method}\t{verdict}\tclass="
                  f"{'event' if fired else 'none'}\tvotes[{breakdown}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="railover",
        description="Detect rail driving-over events in accelerometer data")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--events", type=int, default=60)
    g.add_argument("--regular", type=int, default=96)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("featurize", help="feature CSVs for every recording")
    f.add_argument("--manifest", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_featurize)

    tc = sub.add_parser("train-classical", help="fit threshold detector")
    tc.add_argument("--manifest", required=True)
    tc.add_argument("--variant", choices=["plain", "vel"], default="plain")
    tc.add_argument("--seed", type=int, required=True)
    tc.add_argument("--out", required=True)
    tc.add_argument("--sensor", default=None)
    tc.add_argument("--fp-weight", dest="fp_weight", type=float, default=2.0)
    tc.set_defaults(func=cmd_train_classical)

    tn = sub.add_parser("train-cnn", help="train the convolutional classifier")
    tn.add_argument("--manifest", required=True)
    tn.add_argument("--seed", type=int, required=True)
    tn.add_argument("--epochs", type=int, default=40)
    tn.add_argument("--out", required=True)
    tn.add_argument("--sensor", default=None)
    tn.set_defaults(func=cmd_train_cnn)

    e = sub.add_parser("evaluate", help="test-set accuracy report")
    e.add_argument("--manifest", required=True)
    e.add_argument("--models", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--mode", choices=["binary", "multiclass"], default="binary")
    e.add_argument("--no-figures", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("detect", help="one-shot verdicts for feature CSVs")
    d.add_argument("--model", required=True)
    d.add_argument("--features", nargs="+", required=True)
    d.set_defaults(func=cmd_detect)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, OSError, KeyError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
