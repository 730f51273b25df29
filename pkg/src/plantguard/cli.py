"""Command-line interface.

Exit codes: 0 success, 1 a requested metric gate failed, 2 configuration or
input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from plantguard.errors import PlantGuardError
from plantguard.data.noise import NoiseConfig
from plantguard.data.profiles import builtin_profile
from plantguard.data.records import DatasetProfile, load_csv, save_csv, save_manifest
from plantguard.evaluation import figures
from plantguard.evaluation.experiment import (
    TrainedSystem,
    domain_shift_scenario,
    evaluate_outcome,
    generate_scenario,
    load_experiment_manifest,
    noise_scenario,
    noise_sweep,
    replay,
    run_experiment,
    sweep_grace,
    sweep_waiting_window,
    technician_for_scenario,
    wdnn_config_for,
)
from plantguard.nn.optim import SgdConfig
from plantguard.wdnn import WdnnModel, train_wdnn
from plantguard.data.normalize import fit_normalizer
from plantguard.data.windows import make_windows
from plantguard.actuators import build_db

EXIT_OK = 0
EXIT_METRIC = 1
EXIT_CONFIG = 2


def _profile_from_args(args) -> DatasetProfile:
    if getattr(args, "profile_file", None):
        with open(args.profile_file, encoding="utf-8") as fh:
            return DatasetProfile.from_dict(json.load(fh))
    return builtin_profile(args.profile)


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenario = (domain_shift_scenario if args.scenario == "domain-shift" else noise_scenario)(args.seed)
    if args.train_duration:
        scenario["train_duration"] = args.train_duration
    if args.test_duration:
        scenario["test_duration"] = args.test_duration
    profile = builtin_profile("synthetic-two-tank")
    train, validation, test, intervals = generate_scenario(scenario, profile.validation_fraction)
    save_csv(out / "train.csv", train, profile)
    save_csv(out / "validation.csv", validation, profile)
    save_csv(out / "test.csv", test, profile)
    save_manifest(out / "manifest.json", {
        "profile": profile.name,
        "seed": args.seed,
        "scenario": args.scenario,
        "splits": {"train": "train.csv", "validation": "validation.csv", "test": "test.csv"},
        "attack_intervals": [list(iv) for iv in intervals],
        "attacks": [a.to_dict() for a in scenario["attacks"]],
        "shift": scenario["shift"].to_dict(),
    })
    print(f"wrote {len(train)}+{len(validation)}+{len(test)} records to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    profile = _profile_from_args(args)
    train = load_csv(args.train, profile)
    normalizer = fit_normalizer(train)
    cfg = wdnn_config_for(profile)
    model = WdnnModel(cfg, seed=args.seed)
    inputs, targets, _ = make_windows(
        train, normalizer, profile.w_in, profile.horizon, profile.w_out, cfg.predict_steps
    )
    sgd = SgdConfig(profile.learning_rate, profile.momentum, profile.batch_size)
    trace = train_wdnn(model, inputs, targets, sgd, args.epochs, seed=args.seed,
                       log_every=args.log_every)
    db = build_db(train.actuators, profile.actuator_columns)
    system = TrainedSystem(profile, model, normalizer, db)
    system.save(args.out)
    with open(Path(args.out) / "training_trace.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,cost\n")
        for i, c in enumerate(trace):
            fh.write(f"{i},{c}\n")
    print(f"trained {args.epochs} epochs; final cost {trace[-1]:.6g}; saved to {args.out}")
    return EXIT_OK


def cmd_tune_thresholds(args) -> int:
    system = TrainedSystem.load(args.model)
    validation = load_csv(args.validation, system.profile)
    info = system.tune_thresholds(validation, ttnn_epochs=args.epochs, seed=args.seed)
    system.save(args.model)
    print(f"base offsets per section: {info['t_bases']}")
    print(f"validation cost: {info['validation_cost']:.6g}")
    return EXIT_OK


def _load_attack_intervals(path) -> list:
    if not path:
        return []
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    return [tuple(iv) for iv in manifest.get("attack_intervals", [])]


def cmd_detect(args) -> int:
    system = TrainedSystem.load(args.model)
    records = load_csv(args.data, system.profile)
    overrides = {}
    if args.w_anom is not None:
        overrides["w_anom"] = args.w_anom
    if args.w_grace is not None:
        overrides["w_grace"] = args.w_grace
    if args.static_thresholds:
        overrides["adaptive_thresholds"] = False
    noise = NoiseConfig(sigma=args.sigma, seed=args.seed) if args.sigma else None
    technician = None
    intervals = _load_attack_intervals(args.attacks)
    if args.feedback == "oracle" and records.labels is not None:
        manifest = json.load(open(args.attacks, encoding="utf-8")) if args.attacks else {}
        from plantguard.data.synthetic import ShiftSpec
        shift = ShiftSpec(
            redundant_pump_episodes=[tuple(w) for w in manifest.get("shift", {}).get("redundant_pump_episodes", [])],
            sensor_offsets=[tuple(o) for o in manifest.get("shift", {}).get("sensor_offsets", [])],
        )
        technician = technician_for_scenario(records.labels, intervals, shift)
    outcome = replay(system, records, technician=technician, noise=noise, **overrides)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from plantguard.evaluation.experiment import _write_trace_csv
    labels = outcome.label_slice() if records.labels is not None else np.zeros(outcome.trace.t.size, dtype=bool)
    _write_trace_csv(out / "trace.csv", outcome.trace, labels)
    with open(out / "alarms.jsonl", "w", encoding="utf-8") as fh:
        for alarm in outcome.alarms:
            fh.write(json.dumps(alarm.to_dict()) + "\n")
    with open(out / "alarm_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in outcome.trace.alarm_log_entries():
            fh.write(json.dumps(entry) + "\n")
    with open(out / "adaptations.jsonl", "w", encoding="utf-8") as fh:
        for report in outcome.adaptation_reports:
            fh.write(json.dumps(report.to_dict()) + "\n")
    if records.labels is not None:
        stats = evaluate_outcome(outcome, intervals, delta_after=args.delta_after)
        with open(out / "metrics.json", "w", encoding="utf-8") as fh:
            json.dump(stats, fh, indent=2, sort_keys=True, default=float)
    print(f"replayed {len(records)} records; {len(outcome.alarms)} alarm episodes; results in {out}")
    return EXIT_OK


def _read_trace_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: i for i, name in enumerate(header)}
    g = sum(1 for name in header if name.startswith("mse_"))
    t = np.array([int(r[cols["t"]]) for r in rows])
    reported = np.array([r[cols["reported"]] == "1" for r in rows])
    labels = np.array([r[cols["label"]] == "1" for r in rows])
    mse = np.array([[float(r[cols[f"mse_{i}"]]) for i in range(g)] for r in rows])
    thresholds = np.array([[float(r[cols[f"threshold_{i}"]]) for i in range(g)] for r in rows])
    return t, mse, thresholds, reported, labels


def cmd_evaluate(args) -> int:
    from plantguard.evaluation.metrics import (
        attack_outcomes, detected_count, false_alarm_episodes, interventions_rate, point_metrics,
    )
    t, mse, thresholds, reported, labels = _read_trace_csv(Path(args.detection) / "trace.csv")
    pm = point_metrics(labels, reported)
    intervals = _load_attack_intervals(args.attacks)
    outcomes = attack_outcomes(t[reported], intervals, args.delta_after)
    detected, after = detected_count(outcomes)
    fa = false_alarm_episodes(reported, labels)
    duration = int(t[-1] - t[0] + 1) if t.size else 0
    report = {
        "points": pm.to_dict(),
        "attacks": [o.to_dict() for o in outcomes],
        "attacks_detected": detected,
        "attacks_detected_after_end": after,
        "false_alarm_episodes": fa,
        "interventions_per_hour": interventions_rate(fa, duration) if duration else 0.0,
    }
    out = Path(args.out or args.detection)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)

    class _Trace:
        pass

    trace = _Trace()
    trace.t, trace.mse, trace.thresholds = t, mse, thresholds
    figdir = out / "figures"
    figdir.mkdir(exist_ok=True)
    figures.save_trace_figure(figdir / "trace.png", trace, labels)
    print(json.dumps(report["points"], indent=2))
    print(f"attacks detected: {detected}/{len(intervals)} ({after} after end); "
          f"{fa} false-alarm episodes ({report['interventions_per_hour']:.2f}/h)")
    if args.min_f1 is not None and pm.f1 < args.min_f1:
        print(f"F1 {pm.f1:.4f} below required {args.min_f1}", file=sys.stderr)
        return EXIT_METRIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    system = TrainedSystem.load(args.model)
    records = load_csv(args.data, system.profile)
    values = [float(v) for v in args.values.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    intervals = _load_attack_intervals(args.attacks)
    if args.axis in ("w_anom", "w_grace"):
        outcome = replay(system, records)
        labels = outcome.label_slice()
        if args.axis == "w_anom":
            rows = sweep_waiting_window(outcome.trace, labels, [int(v) for v in values])
            columns = ["w_anom", "alarm_points", "tp", "fp", "fn", "tn", "precision", "recall", "f1"]
            figures.save_sweep_figure(out / "sweep_w_anom.png", rows, "w_anom",
                                      ["f1", "recall", "precision"], "anomaly waiting window")
        else:
            rows = sweep_grace(outcome.trace, labels, [int(v) for v in values])
            columns = ["w_grace", "alarm_points", "false_alarm_episodes",
                       "interventions_per_hour", "tp", "fp", "fn", "tn",
                       "precision", "recall", "f1"]
            figures.save_sweep_figure(out / "sweep_w_grace.png", rows, "w_grace",
                                      ["f1", "interventions_per_hour"], "grace time [s]")
    elif args.axis == "sigma":
        rows = noise_sweep(system, records, intervals, values, seed=args.seed, adaptive=True)
        rows += noise_sweep(system, records, intervals, values, seed=args.seed, adaptive=False)
        columns = ["sigma", "adaptive", "attacks_detected", "tp", "fp", "fn", "tn",
                   "precision", "recall", "f1"]
        figures.save_noise_figure(out / "sweep_noise.png", rows)
    else:
        raise PlantGuardError(f"unknown sweep axis {args.axis!r}")
    csv_path = out / f"sweep_{args.axis}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = load_experiment_manifest(args.manifest)
    results = run_experiment(manifest, args.out)
    f1 = results["detection"]["points"]["f1"]
    print(f"experiment complete: F1={f1:.4f}, "
          f"attacks {results['detection']['attacks_detected']} detected, "
          f"report in {args.out}")
    if args.min_f1 is not None and f1 < args.min_f1:
        return EXIT_METRIC
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    from plantguard.service.app import app_from_config
    app = app_from_config(args.config)
    bind = args.bind or os.environ.get("PLANTGUARD_BIND", "127.0.0.1:8000")
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plantguard",
                                description="adaptive anomaly detection for ICS telemetry")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic two-tank plant dataset")
    s.add_argument("--scenario", choices=["domain-shift", "noise"], default="domain-shift")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--train-duration", type=int, default=None)
    s.add_argument("--test-duration", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train the forecasting network on benign data")
    s.add_argument("--profile", default="synthetic-two-tank")
    s.add_argument("--profile-file")
    s.add_argument("--train", required=True, help="training CSV")
    s.add_argument("--epochs", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--log-every", type=int, default=0)
    s.add_argument("--out", required=True, help="model directory")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("tune-thresholds", help="fit threshold forecasters on validation data")
    s.add_argument("--model", required=True)
    s.add_argument("--validation", required=True)
    s.add_argument("--epochs", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_tune_thresholds)

    s = sub.add_parser("detect", help="replay a stream through the detector")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--attacks", help="dataset manifest JSON with attack_intervals")
    s.add_argument("--w-anom", type=int, default=None)
    s.add_argument("--w-grace", type=int, default=None)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--static-thresholds", action="store_true")
    s.add_argument("--feedback", choices=["none", "oracle"], default="none")
    s.add_argument("--delta-after", type=int, default=60)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("evaluate", help="metrics and figures from a detection run")
    s.add_argument("--detection", required=True, help="directory produced by detect")
    s.add_argument("--attacks", help="dataset manifest JSON with attack_intervals")
    s.add_argument("--delta-after", type=int, default=60)
    s.add_argument("--min-f1", type=float, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="sensitivity sweep over a detector knob")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--attacks")
    s.add_argument("--axis", choices=["w_anom", "w_grace", "sigma"], required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("run", help="run a manifest-driven experiment end to end")
    s.add_argument("--manifest", required=True)
    s.add_argument("--min-f1", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("serve", help="start the replay/feedback HTTP service")
    s.add_argument("--config", required=True, help="service config JSON")
    s.add_argument("--bind", help="host:port (default env PLANTGUARD_BIND or 127.0.0.1:8000)")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PlantGuardError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
