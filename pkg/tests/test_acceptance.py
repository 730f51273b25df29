"""Acceptance gate: one test per criterion, each printing a PASS line.

The data-dependent criteria run on the bundled synthetic two-tank plant with
pinned seeds. The published-dataset criteria only activate when the
license-gated data has been exported locally (see the environment variables
in the skip reasons); they are skipped otherwise, never silently weakened.
"""

import os
import time

import numpy as np
import pytest

from plantguard.actuators import build_db
from plantguard.adapt import FeedbackDecision, InstanceBatch, TuningConfig, frozen_parameter_check, handle_feedback
from plantguard.data.profiles import swat_profile, synthetic_profile
from plantguard.data.records import load_csv, load_manifest
from plantguard.detector import apply_grace, label_from_exceedances
from plantguard.evaluation.experiment import (
    domain_shift_scenario,
    evaluate_outcome,
    fit_system,
    generate_scenario,
    noise_scenario,
    noise_sweep,
    replay,
    technician_for_scenario,
    wdnn_config_for,
)
from plantguard.evaluation.metrics import interventions_rate, point_metrics
from plantguard.nn.layers import Conv1d, Dense, Flatten, LeakyReLU, MaxPool1d, Sequential
from plantguard.thresholds import ErrorWindowBatch, build_ttnn, median_filter, tune_threshold
from plantguard.wdnn import SectionLayout, WdnnConfig, WdnnModel, section_cost, section_cost_grad, total_cost

FD_STEP = 1e-5
FD_FLOOR = 1e-9   # central-difference noise floor in f64 for O(1) costs


def ok(line: str) -> None:
    print(f"[PASS] {line}")


# --------------------------------------------------------------------------
# shared fixtures: one trained system per scenario, reused across criteria
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def shift_setup():
    profile = synthetic_profile()
    scenario = domain_shift_scenario(7)
    train, validation, test, attacks = generate_scenario(scenario, profile.validation_fraction)
    system, info = fit_system(train, validation, profile, seed=0, wdnn_epochs=40, ttnn_epochs=150)
    return {"profile": profile, "scenario": scenario, "system": system,
            "test": test, "attacks": attacks, "info": info}


@pytest.fixture(scope="module")
def noise_setup():
    profile = synthetic_profile()
    scenario = noise_scenario(11)
    train, validation, test, attacks = generate_scenario(scenario, profile.validation_fraction)
    system, _ = fit_system(train, validation, profile, seed=3, wdnn_epochs=40, ttnn_epochs=150)
    return {"profile": profile, "system": system, "test": test, "attacks": attacks}


# --------------------------------------------------------------------------
# criterion 1: gradient oracle
# --------------------------------------------------------------------------


def _fd_probe(cost, arr, idx, step=FD_STEP):
    old = arr[idx]
    arr[idx] = old + step
    up = cost()
    arr[idx] = old - step
    down = cost()
    arr[idx] = old
    return (up - down) / (2 * step)


def _assert_grad(cost, arr, idx, analytic, tol, context):
    fd = _fd_probe(cost, arr, idx)
    if abs(fd - analytic) <= max(tol * max(abs(fd), abs(analytic)), FD_FLOOR):
        return
    # a probe can straddle an activation kink; a genuinely wrong analytic
    # gradient stays wrong when the step shrinks, a kink artefact vanishes
    fd = _fd_probe(cost, arr, idx, step=FD_STEP / 100)
    assert abs(fd - analytic) <= max(tol * max(abs(fd), abs(analytic)), 1e-7), (context, fd, analytic)


def test_gradient_oracle_layers():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        graph = Sequential([
            Dense(4, 6, rng), LeakyReLU(),
        ]) if seed % 2 else Sequential([
            Conv1d(2, 3, 2, rng), LeakyReLU(), MaxPool1d(2), Flatten(), Dense(9, 2, rng),
        ])
        x = rng.normal(size=(2, 4)) if seed % 2 else rng.normal(size=(2, 2, 7))

        def cost():
            return float(graph.forward(x).sum())

        y = graph.forward(x)
        _, grads = graph.backward(np.ones_like(y))
        params = graph.params()
        for name, arr in params.items():
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            an = grads[name][idx]
            _assert_grad(cost, arr, idx, an, 1e-4, (seed, name))
    ok("gradient oracle, per-layer: 100 seeds within 1e-4")


def test_gradient_oracle_full_graphs():
    started = time.perf_counter()
    for seed in range(20):
        rng = np.random.default_rng(seed)
        cfg = WdnnConfig(m_se=3, m_ac=1, w_in=6, w_out=2, horizon=1,
                         layout=SectionLayout([[0, 1], [2]]))
        model = WdnnModel(cfg, seed=seed)
        x = rng.normal(size=(2, 4, 6))
        targets = [rng.normal(size=(2, 2)), rng.normal(size=(2, 1))]

        def cost():
            preds = model.forward_batch(x)
            return total_cost([section_cost(p, t) for p, t in zip(preds, targets)])

        preds = model.forward_batch(x)
        grads = model.backward([section_cost_grad(p, t) for p, t in zip(preds, targets)])
        params = model.params()
        names = list(params)
        for _ in range(100):
            name = names[rng.integers(0, len(names))]
            arr = params[name]
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            _assert_grad(cost, arr, idx, grads[name][idx], 1e-3, (seed, name))

        ttnn = build_ttnn(12, 4, seed=seed)
        win = np.abs(rng.normal(size=(3, 12)))
        target = rng.normal(size=(3, 1))

        def tcost():
            return float(np.mean((ttnn.forward(win) - target) ** 2))

        pred = ttnn.forward(win)
        _, tgrads = ttnn.backward(2 * (pred - target) / pred.size)
        tparams = ttnn.params()
        tnames = list(tparams)
        for _ in range(100):
            name = tnames[rng.integers(0, len(tnames))]
            arr = tparams[name]
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            _assert_grad(tcost, arr, idx, tgrads[name][idx], 1e-3, ("ttnn", seed, name))
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    ok(f"gradient oracle, full forecaster graphs: 20 seeds x 100 params within 1e-3 in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 2: batch-cost and point-error equivalence with brute force
# --------------------------------------------------------------------------


def test_cost_and_error_brute_force_equivalence():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        s = int(rng.integers(1, 8))
        m = int(rng.integers(1, 6))
        pred = rng.normal(size=(s, m))
        target = rng.normal(size=(s, m))
        brute = sum(
            sum((pred[t, i] - target[t, i]) ** 2 for i in range(m)) / m for t in range(s)
        ) / s
        assert abs(section_cost(pred, target) - brute) <= 1e-12
    from plantguard.detector import mse_section
    for _ in range(1000):
        m = int(rng.integers(1, 12))
        obs = rng.normal(size=m)
        pred = rng.normal(size=m)
        brute = sum((pred[i] - obs[i]) ** 2 for i in range(m)) / m
        assert abs(mse_section(obs, pred) - brute) <= 1e-12
    ok("batch cost and per-point error match double-loop oracles on 1000+1000 instances at 1e-12")


# --------------------------------------------------------------------------
# criterion 3: detection-logic oracle
# --------------------------------------------------------------------------


def test_detection_logic_oracle():
    rng = np.random.default_rng(7)

    def brute_labels(exc, w):
        out = np.zeros(exc.shape[0], dtype=bool)
        for t in range(exc.shape[0]):
            for j in range(exc.shape[1]):
                if t - w >= 0 and exc[t - w: t + 1, j].all():
                    out[t] = True
                    break
        return out

    for w_anom in (1, 2, 3, 30):
        for _ in range(250):
            exc = rng.random((int(rng.integers(1, 120)), int(rng.integers(1, 4)))) < rng.uniform(0.3, 0.95)
            assert np.array_equal(label_from_exceedances(exc, w_anom), brute_labels(exc, w_anom))

    def brute_grace(flags, w):
        out = np.zeros_like(flags)
        i = 0
        while i < flags.size:
            if flags[i]:
                j = i
                while j < flags.size and flags[j]:
                    j += 1
                if j - i >= w:
                    out[i:j] = True
                i = j
            else:
                i += 1
        return out

    for w_grace in (0, 5, 20):
        for _ in range(334):
            flags = rng.random(int(rng.integers(1, 150))) < rng.uniform(0.1, 0.9)
            assert np.array_equal(apply_grace(flags, w_grace), brute_grace(flags, w_grace))
    ok("anomaly condition and grace filtering match run-length scans on 1000 streams each, exact")


# --------------------------------------------------------------------------
# criterion 4: threshold-tuning oracle
# --------------------------------------------------------------------------


def test_threshold_tuning_oracle():
    rng = np.random.default_rng(9)
    ttnn = build_ttnn(12, 4, seed=1)

    def brute_median(series, kernel):
        half = kernel // 2
        return np.array([
            np.median(series[max(0, i - half): min(len(series), i + half + 1)])
            for i in range(len(series))
        ])

    for _ in range(50):
        s = int(rng.integers(2, 16))
        series = np.abs(rng.normal(size=12 + s))
        t_base = float(rng.uniform(0.0, 0.4))
        kernel = int(rng.integers(0, 5)) * 2 + 1
        batch = ErrorWindowBatch(series, w_in=12)
        got, _ = tune_threshold(ttnn, batch, t_base, kernel)

        filtered = brute_median(series, kernel)
        estimates = [
            max(float(ttnn.forward(filtered[i: i + 12][None, :])[0, 0]), 0.0)
            for i in range(s)
        ]
        want = t_base + max(estimates)
        assert abs(got - want) <= 1e-9
        assert got >= t_base
        shifted, _ = tune_threshold(ttnn, batch, t_base + 0.25, kernel)
        assert abs(shifted - (got + 0.25)) <= 1e-12
    ok("threshold tuning matches filter/window/forward/max oracle on 50 series at 1e-9; "
       "offset floor and shift hold")


# --------------------------------------------------------------------------
# criterion 5: median filter oracle
# --------------------------------------------------------------------------


def test_median_filter_oracle():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        kernel = int(rng.integers(0, 12)) * 2 + 1
        x = rng.normal(size=n)
        half = kernel // 2
        want = np.array([
            np.median(sorted(x[max(0, i - half): min(n, i + half + 1)]))
            for i in range(n)
        ])
        assert np.array_equal(median_filter(x, kernel), want)
    ok("median filter matches per-window sort oracle on 1000 series, exact")


# --------------------------------------------------------------------------
# criterion 6: adaptation scope
# --------------------------------------------------------------------------


def test_adaptation_scope():
    cfg = WdnnConfig(m_se=4, m_ac=2, w_in=8, w_out=2, horizon=2,
                     layout=SectionLayout([[0, 1], [2], [3]]))
    model = WdnnModel(cfg, seed=5)
    rng = np.random.default_rng(6)
    batch = InstanceBatch(
        times=np.arange(50, 82),
        inputs=rng.uniform(size=(32, 6, 8)),
        sensor_targets=rng.uniform(size=(32, 4)),
        actuator_states=rng.integers(1, 3, size=(32, 2)),
    )
    db = build_db(np.array([[9, 9]]))
    before = {k: v.copy() for k, v in model.params().items()}
    report = handle_feedback(
        FeedbackDecision(t=60, fa=[True, False, True, False], batch=batch),
        model, db, TuningConfig(epochs=100, learning_rate=0.01),
    )
    after = model.params()
    assert frozen_parameter_check(before, after, model.section_param_names(1))
    assert report.post_cost[1] <= report.pre_cost[1]
    assert db.contains(batch.tuple_at(60))
    size = len(db)
    report2 = handle_feedback(
        FeedbackDecision(t=60, fa=[True, False, False, False], batch=batch),
        model, db, TuningConfig(epochs=1),
    )
    assert not report2.db_inserted and len(db) == size
    ok("adaptation touches only the flagged section head; database update idempotent; "
       f"section cost {report.pre_cost[1]:.4g} -> {report.post_cost[1]:.4g}")


# --------------------------------------------------------------------------
# criterion 7: end-to-end domain-shift scenario
# --------------------------------------------------------------------------


def test_domain_shift_adaptation_reduces_false_alarms(shift_setup):
    started = time.perf_counter()
    system, test, attacks = shift_setup["system"], shift_setup["test"], shift_setup["attacks"]

    # regression-pinned learnability bound for the bundled plant (observed ~0.004)
    assert shift_setup["info"]["validation_cost"] < 0.008

    plain = replay(system, test)
    plain_stats = evaluate_outcome(plain, attacks)

    technician = technician_for_scenario(test.labels, attacks, shift_setup["scenario"]["shift"])
    adapted = replay(system, test, technician=technician)
    adapted_stats = evaluate_outcome(adapted, attacks)

    assert adapted_stats["attacks_detected"] == len(attacks)
    assert plain_stats["attacks_detected"] == len(attacks)
    assert technician.reports, "feedback must actually have run"
    assert adapted_stats["false_alarm_points"] < plain_stats["false_alarm_points"]
    elapsed = time.perf_counter() - started
    assert elapsed < 600
    ok("domain-shift replay: false-alarm points "
       f"{plain_stats['false_alarm_points']} -> {adapted_stats['false_alarm_points']} "
       f"with feedback, both attacks still detected ({elapsed:.0f}s)")


# --------------------------------------------------------------------------
# criterion 8: monotone sensitivity sweeps
# --------------------------------------------------------------------------


def test_sensitivity_sweeps_monotone(shift_setup):
    started = time.perf_counter()
    outcome = replay(shift_setup["system"], shift_setup["test"])
    trace = outcome.trace

    counts = []
    for w_anom in range(27, 40):
        _, reported = trace.relabel(w_anom, trace.w_grace)
        counts.append(int(reported.sum()))
    assert all(a >= b for a, b in zip(counts, counts[1:]))

    grace_counts = []
    for w_grace in range(0, 21):
        _, reported = trace.relabel(trace.w_anom, w_grace)
        grace_counts.append(int(reported.sum()))
    assert all(a >= b for a, b in zip(grace_counts, grace_counts[1:]))
    elapsed = time.perf_counter() - started
    assert elapsed < 600
    ok(f"alarm points non-increasing over waiting window 27..39 ({counts[0]}->{counts[-1]}) "
       f"and grace 0..20 ({grace_counts[0]}->{grace_counts[-1]}) ({elapsed:.0f}s)")


# --------------------------------------------------------------------------
# criterion 9: noise robustness directions
# --------------------------------------------------------------------------


def test_noise_robustness_directions(noise_setup):
    started = time.perf_counter()
    system, test, attacks = noise_setup["system"], noise_setup["test"], noise_setup["attacks"]
    sigmas = [0.0, 1.0, 5.0]
    adaptive = noise_sweep(system, test, attacks, sigmas, seed=3, adaptive=True)
    static = noise_sweep(system, test, attacks, sigmas, seed=3, adaptive=False)

    recalls = [row["recall"] for row in adaptive]
    assert recalls[0] >= recalls[1] >= recalls[2]

    adaptive_drop = adaptive[0]["f1"] - adaptive[2]["f1"]
    static_drop = static[0]["f1"] - static[2]["f1"]
    assert adaptive_drop < static_drop
    elapsed = time.perf_counter() - started
    assert elapsed < 900
    ok("noise sweep: recall non-increasing "
       f"({', '.join(f'{r:.3f}' for r in recalls)}); adaptive F1 drop {adaptive_drop:.3f} "
       f"< static-threshold drop {static_drop:.3f} ({elapsed:.0f}s)")


# --------------------------------------------------------------------------
# criterion 10: adaptation latency on the full-size profile
# --------------------------------------------------------------------------


def test_adaptation_latency_full_profile():
    profile = swat_profile()
    model = WdnnModel(wdnn_config_for(profile), seed=0)
    rng = np.random.default_rng(0)
    batch = InstanceBatch(
        times=np.arange(200, 232),
        inputs=rng.uniform(size=(32, 51, 60)),
        sensor_targets=rng.uniform(size=(32, 25)),
        actuator_states=rng.integers(0, 3, size=(32, 26)),
    )
    db = build_db(rng.integers(0, 3, size=(40, 26)))
    decision = FeedbackDecision(t=210, fa=[True] + [g == 2 for g in range(6)], batch=batch)
    started = time.perf_counter()
    report = handle_feedback(decision, model, db, TuningConfig(epochs=100, learning_rate=0.01))
    elapsed = time.perf_counter() - started
    assert report.epochs == 100
    assert elapsed < 2.0
    ok(f"100-epoch fine-tune of one section on a batch of 32 took {elapsed * 1e3:.0f} ms (< 2 s)")


# --------------------------------------------------------------------------
# criterion 11: metrics oracle and interventions arithmetic
# --------------------------------------------------------------------------


def test_metrics_oracle_and_interventions_arithmetic():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        labels = rng.random(n) < 0.35
        preds = rng.random(n) < 0.5
        pm = point_metrics(labels, preds)
        tp = int(np.sum(labels & preds))
        fp = int(np.sum(~labels & preds))
        fn = int(np.sum(labels & ~preds))
        tn = int(np.sum(~labels & ~preds))
        assert (pm.tp, pm.fp, pm.fn, pm.tn) == (tp, fp, fn, tn)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        assert pm.precision == p and pm.recall == r and pm.f1 == f
    rate = interventions_rate(645, 4 * 24 * 3600)
    assert rate == pytest.approx(6.6, abs=0.15)
    ok(f"point metrics match enumeration on 1000 cases, exact; 645 alarms / 4 days = {rate:.2f}/h ~ 6.6/h")


# --------------------------------------------------------------------------
# license-gated criteria on the published datasets (optional)
# --------------------------------------------------------------------------


def _gated_dataset_run(env_var, f1_expect, attacks_expect, db_expect):
    root = os.environ.get(env_var)
    if not root:
        pytest.skip(f"{env_var} not set; the dataset is license-gated and not bundled")
    profile = swat_profile() if "SWAT" in env_var else None
    from plantguard.data.profiles import wadi_profile
    if profile is None:
        profile = wadi_profile()
    train = load_csv(os.path.join(root, "train.csv"), profile)
    validation = load_csv(os.path.join(root, "validation.csv"), profile)
    test = load_csv(os.path.join(root, "test.csv"), profile)
    manifest = load_manifest(os.path.join(root, "manifest.json"))
    intervals = [tuple(iv) for iv in manifest["attack_intervals"]]

    db = build_db(train.actuators)
    assert abs(len(db) - db_expect) <= 0.05 * db_expect

    system, _ = fit_system(train, validation, profile, seed=0,
                           wdnn_epochs=int(os.environ.get("PLANTGUARD_DATASET_EPOCHS", "40")))
    technician = None
    if test.labels is not None:
        from plantguard.data.synthetic import ShiftSpec
        technician = technician_for_scenario(test.labels, intervals, ShiftSpec())
    outcome = replay(system, test, technician=technician)
    stats = evaluate_outcome(outcome, intervals)
    assert abs(stats["points"]["f1"] - f1_expect) <= 0.03
    assert abs(stats["attacks_detected"] - attacks_expect) <= 2
    ok(f"{env_var}: F1 {stats['points']['f1']:.4f} within 0.03 of {f1_expect}, "
       f"{stats['attacks_detected']} attacks within 2 of {attacks_expect}")


@pytest.mark.slow
def test_published_swat_headline_numbers():
    _gated_dataset_run("PLANTGUARD_SWAT_DIR", 0.8892, 33, 146)


@pytest.mark.slow
def test_published_wadi_headline_numbers():
    _gated_dataset_run("PLANTGUARD_WADI_DIR", 0.8036, 14, 2001)
