import numpy as np
import pytest

from plantguard.errors import ConfigError, DimensionError, TrainingDivergenceError
from plantguard.data.profiles import swat_profile, wadi_profile
from plantguard.evaluation.experiment import wdnn_config_for
from plantguard.nn.functional import conv1d_forward, dense_forward, maxpool1d
from plantguard.nn.optim import SgdConfig
from plantguard.wdnn import (
    SectionLayout,
    WdnnConfig,
    build_wdnn,
    section_cost,
    section_cost_grad,
    total_cost,
    train_wdnn,
)


def tiny_config(**overrides):
    base = dict(
        m_se=3, m_ac=1, w_in=6, w_out=2, horizon=1,
        layout=SectionLayout([[0, 1], [2]]),
    )
    base.update(overrides)
    return WdnnConfig(**base)


def test_overlapping_groups_rejected():
    with pytest.raises(ConfigError):
        SectionLayout([[0, 1], [1, 2]])


def test_groups_must_cover_all_sensors():
    with pytest.raises(ConfigError):
        WdnnConfig(m_se=4, m_ac=0, w_in=4, w_out=2, horizon=0,
                   layout=SectionLayout([[0, 1], [2]]))


def test_swat_profile_shapes():
    cfg = wdnn_config_for(swat_profile())
    model = build_wdnn(cfg, seed=0)
    x = np.zeros((2, 51, 60))
    outs = model.forward_batch(x)
    assert [o.shape[1] for o in outs] == [2, 4, 3, 4, 11, 1]


def test_wadi_profile_shapes():
    cfg = wdnn_config_for(wadi_profile())
    model = build_wdnn(cfg, seed=0)
    x = np.zeros((1, 123, 50))
    outs = model.forward_batch(x)
    assert [o.shape[1] for o in outs] == [23, 23, 23]


def test_single_section_sums_to_all_sensors():
    cfg = WdnnConfig(m_se=4, m_ac=1, w_in=5, w_out=2, horizon=0,
                     layout=SectionLayout([[0, 1, 2, 3]]), predict_steps=2)
    model = build_wdnn(cfg, seed=1)
    outs = model.forward_batch(np.zeros((1, 5, 5)))
    assert sum(o.shape[1] for o in outs) == cfg.m_se * cfg.predict_steps


def test_forward_shape_contract_and_determinism():
    cfg = tiny_config()
    model = build_wdnn(cfg, seed=3)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 6))
    out1 = model.predict(x)
    out2 = model.predict(x)
    assert [len(v) for v in out1] == [2, 1]
    for a, b in zip(out1, out2):
        assert np.array_equal(a, b)


def test_build_is_deterministic_under_seed():
    p1 = build_wdnn(tiny_config(), seed=11).params()
    p2 = build_wdnn(tiny_config(), seed=11).params()
    p3 = build_wdnn(tiny_config(), seed=12).params()
    assert all(np.array_equal(p1[k], p2[k]) for k in p1)
    assert any(not np.array_equal(p1[k], p3[k]) for k in p1)


def test_forward_rejects_bad_shape():
    model = build_wdnn(tiny_config(), seed=0)
    with pytest.raises(DimensionError):
        model.forward_batch(np.zeros((1, 4, 5)))


def straight_line_forward(model, x):
    """Independent re-evaluation of the nine-layer composition using the
    stateless functional primitives."""
    cfg = model.cfg
    p = model.params()
    flat = x.reshape(-1)

    wide = dense_forward(flat, p["wide.0.weight"], p["wide.0.bias"], activate=True)

    h = dense_forward(flat, p["deep.0.weight"], p["deep.0.bias"], activate=True)
    h = h.reshape(cfg.dl2_channels, cfg.dl2_base)
    h = conv1d_forward(h, p["deep.3.kernels"], p["deep.3.bias"], activate=True)
    h = maxpool1d(h, cfg.pool)
    h = conv1d_forward(h, p["deep.6.kernels"], p["deep.6.bias"], activate=True)
    h = maxpool1d(h, cfg.pool)
    deep = dense_forward(h.reshape(-1), p["deep.10.weight"], p["deep.10.bias"], activate=True)

    agg = dense_forward(np.concatenate([wide, deep]),
                        p["trunk.0.weight"], p["trunk.0.bias"], activate=True)
    outs = []
    for g in range(cfg.layout.n_sections):
        v = agg
        for i in (0, 2, 4):
            v = dense_forward(v, p[f"head{g}.{i}.weight"], p[f"head{g}.{i}.bias"], activate=True)
        outs.append(v)
    return outs


def test_forward_matches_straight_line_oracle():
    cfg = WdnnConfig(m_se=2, m_ac=1, w_in=4, w_out=2, horizon=0,
                     layout=SectionLayout([[0], [1]]), dl2_base=4)
    model = build_wdnn(cfg, seed=21)
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=(3, 4))
        got = model.predict(x)
        want = straight_line_forward(model, x)
        for a, b in zip(got, want):
            assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_section_cost_examples():
    assert section_cost(np.zeros((3, 2)), np.zeros((3, 2))) == 0.0
    assert section_cost(np.array([[1.0, 1.0]]), np.array([[0.0, 0.0]])) == pytest.approx(1.0)
    pred = np.array([[0.1, 0.3], [0.2, 0.0]])
    assert section_cost(pred, np.zeros((2, 2))) == pytest.approx(0.035)


def test_section_cost_brute_force_oracle():
    rng = np.random.default_rng(6)
    for _ in range(200):
        s = int(rng.integers(1, 6))
        m = int(rng.integers(1, 5))
        pred = rng.normal(size=(s, m))
        target = rng.normal(size=(s, m))
        brute = 0.0
        for t in range(s):
            inner = 0.0
            for i in range(m):
                inner += (pred[t, i] - target[t, i]) ** 2
            brute += inner / m
        brute /= s
        assert section_cost(pred, target) == pytest.approx(brute, abs=1e-12)


def test_section_cost_empty_batch():
    with pytest.raises(DimensionError):
        section_cost(np.zeros((0, 2)), np.zeros((0, 2)))


def test_total_cost():
    assert total_cost([0.1, 0.2, 0.3]) == pytest.approx(0.6)
    assert total_cost([0.7]) == pytest.approx(0.7)
    assert total_cost([0.0, 0.0]) == 0.0


def _toy_training_data(rng, n=48):
    cfg = tiny_config()
    x = rng.normal(size=(n, 4, 6))
    y = rng.normal(size=(n, 2, 3)) * 0.1
    return cfg, x, y


def test_train_zero_epochs_leaves_parameters():
    rng = np.random.default_rng(7)
    cfg, x, y = _toy_training_data(rng)
    model = build_wdnn(cfg, seed=2)
    before = {k: v.copy() for k, v in model.params().items()}
    trace = train_wdnn(model, x, y, SgdConfig(0.01, 0.9, 16), epochs=0)
    assert trace == []
    after = model.params()
    assert all(np.array_equal(before[k], after[k]) for k in before)


def test_train_divergence_reports_epoch():
    rng = np.random.default_rng(8)
    cfg, x, y = _toy_training_data(rng)
    model = build_wdnn(cfg, seed=2)
    with pytest.raises(TrainingDivergenceError) as err:
        train_wdnn(model, x, y * 1e6, SgdConfig(50.0, 0.9, 16), epochs=50)
    assert err.value.epoch is not None


def test_training_is_deterministic():
    rng = np.random.default_rng(9)
    cfg, x, y = _toy_training_data(rng)
    runs = []
    for _ in range(2):
        model = build_wdnn(cfg, seed=4)
        train_wdnn(model, x, y, SgdConfig(0.01, 0.9, 16), epochs=3, seed=13)
        runs.append({k: v.copy() for k, v in model.params().items()})
    assert all(np.array_equal(runs[0][k], runs[1][k]) for k in runs[0])


def test_gradient_flows_through_both_branches():
    # end-to-end finite differences on a sample of parameters from each block
    cfg = tiny_config()
    model = build_wdnn(cfg, seed=10)
    rng = np.random.default_rng(14)
    x = rng.normal(size=(2, 4, 6))
    targets = [rng.normal(size=(2, 2)), rng.normal(size=(2, 1))]

    def cost():
        preds = model.forward_batch(x)
        return total_cost([section_cost(p, t) for p, t in zip(preds, targets)])

    preds = model.forward_batch(x)
    grads = model.backward([section_cost_grad(p, t) for p, t in zip(preds, targets)])
    params = model.params()
    for name in params:
        arr = params[name]
        idx = tuple(rng.integers(0, s) for s in arr.shape)
        old = arr[idx]
        h = 1e-5
        arr[idx] = old + h
        up = cost()
        arr[idx] = old - h
        down = cost()
        arr[idx] = old
        fd = (up - down) / (2 * h)
        an = grads[name][idx]
        assert abs(fd - an) <= max(1e-3 * max(abs(fd), abs(an)), 1e-9), name
