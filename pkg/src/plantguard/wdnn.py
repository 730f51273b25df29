"""Wide-and-deep forecasting network for sensor states.

One flattened window of sensor+actuator history feeds two branches: a single
dense "wide" layer that memorises seen feature combinations, and a "deep"
chain (dense enrichment, two conv/pool stages, dense) that generalises to
unseen ones. Both meet in an aggregation layer, then split into per-PLC
output sections, each predicting its own group of sensors so that sections
can be thresholded and fine-tuned independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantguard.errors import ConfigError, DimensionError, NumericInputError, TrainingDivergenceError
from plantguard.nn.layers import Conv1d, Dense, Flatten, LeakyReLU, MaxPool1d, Reshape, Sequential
from plantguard.nn.optim import SgdConfig, SgdOptimizer


def _round_width(x: float) -> int:
    # round-half-up, never below one neuron
    return max(1, int(np.floor(x + 0.5)))


@dataclass
class SectionLayout:
    """Disjoint sensor-index groups, one per output section (PLC)."""

    groups: list

    def __post_init__(self):
        seen: set[int] = set()
        for g, idx in enumerate(self.groups):
            if len(idx) == 0:
                raise ConfigError(f"section {g} is empty")
            overlap = seen.intersection(idx)
            if overlap:
                raise ConfigError(f"section {g} overlaps earlier sections on sensors {sorted(overlap)}")
            seen.update(idx)
        self._covered = seen

    @property
    def n_sections(self) -> int:
        return len(self.groups)

    def validate_cover(self, m_se: int) -> None:
        if self._covered != set(range(m_se)):
            raise ConfigError(
                f"sensor groups must cover exactly indices 0..{m_se - 1}, got {sorted(self._covered)}"
            )

    def sizes(self) -> list:
        return [len(g) for g in self.groups]


@dataclass
class WdnnConfig:
    m_se: int
    m_ac: int
    w_in: int
    w_out: int
    horizon: int
    layout: SectionLayout
    predict_steps: int = 1
    dl2_base: int | None = None   # enrichment width base; defaults to w_in
    dl2_channels: int = 3
    dl4_width: int = 80
    cl1_kernels: int = 64
    cl1_size: int = 2
    cl2_kernels: int = 128
    cl2_size: int = 2
    pool: int = 2

    def __post_init__(self):
        if self.m_se < 1 or self.m_ac < 0:
            raise ConfigError("need at least one sensor and a non-negative actuator count")
        if self.w_in < 1 or self.w_out < 1 or self.horizon < 0:
            raise ConfigError("w_in, w_out must be >= 1 and horizon >= 0")
        if not 1 <= self.predict_steps <= self.w_out:
            raise ConfigError(f"predict_steps must lie in [1, w_out], got {self.predict_steps}")
        if self.dl2_base is None:
            self.dl2_base = self.w_in
        self.layout.validate_cover(self.m_se)
        # deep-branch geometry must survive both conv/pool stages
        t = self.dl2_base
        for k in (self.cl1_size, self.cl2_size):
            if t < k:
                raise ConfigError(f"deep branch time axis {t} shorter than kernel {k}")
            t = -(-(t - k + 1) // self.pool)

    @property
    def n_features(self) -> int:
        return self.m_se + self.m_ac

    def section_widths(self, g: int) -> tuple:
        m_g = len(self.layout.groups[g])
        return (
            _round_width(2.25 * m_g),
            _round_width(1.5 * m_g),
            m_g * self.predict_steps,
        )


class WdnnModel:
    """Feature extractor (wide + deep branches, aggregation) plus G section heads."""

    def __init__(self, cfg: WdnnConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        rng = np.random.default_rng(seed)
        flat_in = cfg.n_features * cfg.w_in
        dl2_width = cfg.dl2_channels * cfg.dl2_base

        self.wide = Sequential([Dense(flat_in, cfg.w_out, rng), LeakyReLU()])
        self.deep = Sequential([
            Dense(flat_in, dl2_width, rng),
            LeakyReLU(),
            Reshape(cfg.dl2_channels, cfg.dl2_base),
            Conv1d(cfg.dl2_channels, cfg.cl1_kernels, cfg.cl1_size, rng),
            LeakyReLU(),
            MaxPool1d(cfg.pool),
            Conv1d(cfg.cl1_kernels, cfg.cl2_kernels, cfg.cl2_size, rng),
            LeakyReLU(),
            MaxPool1d(cfg.pool),
            Flatten(),
        ])
        # probe the deep output width so DL3 can be sized without hand geometry
        probe = np.zeros((1, flat_in))
        deep_width = self.deep.forward(probe).shape[1]
        self.deep.layers.append(Dense(deep_width, cfg.w_out, rng))
        self.deep.layers.append(LeakyReLU())
        self.deep._caches = None

        self.trunk = Sequential([Dense(2 * cfg.w_out, cfg.dl4_width, rng), LeakyReLU()])
        self.heads = []
        for g in range(cfg.layout.n_sections):
            dl5, dl6, dl7 = cfg.section_widths(g)
            self.heads.append(Sequential([
                Dense(cfg.dl4_width, dl5, rng), LeakyReLU(),
                Dense(dl5, dl6, rng), LeakyReLU(),
                Dense(dl6, dl7, rng), LeakyReLU(),
            ]))

    # -- parameter registry -------------------------------------------------

    def params(self) -> dict:
        out = {}
        for prefix, seq in self._blocks():
            for name, arr in seq.params().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def _blocks(self):
        yield "wide", self.wide
        yield "deep", self.deep
        yield "trunk", self.trunk
        for g, head in enumerate(self.heads):
            yield f"head{g}", head

    def section_param_names(self, g: int) -> list:
        prefix = f"head{g}."
        return [name for name in self.params() if name.startswith(prefix)]

    # -- forward / backward --------------------------------------------------

    def _check_input(self, x: np.ndarray) -> None:
        want = (self.cfg.n_features, self.cfg.w_in)
        if x.shape[1:] != want:
            raise DimensionError(f"input shape {x.shape[1:]} != {want}")

    def forward_features(self, x: np.ndarray) -> np.ndarray:
        """Batch x features x w_in -> aggregation-layer output (batch x dl4)."""
        self._check_input(x)
        flat = x.reshape(x.shape[0], -1)
        wide_out = self.wide.forward(flat)
        deep_out = self.deep.forward(flat)
        return self.trunk.forward(np.concatenate([wide_out, deep_out], axis=1))

    def forward_batch(self, x: np.ndarray) -> list:
        feat = self.forward_features(x)
        return [head.forward(feat) for head in self.heads]

    def predict(self, x: np.ndarray) -> list:
        """Single instance (features x w_in) -> per-section prediction vectors."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"expected a 2-d instance, got shape {x.shape}")
        return [y[0] for y in self.forward_batch(x[None, :, :])]

    def backward(self, d_sections: list) -> dict:
        """Gradients for every registered parameter given per-head output grads."""
        grads = {}
        d_feat = None
        for g, head in enumerate(self.heads):
            d_in, head_grads = head.backward(d_sections[g])
            d_feat = d_in if d_feat is None else d_feat + d_in
            for name, arr in head_grads.items():
                grads[f"head{g}.{name}"] = arr
        d_concat, trunk_grads = self.trunk.backward(d_feat)
        for name, arr in trunk_grads.items():
            grads[f"trunk.{name}"] = arr
        w = self.cfg.w_out
        _, wide_grads = self.wide.backward(d_concat[:, :w])
        _, deep_grads = self.deep.backward(d_concat[:, w:])
        for name, arr in wide_grads.items():
            grads[f"wide.{name}"] = arr
        for name, arr in deep_grads.items():
            grads[f"deep.{name}"] = arr
        return grads


def build_wdnn(cfg: WdnnConfig, seed: int = 0) -> WdnnModel:
    return WdnnModel(cfg, seed=seed)


# -- cost --------------------------------------------------------------------

def section_cost(pred_batch: np.ndarray, target_batch: np.ndarray) -> float:
    """Batch-mean of the per-instance mean squared error over one section.

    With predict_steps > 1 the inner mean runs over every predicted entry
    (all steps), keeping the cost a per-value average.
    """
    pred_batch = np.asarray(pred_batch, dtype=np.float64)
    target_batch = np.asarray(target_batch, dtype=np.float64)
    if pred_batch.shape != target_batch.shape or pred_batch.ndim != 2:
        raise DimensionError(
            f"section batch shapes differ: {pred_batch.shape} vs {target_batch.shape}"
        )
    if pred_batch.shape[0] == 0:
        raise DimensionError("empty batch")
    return float(np.mean((pred_batch - target_batch) ** 2, axis=1).mean())


def section_cost_grad(pred_batch: np.ndarray, target_batch: np.ndarray) -> np.ndarray:
    s, width = pred_batch.shape
    return 2.0 * (pred_batch - target_batch) / (s * width)


def total_cost(section_costs) -> float:
    return float(np.sum(section_costs))


# -- training ------------------------------------------------------------------

def section_targets(targets: np.ndarray, layout: SectionLayout, predict_steps: int) -> list:
    """Slices window targets (batch x steps x m_se) into per-section flat arrays,
    step-major so the first m_g entries belong to the first predicted step."""
    out = []
    for idx in layout.groups:
        sect = targets[:, :predict_steps, idx]
        out.append(sect.reshape(sect.shape[0], -1))
    return out


def train_wdnn(
    model: WdnnModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: SgdConfig,
    epochs: int,
    seed: int = 0,
    log_every: int = 0,
) -> list:
    """Minibatch SGD on the summed section costs; returns per-epoch mean cost."""
    if inputs.shape[0] != targets.shape[0] or inputs.shape[0] == 0:
        raise DimensionError("inputs and targets must be non-empty and aligned")
    layout = model.cfg.layout
    steps = model.cfg.predict_steps
    y_sections = section_targets(targets, layout, steps)
    params = model.params()
    opt = SgdOptimizer(cfg)
    order_rng = np.random.default_rng(seed)
    n = inputs.shape[0]
    trace = []
    for epoch in range(epochs):
        order = order_rng.permutation(n)
        epoch_cost = 0.0
        batches = 0
        for lo in range(0, n, cfg.batch_size):
            sel = order[lo : lo + cfg.batch_size]
            try:
                preds = model.forward_batch(inputs[sel])
            except NumericInputError:
                raise TrainingDivergenceError(
                    f"activations overflowed at epoch {epoch}", epoch=epoch
                ) from None
            cost = 0.0
            d_sections = []
            for g, pred in enumerate(preds):
                target = y_sections[g][sel]
                cost += section_cost(pred, target)
                d_sections.append(section_cost_grad(pred, target))
            if not np.isfinite(cost):
                raise TrainingDivergenceError(f"cost diverged at epoch {epoch}", epoch=epoch)
            grads = model.backward(d_sections)
            opt.step(params, grads)
            epoch_cost += cost
            batches += 1
        trace.append(epoch_cost / batches)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}/{epochs}  cost {trace[-1]:.6g}")
    return trace


def evaluate_cost(model: WdnnModel, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Total cost over a dataset without touching parameters."""
    y_sections = section_targets(targets, model.cfg.layout, model.cfg.predict_steps)
    preds = model.forward_batch(inputs)
    return total_cost([section_cost(p, y) for p, y in zip(preds, y_sections)])
