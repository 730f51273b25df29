from plantguard.nn.functional import conv1d_forward, dense_forward, leaky_relu, maxpool1d, mse
from plantguard.nn.layers import (
    Conv1d,
    Dense,
    Flatten,
    Layer,
    LeakyReLU,
    MaxPool1d,
    Reshape,
    Sequential,
)
from plantguard.nn.optim import SgdConfig, SgdOptimizer, sgd_step
from plantguard.nn.checkpoint import assign_params, load_params, save_params

__all__ = [
    "leaky_relu", "dense_forward", "conv1d_forward", "maxpool1d", "mse",
    "Layer", "Dense", "Conv1d", "MaxPool1d", "LeakyReLU", "Reshape", "Flatten",
    "Sequential", "SgdConfig", "SgdOptimizer", "sgd_step",
    "save_params", "load_params", "assign_params",
]
