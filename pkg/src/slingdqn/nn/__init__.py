from slingdqn.nn.layers import (
    LayerSpec,
    ShapeError,
    backward,
    cast_params,
    conv,
    copy_params,
    dense,
    dueling_split,
    flatten,
    forward,
    infer_shapes,
    init_params,
    relu,
)
from slingdqn.nn.optim import OptimizerState, apply_update, init_optimizer
from slingdqn.nn.gradcheck import GradCheckResult, grad_check

__all__ = [
    "LayerSpec",
    "ShapeError",
    "backward",
    "cast_params",
    "conv",
    "copy_params",
    "dense",
    "dueling_split",
    "flatten",
    "forward",
    "infer_shapes",
    "init_params",
    "relu",
    "OptimizerState",
    "apply_update",
    "init_optimizer",
    "GradCheckResult",
    "grad_check",
]
