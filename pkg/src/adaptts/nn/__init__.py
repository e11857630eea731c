from .tensor import (
    Parameter,
    ShapeError,
    Tensor,
    add,
    backward,
    concat_cols,
    conv1d_depthwise,
    embedding,
    gelu,
    layer_norm,
    linear,
    matmul,
    mse,
    mul,
    sub,
    tmean,
    tsum,
)
from .gradcheck import GradCheckError, grad_check

__all__ = [
    "Parameter",
    "ShapeError",
    "Tensor",
    "add",
    "backward",
    "concat_cols",
    "conv1d_depthwise",
    "embedding",
    "gelu",
    "layer_norm",
    "linear",
    "matmul",
    "mse",
    "mul",
    "sub",
    "tmean",
    "tsum",
    "GradCheckError",
    "grad_check",
]
