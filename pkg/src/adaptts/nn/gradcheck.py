"""Finite-difference verification of analytic gradients.

Central differences are unreliable in float32, so callers are expected to
build the checked function over float64 tensors.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward


class GradCheckError(RuntimeError):
    """A gradient check could not be evaluated (non-finite value)."""


def grad_check(
    fn: Callable[..., Tensor],
    wrt: Tensor | Sequence[Tensor],
    step: float = 1e-4,
) -> float:
    """Compare analytic gradients of ``fn`` against central differences.

    ``fn`` is invoked as ``fn(*wrt)`` and must return a scalar tensor; it
    must be pure and deterministic, since it is re-evaluated under
    coordinate perturbations of the ``wrt`` tensors. Returns the maximum
    over all coordinates of ``|analytic - numeric| / (|numeric| + 1e-8)``.
    """
    tensors = [wrt] if isinstance(wrt, Tensor) else list(wrt)
    for t in tensors:
        t.requires_grad = True
        t.grad = None

    out = fn(*tensors)
    if out.data.size != 1:
        raise GradCheckError(f"checked function must return a scalar, got {out.shape}")
    if not np.isfinite(out.data):
        raise GradCheckError("checked function returned a non-finite value")
    backward(out)
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors
    ]

    worst = 0.0
    for ti, t in enumerate(tensors):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = float(fn(*tensors).data)
            flat[i] = orig - step
            lo = float(fn(*tensors).data)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise GradCheckError(
                    f"non-finite value while perturbing tensor {ti} coordinate {i}"
                )
            numeric = (hi - lo) / (2.0 * step)
            a = analytic[ti].reshape(-1)[i]
            rel = abs(a - numeric) / (abs(numeric) + 1e-8)
            if rel > worst:
                worst = rel
    return worst
