"""Stochastic gradient descent with momentum."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError, ValidationError


@dataclass
class SgdmState:
    """Velocity buffers plus the two hyperparameters.

    Velocities are created lazily as zeros, mirroring parameter shapes.
    """

    learning_rate: float
    momentum: float
    velocity: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError(f"momentum must lie in [0, 1), got {self.momentum}")


def sgdm_update(params: dict, grads: dict, state: SgdmState):
    """Elementwise ``v <- mu*v - alpha*g`` then ``theta <- theta + v``, in place.

    A non-finite gradient aborts with diagnostics naming the block.
    """
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValidationError(
                f"gradient shape {g.shape} does not match parameter {name!r} {theta.shape}")
        if not np.all(np.isfinite(g)):
            bad = int(np.size(g) - np.isfinite(g).sum())
            raise TrainingError(
                f"non-finite gradient in block {name!r}: {bad} bad entries, "
                f"|g|_max={np.nanmax(np.abs(g)):.3e}")
        v = state.velocity.get(name)
        if v is None:
            v = state.velocity[name] = np.zeros_like(theta)
        v *= state.momentum
        v -= state.learning_rate * g
        theta += v
    return params, state
