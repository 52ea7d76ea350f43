"""Ball optimization oracle by projected stochastic subgradient descent.

Approximately minimizes ``G(x) = F(x) + (lam/2) ||x - center||^2`` over the
Euclidean ball of radius ``r`` around ``center``, where ``F`` is a Gaussian
smoothed function accessed through gradient samples.  ``G`` is
``lam``-strongly convex, so the ``2 / (lam (t + 2))`` step schedule with
``(t + 1)``-weighted iterate averaging gives expected excess
``O(sigma^2 / (lam T))`` after ``T`` samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BallOracleParams:
    """Accuracy ``phi``, prox weight ``lam`` and radius ``r`` of one oracle call.

    The sample budget is ``T = ceil(c0 * sigma2 / (phi * lam))``, capped at
    ``max_samples``.  Samples are spent in minibatches; each minibatch is one
    parallel round.  ``max_rounds`` fixes the number of rounds (the batch is
    sized to fit), otherwise ``batch_size`` fixes the batch (default 1).
    """

    phi: float
    lam: float
    r: float
    c0: float = 4.0
    batch_size: int | None = None
    max_rounds: int | None = None
    max_samples: int | None = None

    def __post_init__(self):
        for name in ("phi", "lam", "r", "c0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ball oracle parameter {name} must be positive")

    def sample_budget(self, sigma2: float) -> int:
        T = math.ceil(self.c0 * sigma2 / (self.phi * self.lam))
        if self.max_samples is not None:
            T = min(T, self.max_samples)
        return max(T, 1)

    def schedule(self, sigma2: float) -> tuple[int, int]:
        """(steps, batch) with ``steps * batch >= T``."""
        T = self.sample_budget(sigma2)
        if self.max_rounds is not None:
            steps = min(self.max_rounds, T)
            return steps, math.ceil(T / steps)
        batch = min(self.batch_size or 1, T)
        return math.ceil(T / batch), batch


def _project_l2(x, center, r):
    d = x - center
    dist = np.linalg.norm(d)
    if dist > r:
        return center + (r / dist) * d
    return x


def ball_optimize(F, center, params: BallOracleParams,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """One call of the ball optimization oracle; returns the averaged iterate."""
    rng = np.random.default_rng() if rng is None else rng
    center = np.asarray(center, dtype=float)
    lam, r = params.lam, params.r
    steps, batch = params.schedule(F.sigma2)
    x = center.copy()
    acc = np.zeros_like(center)
    wsum = 0.0
    for t in range(steps):
        g = F.sample_gradients(x, batch, rng).mean(axis=0) + lam * (x - center)
        x = _project_l2(x - (2.0 / (lam * (t + 2))) * g, center, r)
        acc += (t + 1) * x
        wsum += t + 1
    return acc / wsum
