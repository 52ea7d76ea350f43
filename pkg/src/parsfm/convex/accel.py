"""Accelerated proximal-point outer loop driven by a ball optimization oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from parsfm.convex.ball import BallOracleParams, ball_optimize


@dataclass(frozen=True)
class AccelParams:
    """Problem scale and constants of the outer loop.

    ``L`` is the Euclidean Lipschitz constant of ``F``, ``R`` bounds the norm
    of a minimizer, ``r`` is the ball radius and ``eps_opt`` the target
    accuracy.  ``C`` is the universal constant of the iteration budget and
    the prox-weight bracket; ``C_prime`` sets the oracle accuracy
    ``phi = lam r^2 / C_prime``.
    """

    L: float
    R: float
    r: float
    eps_opt: float
    C: float = 4.0
    C_prime: float = 64.0

    def __post_init__(self):
        if not (0 < self.r <= self.R):
            raise ValueError(f"ball radius r={self.r} must lie in (0, R={self.R}]")
        if not (0 < self.eps_opt <= self.L * self.R):
            raise ValueError(f"eps_opt={self.eps_opt} must lie in (0, L*R={self.L * self.R}]")
        if self.C <= 0 or self.C_prime <= 0:
            raise ValueError("constants C and C_prime must be positive")

    @property
    def kappa(self) -> float:
        return self.L * self.R / self.eps_opt

    @property
    def log_kappa(self) -> float:
        # kappa can be ~1 when eps_opt ~ L R; keep the iteration budget non-trivial
        return max(math.log(self.kappa), 1.0)

    @property
    def K(self) -> float:
        return (self.R / self.r) ** (2.0 / 3.0)

    @property
    def lambda_star(self) -> float:
        return self.eps_opt * self.K ** 2 * self.log_kappa ** 2 / self.R ** 2

    @property
    def lambda_bounds(self) -> tuple[float, float]:
        return self.lambda_star / self.C, self.C * self.L / self.eps_opt

    @property
    def max_iterations(self) -> int:
        return math.ceil(self.C * self.K * self.log_kappa)

    @property
    def max_calls_per_iteration(self) -> int:
        return max(1, math.ceil(self.C * math.log(self.R * self.kappa / self.r) ** 2))

    def phi(self, lam: float) -> float:
        return lam * self.r ** 2 / self.C_prime


@dataclass
class AccelResult:
    x: np.ndarray
    iterations: int
    ball_calls: int
    A: float
    certified: bool
    lambdas: list = field(default_factory=list)
    calls_per_iteration: list = field(default_factory=list)


OracleFactory = Callable[[float, float, float], BallOracleParams]


def default_oracle_factory(phi: float, lam: float, r: float) -> BallOracleParams:
    return BallOracleParams(phi=phi, lam=lam, r=r)


def ball_accel(F, params: AccelParams, oracle_factory: OracleFactory = default_oracle_factory,
               rng: np.random.Generator | None = None, x0=None,
               max_iterations: int | None = None, stop_on_certificate: bool = True) -> AccelResult:
    """Minimize ``F`` with accelerated ball-constrained proximal steps.

    Each iteration forms ``a`` from ``a^2 = (A + a) / lam``, queries the
    ball oracle at ``y = (A x + a v) / (A + a)`` and moves
    ``v <- v - a lam (y - x_new)``.  The prox weight ``lam`` is doubled or
    halved (within the allowed bracket) until the step length lands in
    ``[r/2, r)``.  The loop stops after the iteration budget, or earlier once
    ``A >= R^2 / eps_opt``, where the accelerated bound ``R^2 / (2A)`` is
    below ``eps_opt / 2``.
    """
    rng = np.random.default_rng() if rng is None else rng
    n = F.n
    lam_lo, lam_hi = params.lambda_bounds
    r = params.r
    budget = params.max_iterations
    if max_iterations is not None:
        budget = min(budget, max_iterations)
    max_calls = params.max_calls_per_iteration
    target_A = params.R ** 2 / params.eps_opt

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    v = x.copy()
    A = 0.0
    lam = min(max(params.L / r, lam_lo), lam_hi)
    result = AccelResult(x=x, iterations=0, ball_calls=0, A=0.0, certified=False)

    for _ in range(budget):
        calls = 0
        last = 0
        while True:
            a = (1.0 + math.sqrt(1.0 + 4.0 * lam * A)) / (2.0 * lam)
            y = (A * x + a * v) / (A + a)
            x_new = ball_optimize(F, y, oracle_factory(params.phi(lam), lam, r), rng)
            calls += 1
            step = float(np.linalg.norm(x_new - y))
            if calls >= max_calls:
                break
            if step >= r * (1 - 1e-9) and lam < lam_hi:
                move = 1
            elif step < r / 2 and lam > lam_lo:
                move = -1
            else:
                break
            if last and move != last:
                break
            lam = min(max(lam * 2.0 ** move, lam_lo), lam_hi)
            last = move
        v = v - a * lam * (y - x_new)
        x = x_new
        A += a
        result.iterations += 1
        result.ball_calls += calls
        result.calls_per_iteration.append(calls)
        result.lambdas.append(lam)
        if stop_on_certificate and A >= target_A:
            result.certified = True
            break

    result.x = x
    result.A = A
    return result
