"""Top-level parallel solvers for infinity-norm Lipschitz convex functions."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from parsfm.convex.accel import AccelParams, AccelResult, ball_accel
from parsfm.convex.ball import BallOracleParams
from parsfm.convex.oracles import (
    FirstOrderOracle,
    SmoothedOracle,
    norm,
    project_to_ball,
    regularize,
    smoothing_radius,
)

CONFIG_SCHEMA_VERSION = 1


@dataclass
class SolverConfig:
    """JSON-serializable knobs of the convex pipeline.

    ``L`` and ``R`` override the values taken from the oracle and the solver
    call when set.  ``ball_rounds`` fixes the number of SGD rounds per ball
    oracle call (the minibatch absorbs the sample budget); when ``None`` the
    ``batch_size`` fixes the minibatch instead.
    """

    L: float | None = None
    R: float | None = None
    eps: float | None = None
    rho_override: float | None = None
    C: float = 4.0
    C_prime: float = 64.0
    c0: float = 0.01
    batch_size: int | None = None
    ball_rounds: int | None = 1
    max_samples: int | None = None
    max_outer_iters: int | None = None
    seed: int | None = 0

    def to_dict(self) -> dict:
        return {"schema_version": CONFIG_SCHEMA_VERSION, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"schema_version"}
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    def oracle_factory(self):
        def factory(phi, lam, r):
            return BallOracleParams(phi=phi, lam=lam, r=r, c0=self.c0,
                                    batch_size=self.batch_size, max_rounds=self.ball_rounds,
                                    max_samples=self.max_samples)
        return factory


@dataclass
class ConvexResult:
    x: np.ndarray
    accel: AccelResult | None
    params: AccelParams | None
    rho: float | None
    rounds: int
    queries: int


def solve_linf_unconstrained(oracle: FirstOrderOracle, R: float, eps: float,
                             config: SolverConfig | None = None,
                             rng: np.random.Generator | None = None) -> ConvexResult:
    """Expected ``eps``-minimizer of an infinity-norm ``L``-Lipschitz function.

    The function is given a Euclidean barrier at radius ``R`` around the
    origin, smoothed with width ``rho = eps_opt / (L sqrt(2 log n))`` and
    minimized by :func:`ball_accel` with ball radius ``rho``, radius ``3R``
    and Lipschitz constant ``3L``.  An output outside the radius-``R`` ball
    is mapped back onto it.
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(config.seed) if rng is None else rng
    L = config.L if config.L is not None else oracle.lipschitz
    R = config.R if config.R is not None else R
    rounds0, queries0 = oracle.rounds, oracle.queries
    n = oracle.n
    if eps >= L * R:
        # any point of the radius-R ball is within L R of the optimum
        return ConvexResult(np.zeros(n), None, None, None, 0, 0)

    eps_opt = eps / 2
    reg = regularize(oracle, np.zeros(n), R, "l2")
    rho = config.rho_override or smoothing_radius(eps_opt, L, n)
    F = SmoothedOracle(reg, rho)
    params = AccelParams(L=3 * L, R=3 * R, r=min(rho, 3 * R), eps_opt=eps_opt,
                         C=config.C, C_prime=config.C_prime)
    result = ball_accel(F, params, config.oracle_factory(), rng,
                        max_iterations=config.max_outer_iters)
    x = result.x
    if norm(x, "l2") > R:
        x = project_to_ball(x, np.zeros(n), R, "l2")
    return ConvexResult(x, result, params, rho, oracle.rounds - rounds0,
                        oracle.queries - queries0)


def solve_linf_box_constrained(oracle: FirstOrderOracle, eps: float,
                               config: SolverConfig | None = None,
                               rng: np.random.Generator | None = None) -> ConvexResult:
    """Expected ``eps``-minimizer of ``f`` over the box ``[-1, 1]^n``.

    The box is the unit ball of the infinity norm, so an infinity-norm
    barrier turns the problem into an unconstrained one whose minimizers lie
    within Euclidean radius ``sqrt(n)``.
    """
    n = oracle.n
    reg = regularize(oracle, np.zeros(n), 1.0, "linf")
    res = solve_linf_unconstrained(reg, math.sqrt(n), eps, config, rng)
    if norm(res.x, "linf") > 1.0:
        res.x = project_to_ball(res.x, np.zeros(n), 1.0, "linf")
    return res
