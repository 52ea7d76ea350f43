"""First-order oracles, the ball regularizer, and Gaussian smoothing.

All oracles are batched: ``subgradients(X)`` takes a ``(k, n)`` array of
points and answers every row in one parallel round.  Base oracles count
their own rounds and queries; wrappers report the counts of the oracle they
wrap.
"""

from __future__ import annotations

import math

import numpy as np

from parsfm.lovasz import chain_decompose_many
from parsfm.oracle import OracleLedger

NORMS = ("l2", "linf")


def norm(v: np.ndarray, kind: str, axis: int = -1) -> np.ndarray:
    if kind == "l2":
        return np.linalg.norm(v, axis=axis)
    if kind == "linf":
        return np.abs(v).max(axis=axis)
    raise ValueError(f"unknown norm {kind!r}; expected one of {NORMS}")


class FirstOrderOracle:
    """Stochastic subgradient oracle for a convex ``f: R^n -> R``.

    ``lipschitz`` is the Lipschitz constant in the infinity norm and
    ``sigma2`` bounds ``E ||g(x)||_2^2``.
    """

    n: int
    lipschitz: float
    sigma2: float

    def __init__(self):
        self.rounds = 0
        self.queries = 0

    def _charge(self, k: int) -> None:
        self.rounds += 1
        self.queries += k

    def subgradients(self, X: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values_and_subgradients(self, X, rng=None):
        return self.values(X), self.subgradients(X, rng)

    def sample_gradients(self, x, count: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """``count`` gradient samples at ``x`` in one round."""
        if count < 1:
            raise ValueError("count must be at least 1")
        return self.subgradients(np.repeat(np.asarray(x, dtype=float)[None, :], count, axis=0), rng)


class FunctionOracle(FirstOrderOracle):
    """Deterministic oracle from vectorized ``value(X)`` and ``gradient(X)`` callables."""

    def __init__(self, n: int, value, gradient, lipschitz: float, sigma2: float | None = None):
        super().__init__()
        self.n = n
        self._value = value
        self._gradient = gradient
        self.lipschitz = float(lipschitz)
        # ||g||_2 <= ||g||_1 <= L for an L-Lipschitz function in the infinity norm
        self.sigma2 = float(sigma2) if sigma2 is not None else self.lipschitz ** 2

    def subgradients(self, X, rng=None):
        X = np.atleast_2d(X)
        self._charge(len(X))
        return np.asarray(self._gradient(X), dtype=float)

    def values(self, X):
        return np.asarray(self._value(np.atleast_2d(X)), dtype=float)


class LovaszOracle(FirstOrderOracle):
    """``h(y) = scale * f_Lov(slope * y + offset)`` backed by evaluation queries.

    One call on ``k`` points costs one evaluation round of ``k * n`` queries,
    charged to ``ledger``.  Extension values come from the same queries.
    """

    def __init__(self, instance, ledger: OracleLedger, scale: float = 1.0, slope: float = 1.0,
                 offset: np.ndarray | float = 0.0, lipschitz: float | None = None):
        super().__init__()
        self.instance = instance
        self.ledger = ledger
        self.n = instance.n
        self.scale = float(scale)
        self.slope = float(slope)
        self.offset = np.broadcast_to(np.asarray(offset, dtype=float), (self.n,))
        natural = abs(self.scale * self.slope) * 3 * instance.M
        self.lipschitz = float(lipschitz) if lipschitz is not None else natural
        self.sigma2 = self.lipschitz ** 2
        self.samples = 0
        self.chains = None

    def to_cube(self, Y: np.ndarray) -> np.ndarray:
        return self.slope * np.asarray(Y, dtype=float) + self.offset

    def _decompose(self, X):
        X = np.atleast_2d(X)
        Z = self.to_cube(X)
        chains = chain_decompose_many(Z, self.instance, self.ledger)
        self._charge(len(X))
        self.samples += len(X)
        self.chains = chains
        return Z, chains

    def subgradients(self, X, rng=None):
        _, chains = self._decompose(X)
        return (self.scale * self.slope) * chains.subgradients()

    def values(self, X):
        Z, chains = self._decompose(X)
        return self.scale * chains.values(Z)

    def values_and_subgradients(self, X, rng=None):
        Z, chains = self._decompose(X)
        return self.scale * chains.values(Z), (self.scale * self.slope) * chains.subgradients()


class _Wrapper(FirstOrderOracle):
    inner: FirstOrderOracle

    @property
    def rounds(self):
        return self.inner.rounds

    @rounds.setter
    def rounds(self, value):
        pass

    @property
    def queries(self):
        return self.inner.queries

    @queries.setter
    def queries(self, value):
        pass


def _norm_subgradient(D: np.ndarray, kind: str) -> np.ndarray:
    """A subgradient of ``||.||`` at each row of ``D`` (rows assumed non-zero)."""
    if kind == "l2":
        return D / np.linalg.norm(D, axis=1, keepdims=True)
    V = np.zeros_like(D)
    j = np.argmax(np.abs(D), axis=1)
    rows = np.arange(len(D))
    V[rows, j] = np.sign(D[rows, j])
    return V


class RegularizedOracle(_Wrapper):
    """``f(x) + penalty * max(0, ||x - c|| - r)`` with ``penalty = 2L`` by default."""

    def __init__(self, inner: FirstOrderOracle, center, r: float, norm_kind: str = "l2",
                 penalty_scale: float | None = None):
        if r <= 0:
            raise ValueError("regularization radius must be positive")
        if norm_kind not in NORMS:
            raise ValueError(f"unknown norm {norm_kind!r}")
        self.inner = inner
        self.n = inner.n
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (self.n,)).copy()
        self.r = float(r)
        self.norm_kind = norm_kind
        L = inner.lipschitz
        self.penalty = 2 * L if penalty_scale is None else float(penalty_scale)
        self.lipschitz = L + self.penalty
        self.sigma2 = 2 * inner.sigma2 + 2 * self.penalty ** 2

    def excess(self, X):
        D = np.atleast_2d(X) - self.center
        return np.maximum(0.0, norm(D, self.norm_kind) - self.r)

    def _penalty_grad(self, X):
        D = np.atleast_2d(X) - self.center
        outside = norm(D, self.norm_kind) > self.r
        G = np.zeros_like(D)
        if outside.any():
            G[outside] = self.penalty * _norm_subgradient(D[outside], self.norm_kind)
        return G

    def subgradients(self, X, rng=None):
        return self.inner.subgradients(X, rng) + self._penalty_grad(X)

    def values(self, X):
        return self.inner.values(X) + self.penalty * self.excess(X)

    def values_and_subgradients(self, X, rng=None):
        v, g = self.inner.values_and_subgradients(X, rng)
        return v + self.penalty * self.excess(X), g + self._penalty_grad(X)


def regularize(inner: FirstOrderOracle, c, r: float, norm_kind: str = "l2") -> RegularizedOracle:
    """Unconstrained surrogate whose minimizers are the minimizers of ``inner`` over the ball."""
    return RegularizedOracle(inner, c, r, norm_kind)


def project_to_ball(y, c, r: float, norm_kind: str = "l2") -> np.ndarray:
    """Radial map ``c + r (y - c) / ||y - c||`` onto the sphere of radius ``r``.

    Only defined for points outside the open ball.
    """
    y = np.asarray(y, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), y.shape)
    dist = float(norm(y - c, norm_kind))
    if dist < r:
        raise ValueError(f"point at distance {dist} lies inside the open ball of radius {r}")
    return c + (r / dist) * (y - c)


def smoothing_radius(eps_opt: float, lipschitz: float, n: int) -> float:
    """Largest Gaussian width whose distortion on an ``L``-Lipschitz (infinity norm) function is ``eps_opt``."""
    return eps_opt / (lipschitz * math.sqrt(2 * math.log(max(n, 2))))


def distortion_bound(lipschitz: float, rho: float, n: int) -> float:
    return lipschitz * rho * math.sqrt(2 * math.log(max(n, 2)))


class SmoothedOracle(_Wrapper):
    """Gaussian convolution ``E_z f(x + z)``, ``z ~ N(0, rho^2 I)``.

    Gradient samples are inner subgradients at Gaussian perturbations of the
    query point, so they are unbiased for the smoothed function.
    """

    def __init__(self, inner: FirstOrderOracle, rho: float, seed: int | None = None):
        if rho <= 0:
            raise ValueError("smoothing radius must be positive")
        self.inner = inner
        self.n = inner.n
        self.rho = float(rho)
        self.lipschitz = inner.lipschitz
        self.sigma2 = inner.sigma2
        self.rng = np.random.default_rng(seed)

    def sample_gradients(self, x, count: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be at least 1")
        rng = self.rng if rng is None else rng
        x = np.asarray(x, dtype=float)
        Z = rng.standard_normal((count, self.n))
        return self.inner.subgradients(x + self.rho * Z, rng)

    def subgradients(self, X, rng=None):
        rng = self.rng if rng is None else rng
        X = np.atleast_2d(X)
        return self.inner.subgradients(X + self.rho * rng.standard_normal(X.shape), rng)

    def estimate_value(self, x, count: int, rng=None) -> tuple[float, float]:
        """Monte Carlo mean and standard error of the smoothed value at ``x``."""
        rng = self.rng if rng is None else rng
        x = np.asarray(x, dtype=float)
        vals = self.inner.values(x + self.rho * rng.standard_normal((count, self.n)))
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(count))


def smoothed_gradient_sample(oracle: SmoothedOracle, x, count: int,
                             rng: np.random.Generator | None = None) -> np.ndarray:
    """``count`` gradient samples of the smoothed function at ``x``, issued as one round."""
    return oracle.sample_gradients(x, count, rng)
