"""Independent reference computations for the convex tests."""

from itertools import combinations

import numpy as np

from parsfm.convex import FunctionOracle


class PiecewiseLinear:
    """``f(x) = max_i (a_i . x + b_i)``."""

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def __call__(self, X):
        return (np.atleast_2d(X) @ self.A.T + self.b).max(axis=1)

    def gradient(self, X):
        return self.A[np.argmax(np.atleast_2d(X) @ self.A.T + self.b, axis=1)]

    def lipschitz(self, norm_kind):
        # Lipschitz in a norm is the largest dual norm of a piece gradient
        dual = np.abs(self.A).sum(axis=1) if norm_kind == "linf" else np.linalg.norm(self.A, axis=1)
        return float(dual.max())

    def oracle(self, norm_kind="linf"):
        return FunctionOracle(self.A.shape[1], self, self.gradient, self.lipschitz(norm_kind))


def random_pwl(rng, pieces=None, n=2):
    k = int(rng.integers(3, 7)) if pieces is None else pieces
    return PiecewiseLinear(rng.uniform(-1, 1, size=(k, n)), rng.uniform(-1, 1, size=k))


def _solve2(M, v):
    if abs(np.linalg.det(M)) < 1e-12:
        return None
    return np.linalg.solve(M, v)


def exact_ball_min(f: PiecewiseLinear, c, r, norm_kind):
    """Minimum of a 2-D piecewise-linear function over a ball by vertex enumeration.

    Candidates are every point where three constraints of the epigraph LP
    can be simultaneously active (piece/piece/piece, piece/piece/boundary,
    piece/boundary) plus the center.
    """
    A, b = f.A, f.b
    c = np.asarray(c, dtype=float)
    cands = [c]
    for i, j, k in combinations(range(len(b)), 3):
        x = _solve2(np.array([A[i] - A[j], A[i] - A[k]]), np.array([b[j] - b[i], b[k] - b[i]]))
        if x is not None:
            cands.append(x)
    if norm_kind == "linf":
        lines = [(np.array([1.0, 0.0]), c[0] + s * r) for s in (-1, 1)]
        lines += [(np.array([0.0, 1.0]), c[1] + s * r) for s in (-1, 1)]
        for s0 in (-1, 1):
            for s1 in (-1, 1):
                cands.append(c + r * np.array([s0, s1]))
        for i, j in combinations(range(len(b)), 2):
            for normal, off in lines:
                x = _solve2(np.array([A[i] - A[j], normal]), np.array([b[j] - b[i], off]))
                if x is not None:
                    cands.append(x)
    else:
        for i in range(len(b)):
            na = np.linalg.norm(A[i])
            if na > 0:
                cands.append(c - r * A[i] / na)
        for i, j in combinations(range(len(b)), 2):
            d = A[i] - A[j]
            nd = np.linalg.norm(d)
            if nd == 0:
                continue
            # line d . x = b_j - b_i intersected with the circle around c
            t0 = (b[j] - b[i] - d @ c) / nd
            if abs(t0) <= r:
                u, w = d / nd, np.array([-d[1], d[0]]) / nd
                h = np.sqrt(max(r * r - t0 * t0, 0.0))
                cands += [c + t0 * u + h * w, c + t0 * u - h * w]
    P = np.array(cands)
    D = P - c
    dist = np.abs(D).max(axis=1) if norm_kind == "linf" else np.linalg.norm(D, axis=1)
    P = P[dist <= r * (1 + 1e-12) + 1e-12]
    vals = f(P)
    return float(vals.min()), P[int(np.argmin(vals))]


def grid_min(fun, lo, hi, step, chunk=500):
    """Minimum of a vectorized 2-D function over a square grid."""
    xs = np.arange(lo[0], hi[0] + step / 2, step)
    ys = np.arange(lo[1], hi[1] + step / 2, step)
    best = np.inf
    for start in range(0, len(xs), chunk):
        gx, gy = np.meshgrid(xs[start:start + chunk], ys, indexing="ij")
        vals = fun(np.column_stack([gx.ravel(), gy.ravel()]))
        best = min(best, float(vals.min()))
    return best


def linf_oracle(n, center=None, weight=1.0):
    """``weight * ||x - center||_inf`` with a subgradient, ``weight``-Lipschitz in the infinity norm."""
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def value(X):
        return weight * np.abs(np.atleast_2d(X) - c).max(axis=1)

    def grad(X):
        D = np.atleast_2d(X) - c
        j = np.argmax(np.abs(D), axis=1)
        G = np.zeros_like(D)
        G[np.arange(len(D)), j] = weight * np.sign(D[np.arange(len(D)), j])
        return G

    return FunctionOracle(n, value, grad, weight)


def prox_objective(value, x, center, lam):
    x = np.atleast_2d(x)
    return value(x) + 0.5 * lam * np.sum((x - center) ** 2, axis=1)


class NoisyGradientOracle:
    """Exact value with gradient samples ``grad(x) + noise * N(0, I)``.

    ``sigma2`` bounds the second moment of a sample for ``||grad|| <= grad_bound``.
    """

    def __init__(self, n, value, grad, grad_bound, noise):
        self.n = n
        self.value = value
        self.grad = grad
        self.noise = float(noise)
        self.sigma2 = grad_bound ** 2 + n * self.noise ** 2

    def sample_gradients(self, x, count, rng):
        x = np.asarray(x, dtype=float)
        return self.grad(x)[None, :] + self.noise * rng.standard_normal((count, self.n))


def ball_prox_case(kind, n, rng, r=0.5, lam=1.0):
    """A ball-prox problem with a closed-form answer.

    Returns ``(oracle, center, minimizer)`` for ``G(x) = F(x) + lam/2 ||x - center||^2``
    over the ball of radius ``r``.
    """
    center = rng.normal(size=n)
    u = rng.normal(size=n)
    u /= np.linalg.norm(u)
    if kind == "quadratic":
        a = center + rng.uniform(0, 3 * r) * u
        value = lambda X: 0.5 * np.sum((np.atleast_2d(X) - a) ** 2, axis=1)
        grad = lambda x: x - a
        bound = np.linalg.norm(a - center) + r
        target = center + (a - center) * lam / (1 + lam)
        if np.linalg.norm(target - center) > r:
            target = center + r * (target - center) / np.linalg.norm(target - center)
    else:
        c = rng.uniform(0.2, 2.0) * lam * r * u
        value = lambda X: np.atleast_2d(X) @ c
        grad = lambda x: c
        bound = np.linalg.norm(c)
        target = center - min(r, np.linalg.norm(c) / lam) * c / np.linalg.norm(c)
    oracle = NoisyGradientOracle(n, value, grad, bound, noise=1.0 / np.sqrt(n))
    return oracle, center, target
