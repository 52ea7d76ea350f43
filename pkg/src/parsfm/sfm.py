"""Parallel submodular minimization: the two-round augmenting-sets algorithm
and the convex-optimization pipeline built on the Lovász extension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from parsfm.convex.oracles import LovaszOracle, norm, project_to_ball, regularize
from parsfm.convex.solvers import SolverConfig, solve_linf_box_constrained, solve_linf_unconstrained
from parsfm.lovasz import chain_decompose, lovasz_subgradient, lovasz_value, threshold_round
from parsfm.oracle import WORD_BITS, OracleLedger, audit_value, evaluate_batch, ledger_report, members


class SfmError(RuntimeError):
    """A solver could not certify its answer within its budget."""


@dataclass
class SfmResult:
    set: int
    value: float
    ledger: dict
    method: str
    info: dict = field(default_factory=dict)

    @property
    def members(self) -> list[int]:
        return members(self.set)


@dataclass(frozen=True)
class AugmentationRecord:
    seed: int
    augmented: int
    value: int


def _audited(instance, mask, value, ledger, method, info) -> SfmResult:
    checked = audit_value(instance, mask, ledger)
    if checked != value:
        raise SfmError(f"audit mismatch on {mask:#x}: solver saw {value}, oracle gives {checked}")
    return SfmResult(int(mask), value, ledger_report(ledger), method, info)


def _mask_dtype(n):
    return np.int64 if n <= WORD_BITS else object


def sparse_family(n: int, M: int) -> np.ndarray:
    """All subsets of size at most ``M`` in increasing bitmask order."""
    masks = []
    for k in range(min(M, n) + 1):
        for combo in combinations(range(n), k):
            masks.append(sum(1 << i for i in combo))
    masks.sort()
    return np.array(masks, dtype=_mask_dtype(n))


def augmenting_sets_query_bound(n: int, M: int) -> int:
    return sum(math.comb(n, k) for k in range(min(M, n) + 1)) * (n + 2)


def augmenting_sets(instance, ledger: OracleLedger | None = None) -> SfmResult:
    """Exact minimizer in two rounds of ``O(n^(M+1))`` queries.

    Round one queries ``f(S)`` and every ``f(S + i)`` for all ``|S| <= M``;
    round two queries each augmentation ``A(S) = S + {i : f(S + i) <= f(S)}``.
    The cheapest augmentation (first in bitmask order on ties) is returned.
    """
    ledger = OracleLedger() if ledger is None else ledger
    n, M = instance.n, int(instance.M)
    family = sparse_family(n, M)
    bits = np.array([1 << i for i in range(n)], dtype=_mask_dtype(n))
    grown = family[:, None] | bits[None, :]
    fresh = (family[:, None] & bits[None, :]) == 0

    batch = np.concatenate([family, grown[fresh]])
    values = evaluate_batch(instance, batch, ledger)
    base = values[: len(family)]
    marg = np.full(grown.shape, np.inf)
    marg[fresh] = values[len(family):] - np.repeat(base, fresh.sum(axis=1))

    take = fresh & (marg <= 0)
    augmented = family.copy()
    for i in range(n):
        augmented[take[:, i]] |= bits[i]

    final = evaluate_batch(instance, augmented, ledger)
    best = int(np.argmin(final))
    info = {"family_size": len(family), "seed_set": int(family[best]),
            "query_bound": augmenting_sets_query_bound(n, M)}
    return _audited(instance, int(augmented[best]), final[best].item(), ledger,
                    "augmenting-sets", info)


def augmentation(instance, seed: int, ledger: OracleLedger | None = None) -> AugmentationRecord:
    """``A(seed)`` and its value (two rounds)."""
    ledger = OracleLedger() if ledger is None else ledger
    n = instance.n
    outside = [i for i in range(n) if not (seed >> i) & 1]
    vals = evaluate_batch(instance, [seed] + [seed | (1 << i) for i in outside], ledger)
    aug = seed
    for i, v in zip(outside, vals[1:]):
        if v <= vals[0]:
            aug |= 1 << i
    value = evaluate_batch(instance, [aug], ledger)[0]
    return AugmentationRecord(seed, aug, value.item())


def greedy_anchor(instance, target: int, order=None, ledger: OracleLedger | None = None) -> int:
    """Anchor of ``target``: scan its elements, keeping those with positive marginal.

    Applied to the maximal minimizer this yields a set of size at most ``M``
    whose augmentation is the maximal minimizer.  Sequential; one round per
    scanned element.
    """
    ledger = OracleLedger() if ledger is None else ledger
    T = 0
    f_T = 0
    for i in (members(target) if order is None else order):
        f_new = evaluate_batch(instance, [T | (1 << i)], ledger)[0]
        if f_new > f_T:
            T |= 1 << i
            f_T = f_new
    return T


# ---------------------------------------------------------------- convex pipeline

def _lovasz_box_oracle(instance, ledger):
    """``h(y) = f_Lov(y/2 + 1/2) / (3M)`` on ``[-1, 1]^n``, declared 1-Lipschitz."""
    M = instance.M
    return LovaszOracle(instance, ledger, scale=1.0 / (3 * M), slope=0.5, offset=0.5,
                        lipschitz=1.0)


def sublinear_sfm(instance, ledger: OracleLedger | None = None,
                  config: SolverConfig | None = None, eps: float | None = None,
                  max_attempts: int = 3, certificate: float | None = None,
                  rng: np.random.Generator | None = None) -> SfmResult:
    """Minimizer via box-constrained minimization of the scaled Lovász extension.

    Each attempt minimizes ``h`` over ``[-1, 1]^n`` to accuracy ``eps``
    (default ``1 / (4 M)``), maps the point back to the unit cube and takes
    the best prefix set of its chain.  The guarantee holds in expectation, so
    attempts are repeated with fresh randomness until one fails to improve on
    the best audited value, the value ``certificate`` is reached, or
    ``max_attempts`` is spent.  If ``certificate`` is given and never
    reached, :class:`SfmError` is raised.
    """
    ledger = OracleLedger() if ledger is None else ledger
    config = config or SolverConfig()
    rng = np.random.default_rng(config.seed) if rng is None else rng
    M = instance.M
    eps = 1.0 / (4 * M) if eps is None else eps

    best_set, best_val = None, None
    info = {"eps": eps, "attempts": 0, "outer_iterations": [], "ball_calls": 0,
            "samples": 0, "convex_rounds": 0}
    for _ in range(max_attempts):
        h = _lovasz_box_oracle(instance, ledger)
        res = solve_linf_box_constrained(h, eps, config, rng)
        z = np.clip(res.x / 2 + 0.5, 0.0, 1.0)
        S, val = threshold_round(chain_decompose(z, instance, ledger))
        info["attempts"] += 1
        info["samples"] += h.samples + 1
        info["convex_rounds"] += res.rounds
        if res.accel is not None:
            info["outer_iterations"].append(res.accel.iterations)
            info["ball_calls"] += res.accel.ball_calls
            info["accel_params"] = res.params
        improved = best_val is None or val < best_val
        if improved:
            best_set, best_val = S, val
        if certificate is not None and best_val <= certificate:
            break
        if not improved and certificate is None:
            break
    if certificate is not None and best_val > certificate:
        raise SfmError(f"best value {best_val} after {info['attempts']} attempts "
                       f"misses certificate {certificate}")
    return _audited(instance, best_set, best_val, ledger, "sublinear", info)


def approx_sfm(instance, ledger: OracleLedger | None = None, eps: float = 0.5,
               config: SolverConfig | None = None,
               rng: np.random.Generator | None = None) -> SfmResult:
    """Set within ``eps * M`` of the minimum (in expectation).

    The Lovász extension gets an infinity-norm barrier around the unit cube
    (center ``1/2``, radius ``1/2``) and is minimized without constraints
    inside Euclidean radius ``sqrt(n)``; the point is pulled back into the
    cube and rounded.  For ``eps >= 1`` the empty set already meets the
    bound and is returned without queries.
    """
    ledger = OracleLedger() if ledger is None else ledger
    config = config or SolverConfig()
    rng = np.random.default_rng(config.seed) if rng is None else rng
    n, M = instance.n, instance.M
    if eps >= 1.0:
        return _audited(instance, 0, 0, ledger, "approx", {"eps": eps, "trivial": True})
    f_lov = LovaszOracle(instance, ledger)
    center = np.full(n, 0.5)
    reg = regularize(f_lov, center, 0.5, "linf")
    res = solve_linf_unconstrained(reg, math.sqrt(n), eps * M, config, rng)
    x = res.x
    if norm(x - center, "linf") > 0.5:
        x = project_to_ball(x, center, 0.5, "linf")
    S, val = threshold_round(chain_decompose(np.clip(x, 0.0, 1.0), instance, ledger))
    info = {"eps": eps, "samples": f_lov.samples + 1, "convex_rounds": res.rounds,
            "outer_iterations": res.accel.iterations if res.accel else 0}
    return _audited(instance, S, val, ledger, "approx", info)


def subgradient_baseline(instance, gap: float, ledger: OracleLedger | None = None) -> SfmResult:
    """Projected subgradient descent on the cube, run to a certified ``gap``.

    With ``D = sqrt(n)/2`` (cube radius around its center) and ``G = 3M``
    bounding every subgradient, ``T = ceil((D G / gap)^2)`` rounds of constant
    step ``D / (G sqrt(T))`` put the averaged iterate within ``gap`` of the
    minimum.  Each iteration is one round of ``n`` queries; the averaged
    point is rounded with one more round.
    """
    ledger = OracleLedger() if ledger is None else ledger
    n = instance.n
    D, G = math.sqrt(n) / 2, 3.0 * instance.M
    T = max(1, math.ceil((D * G / gap) ** 2))
    step = D / (G * math.sqrt(T))
    x = np.full(n, 0.5)
    avg = np.zeros(n)
    for _ in range(T):
        avg += x
        x = np.clip(x - step * lovasz_subgradient(chain_decompose(x, instance, ledger)), 0.0, 1.0)
    avg /= T
    decomp = chain_decompose(avg, instance, ledger)
    S, val = threshold_round(decomp)
    info = {"iterations": T, "gap": gap, "lovasz_value": lovasz_value(decomp, avg)}
    return _audited(instance, S, val, ledger, "subgradient", info)


def brute_force_solver(instance, ledger: OracleLedger | None = None) -> SfmResult:
    """Trivial one-round algorithm: query all ``2^n`` subsets."""
    ledger = OracleLedger() if ledger is None else ledger
    n = instance.n
    masks = np.arange(1 << n, dtype=np.int64)
    vals = evaluate_batch(instance, masks, ledger)
    j = int(np.argmin(vals))
    return _audited(instance, j, vals[j].item(), ledger, "brute-force", {})
