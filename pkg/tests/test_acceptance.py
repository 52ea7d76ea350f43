"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion
from helpers import (
    PiecewiseLinear,
    ball_prox_case,
    exact_ball_min,
    grid_min,
    linf_oracle,
    prox_objective,
    random_pwl,
)
from parsfm.convex import (
    BallOracleParams,
    LovaszOracle,
    SmoothedOracle,
    SolverConfig,
    ball_optimize,
    distortion_bound,
    norm,
    project_to_ball,
    regularize,
)
from parsfm.instances import KINDS, ScaledInstance, brute_force_sfm, random_instance
from parsfm.lovasz import chain_decompose_many
from parsfm.oracle import OracleLedger, popcount
from parsfm.sfm import (
    approx_sfm,
    augmentation,
    augmenting_sets,
    augmenting_sets_query_bound,
    greedy_anchor,
    subgradient_baseline,
    sublinear_sfm,
)

Z95 = 1.6448536269514722  # one-sided 95% normal quantile


def _suite_instances(seed=2024, per_kind=200):
    rng = np.random.default_rng(seed)
    out = []
    for kind in KINDS:
        for _ in range(per_kind):
            n = int(rng.integers(2, 15))
            out.append(random_instance(kind, n, int(rng.integers(1, 4)), rng))
    return out


@pytest.fixture(scope="module")
def suite():
    return _suite_instances()


def _instance_with_bound(kind, n, M, rng):
    while True:
        inst = random_instance(kind, n, M, rng)
        if inst.M == M:
            return inst


def test_criterion_1_augmenting_sets_exact(suite):
    start = time.perf_counter()
    exact = two_rounds = within = 0
    for inst in suite:
        ledger = OracleLedger()
        res = augmenting_sets(inst, ledger)
        exact += res.value == brute_force_sfm(inst).min_value
        two_rounds += ledger.rounds == 2
        within += ledger.total_queries <= augmenting_sets_query_bound(inst.n, inst.M)
    elapsed = time.perf_counter() - start
    N = len(suite)
    ok = exact == two_rounds == within == N and elapsed < 120
    record_criterion(1, ok, f"exact {exact}/{N}, rounds==2 {two_rounds}/{N}, "
                            f"query bound {within}/{N}, {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_2_anchor(suite):
    good = small = 0
    for inst in suite:
        target = brute_force_sfm(inst).maximal_minimizer
        T = greedy_anchor(inst, target)
        small += popcount(T) <= inst.table()[T] <= inst.M
        good += augmentation(inst, T).augmented == target
    N = len(suite)
    ok = good == small == N
    record_criterion(2, ok, f"|T| <= f(T) <= M in {small}/{N}, A(T) = maximal minimizer in {good}/{N}")
    assert ok


def test_criterion_3_lovasz():
    rng = np.random.default_rng(3)
    insts = [random_instance(kind, int(n), 3, rng) for kind in KINDS for n in (6, 10)]
    ext_ok = sub_ok = l1_ok = pos_ok = True
    worst_slack, max_l1 = np.inf, 0.0
    for inst in insts:
        n = inst.n
        masks = np.arange(1 << n)
        X = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
        vals = chain_decompose_many(X, inst, OracleLedger()).values(X)
        ext_ok &= bool(np.array_equal(vals, inst.table().astype(float)))

        Xs = rng.uniform(-1, 2, size=(1000, n))
        Xs[: 300] = np.round(Xs[: 300] * 2) / 2  # many ties
        Ys = rng.uniform(-1, 2, size=(1000, n))
        bx = chain_decompose_many(Xs, inst, OracleLedger())
        by = chain_decompose_many(Ys, inst, OracleLedger())
        G = bx.subgradients()
        slack = by.values(Ys) - bx.values(Xs) - np.einsum("ij,ij->i", G, Ys - Xs)
        worst_slack = min(worst_slack, float(slack.min()))
        sub_ok &= bool(slack.min() >= -1e-12)
        l1 = np.abs(G).sum(axis=1)
        max_l1 = max(max_l1, float((l1 / (3 * inst.M)).max()))
        l1_ok &= bool(np.all(l1 <= 3 * inst.M))
        pos_ok &= bool(np.all((G > 0).sum(axis=1) <= inst.M))
    ok = ext_ok and sub_ok and l1_ok and pos_ok
    record_criterion(3, ok, f"extension exact {ext_ok}, worst subgradient slack {worst_slack:.2e}, "
                            f"max ||g||_1/(3M) {max_l1:.3f}, positive entries <= M {pos_ok}")
    assert ok


def test_criterion_4_regularizer():
    rng = np.random.default_rng(4)
    funcs = [PiecewiseLinear([[1.0, 0.0], [-1.0, 0.0]], [-4.0, 0.0])]
    funcs += [random_pwl(rng) for _ in range(9)]
    step = 1e-3
    worst_grid, worst_proj = 0.0, np.inf
    for k, f in enumerate(funcs):
        c = np.zeros(2) if k == 0 else rng.uniform(-1, 1, 2)
        r = 1.0 if k == 0 else float(rng.uniform(0.2, 0.5))
        for kind in ("l2", "linf"):
            reg = regularize(f.oracle(kind), c, r, kind)
            L = reg.inner.lipschitz
            exact, _ = exact_ball_min(f, c, r, kind)
            found = grid_min(reg.values, c - 1.5 * r, c + 1.5 * r, step)
            worst_grid = max(worst_grid, abs(found - exact) / (3 * L * step))

            dirs = rng.normal(size=(10_000, 2))
            dirs /= norm(dirs, kind)[:, None]
            Y = c + dirs * (r + rng.exponential(1.0, size=(10_000, 1)))
            dist = norm(Y - c, kind)
            P = c + (r / dist)[:, None] * (Y - c)
            assert np.allclose(P[:5], [project_to_ball(y, c, r, kind) for y in Y[:5]])
            slack = reg.values(Y) - L * (dist - r) - f(P)
            worst_proj = min(worst_proj, float(slack.min()))
    ok = worst_grid <= 1.0 and worst_proj >= -1e-9
    record_criterion(4, ok, f"max |grid min f_reg - constrained min| / (3L step) = {worst_grid:.3f} (<= 1), "
                            f"worst projection slack {worst_proj:.2e} (>= -1e-9), 10 functions x 2 norms")
    assert ok


def test_criterion_5_smoothing():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    samples, rho = 100_000, 0.1
    worst = 0.0
    cases = [(linf_oracle(10), 1.0, lambda x: np.abs(x).max(), rng.normal(size=(50, 10)))]
    for kind in ("graph-cut", "cut-minus-modular", "concave-of-cardinality", "coverage", "explicit-table"):
        inst = random_instance(kind, 8, 3, rng)
        orc = LovaszOracle(inst, OracleLedger())
        exact = (lambda inst: lambda x: float(
            chain_decompose_many(x[None, :], inst, OracleLedger()).values(x[None, :])[0]))(inst)
        cases.append((orc, 3.0 * inst.M, exact, rng.uniform(0, 1, size=(50, 8))))
    for orc, L, exact, points in cases:
        F = SmoothedOracle(orc, rho)
        bound = distortion_bound(L, rho, orc.n)
        for x in points:
            mean, se = F.estimate_value(x, samples, rng)
            worst = max(worst, abs(mean - exact(x)) / (bound + 4 * se))
    elapsed = time.perf_counter() - start
    ok = worst <= 1.0 and elapsed < 300
    record_criterion(5, ok, f"max |f_rho - f| / (L rho sqrt(2 ln n) + 4 se) = {worst:.3f} (<= 1), "
                            f"6 functions x 50 points x 1e5 samples, {elapsed:.1f}s (< 300s)")
    assert ok


def test_criterion_6_ball_oracle():
    r, lam = 0.5, 1.0
    worst = 0.0
    for kind in ("quadratic", "linear"):
        for n in (2, 10, 50):
            for frac in (1 / 8, 1 / 80, 1 / 800):
                phi = frac * lam * r * r
                excess = []
                for seed in range(50):
                    rng = np.random.default_rng(seed)
                    F, center, target = ball_prox_case(kind, n, rng, r, lam)
                    x = ball_optimize(F, center, BallOracleParams(phi, lam, r, max_rounds=100), rng)
                    excess.append(prox_objective(F.value, x, center, lam)[0]
                                  - prox_objective(F.value, target, center, lam)[0])
                worst = max(worst, float(np.mean(excess)) / phi)
    ok = worst <= 1.0
    record_criterion(6, ok, f"max mean excess / phi = {worst:.3f} (<= 1) over quadratic+linear, "
                            f"n in {{2,10,50}}, phi in lam r^2 x {{1/8,1/80,1/800}}, 50 seeds")
    assert ok


def _criterion_7_instances():
    rng = np.random.default_rng(7)
    sizes = (6, 8, 10, 12)
    return [random_instance(KINDS[i % 5], sizes[i % 4], 3, rng) for i in range(20)]


def test_criterion_7_sublinear_end_to_end():
    hits = runs = 0
    bound_ok = True
    per_instance = []
    for inst in _criterion_7_instances():
        target = brute_force_sfm(inst).min_value
        rounds = []
        for seed in range(20):
            ledger = OracleLedger()
            res = sublinear_sfm(inst, ledger, SolverConfig(seed=seed))
            hits += res.value == target
            runs += 1
            p = res.info["accel_params"]
            limit = res.info["attempts"] * (p.max_iterations * p.max_calls_per_iteration + 1)
            bound_ok &= ledger.rounds <= limit
            rounds.append(ledger.rounds)
        if inst.n == 12:
            base = OracleLedger()
            subgradient_baseline(inst, 3 * inst.M * res.info["eps"], base)
            per_instance.append((inst.kind, inst.M, float(np.mean(rounds)), max(rounds), base.rounds))
    rate = hits / runs
    below_trivial = all(mx < 2 ** 12 for _, _, _, mx, _ in per_instance)
    beats = [mean < 12 * base for _, _, mean, _, base in per_instance]
    ok = rate >= 0.9 and bound_ok and below_trivial and all(beats)
    table = "; ".join(f"{k} M={M}: {mean:.0f} vs 12x{base}" for k, M, mean, _, base in per_instance)
    record_criterion(7, ok, f"exact {hits}/{runs} ({rate:.1%}, >= 90%), round bound {bound_ok}, "
                            f"n=12 max rounds < 4096 {below_trivial}, "
                            f"below n x baseline in {sum(beats)}/{len(beats)} [{table}]")
    assert ok


def test_criterion_8_scaling():
    rng = np.random.default_rng(8)
    ns = (6, 8, 10, 12)
    means = []
    for n in ns:
        iters = []
        for i in range(5):
            inst = _instance_with_bound(KINDS[i % 5], n, 2, rng)
            res = sublinear_sfm(inst, OracleLedger(), SolverConfig(seed=i), max_attempts=1)
            iters += res.info["outer_iterations"]
        means.append(float(np.mean(iters)))
    slope = float(np.polyfit(np.log(ns), np.log(means), 1)[0])
    ok = slope <= 0.6
    record_criterion(8, ok, f"log-log slope of outer iterations on n = {slope:.3f} (<= 0.6), "
                            f"M=2, means {[round(m) for m in means]} at n={list(ns)}")
    assert ok


def test_criterion_9_approx_gap():
    rng = np.random.default_rng(9)
    worst = -np.inf
    lines = []
    for i in range(4):
        base = _instance_with_bound(KINDS[i % 5], 8, 3, rng)
        inst = ScaledInstance(base, float(rng.uniform(0.1, 1.0)))
        best = float(inst.table().min())
        for eps in (0.1, 0.5):
            gaps = np.array([approx_sfm(inst, OracleLedger(), eps, SolverConfig(seed=s)).value - best
                             for s in range(20)])
            margin = Z95 * gaps.std(ddof=1) / math.sqrt(len(gaps))
            worst = max(worst, gaps.mean() - (eps * inst.M + margin))
            lines.append(f"eps={eps} mean gap {gaps.mean():.3f} vs {eps * inst.M:.3f}")
    ok = worst <= 0
    record_criterion(9, ok, f"mean gap - (eps M + 95% margin) <= {worst:.3f} (<= 0); " + "; ".join(lines))
    assert ok
