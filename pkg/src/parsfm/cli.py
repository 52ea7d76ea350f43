"""Command-line front end: ``parsfm run`` and ``parsfm sweep``.

Exit codes: 0 success, 1 solver failure or verification mismatch,
2 usage error or malformed input, 3 instance contract violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from parsfm.convex.solvers import SolverConfig
from parsfm.instances import BRUTE_FORCE_MAX_N, InstanceError, brute_force_sfm, generate, load_instance
from parsfm.oracle import ContractViolation, OracleLedger, SubsetDomainError
from parsfm.sfm import SfmError, approx_sfm, augmenting_sets, brute_force_solver, sublinear_sfm

REPORT_SCHEMA_VERSION = 1
CSV_COLUMNS = ("instance_id", "n", "M", "solver", "min_found", "min_brute",
               "rounds", "queries", "wall_ms", "seed")
SOLVERS = ("augmenting-sets", "sublinear", "approx", "brute-force")
APPROX_DEFAULT_EPS = 0.5

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2, 3


class VerificationError(RuntimeError):
    pass


@dataclass
class ReportRow:
    instance_id: str
    n: int
    M: int
    solver: str
    min_found: int | float
    min_brute: int | float | None
    rounds: int
    queries: int
    wall_ms: float
    seed: int

    def as_record(self) -> dict:
        return asdict(self)


@dataclass
class RunSpec:
    solver: str
    instance_path: str | None = None
    gen: str | None = None
    eps: float | None = None
    seed: int = 0
    verify: bool = False
    config: SolverConfig | None = None

    def __post_init__(self):
        if (self.instance_path is None) == (self.gen is None):
            raise ValueError("exactly one of an instance file or a generator spec is required")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.eps is not None and self.solver in ("augmenting-sets", "brute-force"):
            raise ValueError(f"solver {self.solver} takes no eps")

    def load(self):
        if self.instance_path is not None:
            return load_instance(self.instance_path), Path(self.instance_path).stem
        return generate(self.gen, np.random.default_rng(self.seed)), f"{self.gen};seed={self.seed}"


def _solve(solver, instance, eps, config, ledger):
    if solver == "augmenting-sets":
        return augmenting_sets(instance, ledger)
    if solver == "brute-force":
        return brute_force_solver(instance, ledger)
    if solver == "sublinear":
        return sublinear_sfm(instance, ledger, config=config, eps=eps)
    return approx_sfm(instance, ledger, eps=APPROX_DEFAULT_EPS if eps is None else eps,
                      config=config)


def run(spec: RunSpec) -> ReportRow:
    """Execute one solver on a fresh ledger and return its report row."""
    instance, instance_id = spec.load()
    config = spec.config or SolverConfig()
    config = SolverConfig.from_dict({**asdict(config), "seed": spec.seed})
    ledger = OracleLedger()
    start = time.perf_counter()
    result = _solve(spec.solver, instance, spec.eps, config, ledger)
    wall_ms = (time.perf_counter() - start) * 1e3

    brute = None
    if spec.verify and instance.n <= BRUTE_FORCE_MAX_N:
        brute = brute_force_sfm(instance).min_value
        if spec.solver == "approx":
            eps = APPROX_DEFAULT_EPS if spec.eps is None else spec.eps
            ok = result.value <= brute + eps * instance.M
        else:
            ok = result.value == brute
        if not ok:
            raise VerificationError(
                f"{spec.solver} found {result.value}, brute force minimum is {brute}")
    return ReportRow(instance_id, instance.n, int(instance.M), spec.solver, result.value,
                     brute, result.ledger["rounds"], result.ledger["total_queries"],
                     round(wall_ms, 3), spec.seed)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value.is_integer() and not math.isinf(value):
        return str(int(value))
    return str(value)


def format_rows(rows: list[ReportRow], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"schema_version": REPORT_SCHEMA_VERSION,
                           "columns": list(CSV_COLUMNS),
                           "rows": [r.as_record() for r in rows]}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        rec = r.as_record()
        writer.writerow([_cell(rec[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def fitted_exponent(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1.0))
    return float(np.polyfit(x, y, 1)[0])


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(v) for v in part.split(".."))
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _load_config(path: str | None) -> SolverConfig | None:
    if path is None:
        return None
    return SolverConfig.from_dict(json.loads(Path(path).read_text()))


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parsfm",
                                     description="Parallel submodular minimization with round accounting.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=None,
                        help="accuracy for the convex solvers (approx default 0.5)")
    common.add_argument("--verify", action="store_true",
                        help="compare against brute force (skipped for n > 24)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--config", default=None, help="solver config JSON file")

    p_run = sub.add_parser("run", parents=[common], help="run one solver on one instance")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", help="instance JSON file")
    src.add_argument("--gen", help='generator spec, e.g. "cut-minus-modular,n=10,M=2"')
    p_run.add_argument("--solver", choices=SOLVERS, required=True)
    p_run.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", parents=[common], help="grid over n, M, solver and seed")
    p_sweep.add_argument("--kind", default="cut-minus-modular")
    p_sweep.add_argument("--n", dest="ns", type=_int_list, required=True,
                         help="sizes, e.g. 8,12,16 or 6..12")
    p_sweep.add_argument("--M", dest="Ms", type=_int_list, default=[2])
    p_sweep.add_argument("--solver", dest="solvers", type=_str_list, required=True)
    p_sweep.add_argument("--seeds", type=_int_list, default=[0])
    return parser


def _sweep_specs(args) -> list[RunSpec]:
    for s in args.solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}")
    config = _load_config(args.config)
    return [RunSpec(solver=s, gen=f"{args.kind},n={n},M={M}", eps=args.eps, seed=seed,
                    verify=args.verify, config=config)
            for s in args.solvers for M in args.Ms for n in args.ns for seed in args.seeds]


def _report_exponents(rows: list[ReportRow]) -> None:
    by_key: dict[tuple, dict[int, list[int]]] = {}
    for r in rows:
        by_key.setdefault((r.solver, r.M), {}).setdefault(r.n, []).append(r.rounds)
    for (solver, M), per_n in sorted(by_key.items()):
        if len(per_n) >= 2:
            ns = sorted(per_n)
            slope = fitted_exponent(ns, [np.mean(per_n[n]) for n in ns])
            print(f"# {solver} M={M}: rounds ~ n^{slope:.3f}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            specs = [RunSpec(solver=args.solver, instance_path=args.instance, gen=args.gen,
                             eps=args.eps, seed=args.seed, verify=args.verify,
                             config=_load_config(args.config))]
        else:
            specs = _sweep_specs(args)
            if not specs:
                parser.error("sweep grid is empty")
    except (ValueError, OSError) as exc:
        parser.error(str(exc))

    rows = []
    try:
        for spec in specs:
            rows.append(run(spec))
    except (ContractViolation, SubsetDomainError) as exc:
        print(f"parsfm: contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InstanceError, OSError, json.JSONDecodeError) as exc:
        print(f"parsfm: bad instance: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SfmError, VerificationError) as exc:
        print(f"parsfm: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        if rows:
            _emit(format_rows(rows, args.format), args.out)
    if args.command == "sweep":
        _report_exponents(rows)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
