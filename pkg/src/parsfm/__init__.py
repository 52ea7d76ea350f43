"""Parallel submodular function minimization with round and query accounting."""

from parsfm.instances import (
    BruteForceResult,
    MemoizedInstance,
    ScaledInstance,
    SubmodularInstance,
    brute_force_sfm,
    generate,
    load_instance,
    make_instance,
    random_instance,
    validate_submodular,
)
from parsfm.oracle import OracleLedger, evaluate_batch, ledger_report, members, subset
from parsfm.sfm import SfmResult, approx_sfm, augmenting_sets, sublinear_sfm

__version__ = "0.1.0"

__all__ = [
    "BruteForceResult", "MemoizedInstance", "ScaledInstance", "SubmodularInstance",
    "brute_force_sfm", "generate", "load_instance", "make_instance", "random_instance",
    "validate_submodular", "OracleLedger", "evaluate_batch", "ledger_report", "members",
    "subset", "SfmResult", "approx_sfm", "augmenting_sets", "sublinear_sfm",
]
