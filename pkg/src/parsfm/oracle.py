"""Batched evaluation oracle with round and query accounting.

Subsets of the ground set ``{0, ..., n-1}`` are plain Python ints used as
bitmasks (bit ``i`` set means element ``i`` is in the set).  Batches may be
given as any sequence of ints, or as an ``int64`` numpy array when ``n <= 62``.

Every algorithm in the package reads function values through
:func:`evaluate_batch`, which charges one parallel round per call and one
query per subset in the batch.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Largest n for which masks fit in a signed 64-bit word.
WORD_BITS = 62
# Largest n for which a dense "already queried" bitmap is kept.
_SEEN_BITMAP_MAX_N = 24


class SubsetDomainError(ValueError):
    """A queried subset has bits outside the instance's ground set."""


class ContractViolation(ValueError):
    """An instance broke its declared contract (range, normalization, submodularity)."""


def subset(indices: Iterable[int]) -> int:
    """Bitmask of the given 0-based element indices."""
    mask = 0
    for i in indices:
        if i < 0:
            raise SubsetDomainError(f"negative element index {i}")
        mask |= 1 << int(i)
    return mask


def members(mask: int) -> list[int]:
    """Sorted 0-based element indices of a bitmask."""
    out = []
    i = 0
    mask = int(mask)
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def full_set(n: int) -> int:
    return (1 << n) - 1


def popcount(mask: int) -> int:
    return bin(int(mask)).count("1")


@dataclass
class OracleLedger:
    """Counters for the parallel query model.

    ``total_queries`` counts every issued query, duplicates included;
    ``distinct_queries`` counts distinct subsets ever queried through this
    ledger.  ``audits`` counts out-of-band verification evaluations, which are
    not part of the complexity measurement.
    """

    total_queries: int = 0
    rounds: int = 0
    distinct_queries: int = 0
    audits: int = 0
    _seen: set = field(default_factory=set, repr=False)
    _seen_bitmap: np.ndarray | None = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _record(self, masks, n: int) -> None:
        with self._lock:
            self.rounds += 1
            self.total_queries += len(masks)
            if isinstance(masks, np.ndarray) and n <= _SEEN_BITMAP_MAX_N:
                if self._seen_bitmap is None or self._seen_bitmap.size < (1 << n):
                    bitmap = np.zeros(1 << n, dtype=bool)
                    if self._seen_bitmap is not None:
                        bitmap[: self._seen_bitmap.size] = self._seen_bitmap
                    for m in self._seen:
                        bitmap[m] = True
                    self._seen_bitmap = bitmap
                    self._seen = set()
                uniq = np.unique(masks)
                fresh = uniq[~self._seen_bitmap[uniq]]
                self._seen_bitmap[fresh] = True
                self.distinct_queries += int(fresh.size)
            elif self._seen_bitmap is not None:
                for m in masks:
                    m = int(m)
                    if not self._seen_bitmap[m]:
                        self._seen_bitmap[m] = True
                        self.distinct_queries += 1
            else:
                before = len(self._seen)
                self._seen.update(int(m) for m in masks)
                self.distinct_queries += len(self._seen) - before

    def report(self) -> dict:
        return ledger_report(self)


def ledger_report(ledger: OracleLedger) -> dict:
    """Snapshot of the ledger counters."""
    return {
        "rounds": ledger.rounds,
        "total_queries": ledger.total_queries,
        "distinct_queries": ledger.distinct_queries,
    }


def _check_domain(masks, n: int) -> None:
    if isinstance(masks, np.ndarray) and masks.dtype != object:
        if masks.size and (masks.min() < 0 or (n < 63 and masks.max() >> n)):
            raise SubsetDomainError(f"subset outside ground set of size {n}")
        return
    limit = 1 << n
    for m in masks:
        if m < 0 or m >= limit:
            raise SubsetDomainError(f"subset {m:#x} outside ground set of size {n}")


def as_batch(batch, n: int):
    """Normalize a batch to an int64 array (n <= 62) or a list of ints."""
    if isinstance(batch, np.ndarray):
        if n <= WORD_BITS and batch.dtype != np.int64:
            batch = batch.astype(np.int64)
        return batch.ravel() if batch.dtype != object else list(batch.ravel())
    if n <= WORD_BITS:
        return np.fromiter((int(m) for m in batch), dtype=np.int64)
    return [int(m) for m in batch]


def evaluate_batch(instance, batch: Sequence[int] | np.ndarray, ledger: OracleLedger,
                   workers: int | None = None) -> np.ndarray:
    """Evaluate ``instance`` on every subset of ``batch`` as one parallel round.

    Returns the values in batch order.  The ledger is charged one round and
    ``len(batch)`` queries.  With ``workers > 1`` the batch is split into
    chunks evaluated on a thread pool; the result is identical to serial
    evaluation.
    """
    n = instance.n
    masks = as_batch(batch, n)
    if len(masks) == 0:
        raise ValueError("query batch must be non-empty")
    _check_domain(masks, n)

    if workers and workers > 1 and len(masks) > workers:
        chunks = np.array_split(np.arange(len(masks)), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda idx: np.asarray(instance.evaluate_many(
                    masks[idx] if isinstance(masks, np.ndarray) else [masks[i] for i in idx])),
                chunks))
        values = np.concatenate(parts)
    else:
        values = np.asarray(instance.evaluate_many(masks))

    bound = instance.M
    if values.size and np.abs(values).max() > bound + 1e-9 * max(1.0, abs(bound)):
        bad = int(np.argmax(np.abs(values)))
        raise ContractViolation(
            f"instance returned {values[bad]} on subset {int(masks[bad]):#x}, "
            f"outside declared range [-{bound}, {bound}]")
    ledger._record(masks, n)
    return values


def audit_value(instance, mask: int, ledger: OracleLedger | None = None):
    """Evaluate one subset outside the complexity accounting (result verification)."""
    value = instance.evaluate_many(as_batch([mask], instance.n))[0]
    if ledger is not None:
        with ledger._lock:
            ledger.audits += 1
    return value.item() if hasattr(value, "item") else value
