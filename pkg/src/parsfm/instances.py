"""Concrete submodular functions, brute-force verification and instance I/O.

Every instance is integer valued, normalized (``f(empty) = 0``) and carries a
declared range bound ``M`` with ``|f(S)| <= M``.  For ``n <= 20`` the full
value table is built once with numpy and evaluation is a table lookup.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from parsfm.oracle import ContractViolation, WORD_BITS, members

KINDS = ("graph-cut", "cut-minus-modular", "concave-of-cardinality", "coverage",
         "explicit-table")

TABLE_MAX_N = 20
BRUTE_FORCE_MAX_N = 24
VALIDATE_MAX_N = 14


class InstanceError(ValueError):
    """Malformed instance description."""


def _bit_column(n: int, i: int) -> np.ndarray:
    """Boolean column ``(mask >> i) & 1`` over all masks ``0 .. 2**n - 1``."""
    block = np.repeat(np.array([False, True]), 1 << i)
    return np.tile(block, 1 << (n - i - 1))


def _popcounts(n: int) -> np.ndarray:
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += _bit_column(n, i)
    return counts


# ---------------------------------------------------------------- payloads

def _check_edges(n, edges):
    out = []
    for e in edges:
        if len(e) != 3:
            raise InstanceError(f"edge {e!r} must be [u, v, weight]")
        u, v, w = (int(t) for t in e)
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise InstanceError(f"edge {e!r} has invalid endpoints for n={n}")
        if w < 0 or w != e[2]:
            raise InstanceError(f"edge weight {e[2]!r} must be a non-negative integer")
        out.append((u, v, w))
    return out


def _normalize_payload(kind: str, n: int, payload: dict) -> dict:
    try:
        if kind == "graph-cut":
            return {"edges": _check_edges(n, payload["edges"])}
        if kind == "cut-minus-modular":
            modular = [int(m) for m in payload["modular"]]
            if len(modular) != n or modular != list(payload["modular"]):
                raise InstanceError("modular weights must be n integers")
            return {"edges": _check_edges(n, payload.get("edges", [])), "modular": modular}
        if kind == "concave-of-cardinality":
            values = [int(v) for v in payload["values"]]
            if len(values) != n + 1 or values != list(payload["values"]):
                raise InstanceError("concave table must hold n+1 integers g(0..n)")
            if values[0] != 0:
                raise ContractViolation("g(0) must be 0")
            diffs = np.diff(values)
            if np.any(diffs[1:] > diffs[:-1]):
                raise ContractViolation("cardinality table is not concave")
            return {"values": values}
        if kind == "coverage":
            sets = [sorted({int(a) for a in s}) for s in payload["sets"]]
            if len(sets) != n or any(a < 0 for s in sets for a in s):
                raise InstanceError("coverage needs n sets of non-negative item ids")
            c = payload.get("c", 0)
            if int(c) != c or c < 0:
                raise InstanceError("coverage cost c must be a non-negative integer")
            return {"sets": sets, "c": int(c)}
        if kind == "explicit-table":
            table = payload["table"]
            if len(table) != 1 << n:
                raise InstanceError(f"explicit table needs 2**{n} entries")
            arr = np.asarray(table)
            if arr.dtype.kind not in "iu":
                if not np.all(np.mod(arr, 1) == 0):
                    raise InstanceError("explicit table entries must be integers")
            return {"table": [int(v) for v in arr]}
    except KeyError as exc:
        raise InstanceError(f"{kind} payload missing field {exc}") from None
    raise InstanceError(f"unknown instance kind {kind!r}")


def _all_values(kind: str, n: int, payload: dict) -> np.ndarray:
    """Vectorized evaluation on every subset, indexed by bitmask."""
    size = 1 << n
    if kind == "explicit-table":
        return np.asarray(payload["table"], dtype=np.int64)
    if kind == "concave-of-cardinality":
        return np.asarray(payload["values"], dtype=np.int64)[_popcounts(n)]
    values = np.zeros(size, dtype=np.int64)
    if kind in ("graph-cut", "cut-minus-modular"):
        cols = {}
        for u, v, w in payload["edges"]:
            for t in (u, v):
                if t not in cols:
                    cols[t] = _bit_column(n, t)
            values += w * (cols[u] ^ cols[v])
        if kind == "cut-minus-modular":
            for i, m in enumerate(payload["modular"]):
                if m:
                    values -= m * _bit_column(n, i)
        return values
    if kind == "coverage":
        holders: dict[int, list[int]] = {}
        for i, items in enumerate(payload["sets"]):
            for a in items:
                holders.setdefault(a, []).append(i)
        cols = [_bit_column(n, i) for i in range(n)]
        for who in holders.values():
            covered = np.zeros(size, dtype=bool)
            for i in who:
                covered |= cols[i]
            values += covered
        if payload["c"]:
            values -= payload["c"] * _popcounts(n)
        return values
    raise InstanceError(f"unknown instance kind {kind!r}")


def _one_value(kind: str, payload: dict, mask: int) -> int:
    if kind == "explicit-table":
        return payload["table"][mask]
    if kind == "concave-of-cardinality":
        return payload["values"][bin(mask).count("1")]
    if kind in ("graph-cut", "cut-minus-modular"):
        total = sum(w for u, v, w in payload["edges"] if ((mask >> u) ^ (mask >> v)) & 1)
        if kind == "cut-minus-modular":
            total -= sum(payload["modular"][i] for i in members(mask))
        return total
    if kind == "coverage":
        idx = members(mask)
        covered = set()
        for i in idx:
            covered.update(payload["sets"][i])
        return len(covered) - payload["c"] * len(idx)
    raise InstanceError(f"unknown instance kind {kind!r}")


# ---------------------------------------------------------------- instances

class SubmodularInstance:
    """An integer-valued normalized submodular function on ``n`` elements.

    Immutable after construction.  ``calls`` counts how many subset
    evaluations were served, which lets tests check that solvers never read
    values outside :func:`parsfm.oracle.evaluate_batch`.
    """

    def __init__(self, kind: str, n: int, payload: dict, M: int, table: np.ndarray | None = None):
        self.kind = kind
        self.n = int(n)
        self.payload = payload
        self.M = M
        self._table = table
        self._calls = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f"SubmodularInstance(kind={self.kind!r}, n={self.n}, M={self.M})"

    @property
    def calls(self) -> int:
        return self._calls

    def _count(self, k: int) -> None:
        with self._lock:
            self._calls += k

    def evaluate_many(self, masks) -> np.ndarray:
        self._count(len(masks))
        if self._table is not None:
            return self._table[np.asarray(masks, dtype=np.int64)]
        return np.array([_one_value(self.kind, self.payload, int(m)) for m in masks],
                        dtype=np.int64 if self.n <= WORD_BITS else object)

    def table(self) -> np.ndarray:
        """All ``2**n`` values indexed by bitmask (not charged to any ledger)."""
        if self._table is not None:
            return self._table
        if self.n > BRUTE_FORCE_MAX_N:
            raise ValueError(f"n={self.n} too large for a full value table")
        return _all_values(self.kind, self.n, self.payload)

    def to_dict(self) -> dict:
        payload = dict(self.payload)
        if "edges" in payload:
            payload["edges"] = [list(e) for e in payload["edges"]]
        return {"kind": self.kind, "n": self.n, "M": self.M, "payload": payload}


class MemoizedInstance:
    """Opt-in cache in front of an instance.

    Values and ledger accounting are unchanged; only repeated evaluations of
    the wrapped instance are avoided.
    """

    def __init__(self, base):
        self.base = base
        self.kind = base.kind
        self.n = base.n
        self.M = base.M
        self._cache: dict[int, int] = {}
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self.base.calls

    def evaluate_many(self, masks) -> np.ndarray:
        keys = [int(m) for m in masks]
        with self._lock:
            missing = sorted({k for k in keys if k not in self._cache})
        if missing:
            vals = self.base.evaluate_many(
                np.asarray(missing, dtype=np.int64) if self.n <= WORD_BITS else missing)
            with self._lock:
                self._cache.update(zip(missing, (int(v) for v in vals)))
        return np.array([self._cache[k] for k in keys],
                        dtype=np.int64 if self.n <= WORD_BITS else object)

    def table(self) -> np.ndarray:
        return self.base.table()


class ScaledInstance:
    """Real-valued ``factor * f`` for an integer instance ``f``."""

    def __init__(self, base, factor: float):
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        self.base = base
        self.factor = float(factor)
        self.kind = base.kind
        self.n = base.n
        self.M = base.M * self.factor

    @property
    def calls(self) -> int:
        return self.base.calls

    def evaluate_many(self, masks) -> np.ndarray:
        return self.factor * np.asarray(self.base.evaluate_many(masks), dtype=float)

    def table(self) -> np.ndarray:
        return self.factor * self.base.table().astype(float)


def make_instance(kind: str, n: int, payload: dict, M: int | None = None,
                  validate: bool = True) -> SubmodularInstance:
    """Build and check an instance.

    For ``n <= 20`` the declared bound is the tight ``max_S |f(S)|`` (at least
    1); a caller-supplied ``M`` below it is a contract violation.  For larger
    ``n`` the caller must supply ``M``.  With ``validate`` and ``n <= 14`` the
    diminishing-returns property is checked exhaustively.
    """
    if kind not in KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    n = int(n)
    if n < 1:
        raise InstanceError("n must be positive")
    payload = _normalize_payload(kind, n, payload)
    table = None
    if n <= TABLE_MAX_N:
        table = _all_values(kind, n, payload)
        table.setflags(write=False)
        if table[0] != 0:
            raise ContractViolation(f"f(empty) = {table[0]}, expected 0")
        tight = max(1, int(np.abs(table).max()))
        if M is not None and M < tight:
            raise ContractViolation(f"declared M={M} but max |f| = {tight}")
        M = tight
    else:
        if M is None or M < 1:
            raise InstanceError("n > 20 requires a declared positive M")
        if _one_value(kind, payload, 0) != 0:
            raise ContractViolation("f(empty) must be 0")
    inst = SubmodularInstance(kind, n, payload, int(M), table)
    if validate and n <= VALIDATE_MAX_N:
        check = validate_submodular(inst)
        if not check.ok:
            raise ContractViolation(f"not submodular: violation at {check.violation}")
    return inst


@dataclass(frozen=True)
class SubmodularityCheck:
    ok: bool
    # (S, T, i) with S subset of T, i not in T and
    # f(S + i) - f(S) < f(T + i) - f(T); masks and a 0-based index.
    violation: tuple[int, int, int] | None = None


def validate_submodular(instance) -> SubmodularityCheck:
    """Exhaustive diminishing-returns check.

    Uses the equivalent local form ``f(S+i) + f(S+j) >= f(S+i+j) + f(S)``;
    a local violation at ``(S, i, j)`` is reported as the triple
    ``(S, S + j, i)``.  The first violation in (S, i, j) lexicographic order
    is returned.
    """
    n = instance.n
    if n > TABLE_MAX_N:
        raise ValueError(f"exhaustive validation limited to n <= {TABLE_MAX_N}")
    f = np.asarray(instance.table())
    masks = np.arange(1 << n, dtype=np.int64)
    best = None
    for i in range(n):
        bi = 1 << i
        for j in range(i + 1, n):
            bj = 1 << j
            s = masks[(masks & (bi | bj)) == 0]
            bad = f[s | bi] + f[s | bj] < f[s | bi | bj] + f[s]
            if bad.any():
                cand = (int(s[np.argmax(bad)]), i, j)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return SubmodularityCheck(True)
    s, i, j = best
    return SubmodularityCheck(False, (s, s | (1 << j), i))


@dataclass(frozen=True)
class BruteForceResult:
    min_value: int
    minimizers: np.ndarray
    maximal_minimizer: int


def brute_force_sfm(instance) -> BruteForceResult:
    """Exact minimum, all minimizers and their union by full enumeration."""
    if instance.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    f = np.asarray(instance.table())
    lo = f.min()
    minimizers = np.flatnonzero(f == lo).astype(np.int64)
    union = int(np.bitwise_or.reduce(minimizers)) if minimizers.size else 0
    return BruteForceResult(lo.item(), minimizers, union)


# ---------------------------------------------------------------- generators

def _random_edges(rng, n, count):
    edges = set()
    while len(edges) < count:
        u, v = rng.choice(n, size=2, replace=False)
        edges.add((int(min(u, v)), int(max(u, v))))
    return [[u, v, 1] for u, v in sorted(edges)]


def _draw_payload(kind, n, M, rng):
    if kind == "graph-cut":
        k = int(rng.integers(1, M + 1)) if n >= 2 else 0
        return {"edges": _random_edges(rng, n, min(k, n * (n - 1) // 2))}
    if kind == "cut-minus-modular":
        e = int(rng.integers(0, M + 1)) if n >= 2 else 0
        modular = np.zeros(n, dtype=int)
        k = int(rng.integers(1, min(n, M + 1) + 1))
        idx = rng.choice(n, size=k, replace=False)
        modular[idx] = rng.choice([1, 1, -1], size=k)
        return {"edges": _random_edges(rng, n, min(e, n * (n - 1) // 2)),
                "modular": modular.tolist()}
    if kind == "concave-of-cardinality":
        up = int(rng.integers(0, min(M, n) + 1))
        down = int(rng.integers(0, min(up + M, n - up) + 1))
        incr = [1] * up + [0] * (n - up - down) + [-1] * down
        return {"values": np.concatenate([[0], np.cumsum(incr)]).astype(int).tolist()}
    if kind == "coverage":
        if rng.random() < 0.4:
            u = int(rng.integers(1, M + 1))
            sets = [[int(a) for a in np.flatnonzero(rng.random(u) < 0.3)] for _ in range(n)]
            return {"sets": sets, "c": 0}
        d = int(rng.integers(0, min(M, n - 1) + 1))
        base = np.concatenate([np.arange(n - d), rng.integers(0, n - d, size=d)])
        rng.shuffle(base)
        sets = [{int(b)} for b in base]
        for extra in range(int(rng.integers(0, M + 1))):
            holders = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            for h in holders:
                sets[h].add(n + extra)
        return {"sets": [sorted(s) for s in sets], "c": 1}
    if kind == "explicit-table":
        # sum of capped cardinality terms over random groups, minus a modular part
        table = np.zeros(1 << n, dtype=np.int64)
        for _ in range(int(rng.integers(1, 3))):
            group = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            cap = int(rng.integers(1, M + 1))
            count = np.zeros(1 << n, dtype=np.int64)
            for g in group:
                count += _bit_column(n, int(g))
            table += np.minimum(count, cap)
        k = int(rng.integers(0, min(n, M + 1) + 1))
        for g in rng.choice(n, size=k, replace=False):
            table -= _bit_column(n, int(g))
        return {"table": table.tolist()}
    raise InstanceError(f"unknown instance kind {kind!r}")


def structural_bound(kind: str, n: int, payload: dict) -> int:
    """A range bound read off the payload, valid without enumerating subsets."""
    payload = _normalize_payload(kind, n, payload)
    if kind == "graph-cut":
        return max(1, sum(w for _, _, w in payload["edges"]))
    if kind == "cut-minus-modular":
        m = np.asarray(payload["modular"])
        cut = sum(w for _, _, w in payload["edges"])
        return max(1, int(cut + m[m < 0].sum() * -1), int(m[m > 0].sum()))
    if kind == "concave-of-cardinality":
        return max(1, max(abs(v) for v in payload["values"]))
    if kind == "coverage":
        items = {a for s in payload["sets"] for a in s}
        return max(1, len(items), payload["c"] * n)
    return max(1, max(abs(v) for v in payload["table"]))


def random_instance(kind: str, n: int, M: int, rng: np.random.Generator | int | None = None,
                    max_tries: int = 10_000) -> SubmodularInstance:
    """Seeded random instance of ``kind`` with tight range bound at most ``M``."""
    if M < 1:
        raise ValueError("target M must be positive")
    if kind == "explicit-table" and n > TABLE_MAX_N:
        raise ValueError("explicit tables limited to n <= 20")
    rng = np.random.default_rng(rng)
    for _ in range(max_tries):
        payload = _draw_payload(kind, n, M, rng)
        if n > TABLE_MAX_N:
            bound = structural_bound(kind, n, payload)
            if bound <= M:
                return make_instance(kind, n, payload, M=bound, validate=False)
            continue
        inst = make_instance(kind, n, payload, validate=False)
        if inst.M <= M:
            return inst
    raise RuntimeError(f"could not draw a {kind} instance with n={n}, M<={M}")


def zero_instance(n: int) -> SubmodularInstance:
    return make_instance("concave-of-cardinality", n, {"values": [0] * (n + 1)})


def generate(spec: str, rng: np.random.Generator | int | None = None) -> SubmodularInstance:
    """Build an instance from a generator string such as ``"cut-minus-modular,n=10,M=2"``.

    ``"zero,n=5"`` gives the identically zero function.
    """
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    if not parts:
        raise InstanceError("empty generator spec")
    kind, opts = parts[0], {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep:
            raise InstanceError(f"generator option {p!r} must be key=value")
        opts[key.strip()] = int(val)
    if "n" not in opts:
        raise InstanceError("generator spec needs n=...")
    if kind == "zero":
        return zero_instance(opts["n"])
    return random_instance(kind, opts["n"], opts.get("M", 2), rng)


# ---------------------------------------------------------------- JSON

def instance_from_dict(data: dict) -> SubmodularInstance:
    try:
        return make_instance(data["kind"], data["n"], data["payload"], data.get("M"))
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance record: {exc}") from None


def load_instance(path: str | Path) -> SubmodularInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: instance must be a JSON object")
    return instance_from_dict(data)


def save_instance(instance: SubmodularInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict()))
