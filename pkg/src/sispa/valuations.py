"""Combinatorial valuations and their value, XOS and demand oracles.

Items are indexed ``0..m-1``. Item sets may be passed as any iterable of
indices or as a boolean mask of length ``m``; oracles return ``frozenset``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_BRUTE_FORCE_CAP = 20


class InstanceTooLargeError(ValueError):
    """An exact enumeration was requested beyond its configured cap."""


class Demand(NamedTuple):
    bundle: frozenset
    utility: float


def as_mask(S, m: int) -> np.ndarray:
    """Boolean membership mask of length ``m`` for an item set."""
    if isinstance(S, np.ndarray) and S.dtype == bool:
        if S.shape != (m,):
            raise ValueError(f"mask has shape {S.shape}, expected ({m},)")
        return S
    mask = np.zeros(m, dtype=bool)
    idx = list(S)
    if idx:
        idx = np.asarray(idx, dtype=int)
        if idx.min() < 0 or idx.max() >= m:
            raise ValueError(f"item index out of range for m={m}: {sorted(set(idx.tolist()))}")
        mask[idx] = True
    return mask


def as_set(mask: np.ndarray) -> frozenset:
    return frozenset(np.flatnonzero(mask).tolist())


@lru_cache(maxsize=32)
def _subset_masks(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    out = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    out.flags.writeable = False
    return out


def subset_masks(m: int, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> np.ndarray:
    """All ``2**m`` subsets as a ``(2**m, m)`` boolean array; row ``c`` is bitmask ``c``."""
    if m > cap:
        raise InstanceTooLargeError(f"2^{m} subsets exceeds the enumeration cap 2^{cap}")
    return _subset_masks(m)


def bitmask(mask: np.ndarray) -> int:
    return int(np.dot(mask.astype(np.int64), 1 << np.arange(mask.shape[-1], dtype=np.int64)))


class Valuation:
    """Base class for set functions ``v: 2^[m] -> R_+``.

    Subclasses implement :meth:`value_many`; everything else has a generic
    (possibly brute-force) fallback.
    """

    kind = "abstract"
    m: int

    def value_many(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, S) -> float:
        return float(self.value_many(as_mask(S, self.m)[None, :])[0])

    def value_table(self, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> np.ndarray:
        """Values of all subsets, indexed by bitmask."""
        return self.value_many(subset_masks(self.m, cap))

    def max_value(self) -> float:
        return self.value(np.ones(self.m, dtype=bool))

    def singleton_values(self) -> np.ndarray:
        return self.value_many(np.eye(self.m, dtype=bool))

    def xos_clause(self, S) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no XOS oracle")

    def demand(self, prices, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> Demand:
        return brute_force_demand(self, prices, cap)

    def scaled(self, factor: float) -> "Valuation":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def brute_force_demand(val: Valuation, prices, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> Demand:
    """Exact demand by enumerating every subset.

    Ties go to the smallest bundle, then the lowest bitmask.
    """
    p = np.asarray(prices, dtype=float)
    masks = subset_masks(val.m, cap)
    util = val.value_many(masks) - masks @ p
    best = util.max()
    ties = np.flatnonzero(util == best)
    pick = ties[np.argmin(masks[ties].sum(axis=1))]  # first minimum: lowest bitmask
    return Demand(as_set(masks[pick]), float(util[pick]))


class AdditiveValuation(Valuation):
    kind = "additive"

    def __init__(self, values: Sequence[float]):
        self.values = np.asarray(values, dtype=float).copy()
        if self.values.ndim != 1:
            raise ValueError("additive values must be a vector")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("additive values must be finite and nonnegative")
        self.values.flags.writeable = False
        self.m = self.values.shape[0]

    def value_many(self, masks):
        return np.asarray(masks, dtype=float) @ self.values

    def xos_clause(self, S):
        mask = as_mask(S, self.m)
        return np.where(mask, self.values, 0.0)

    def demand(self, prices, cap=DEFAULT_BRUTE_FORCE_CAP):
        margin = self.values - np.asarray(prices, dtype=float)
        take = margin > 0
        return Demand(as_set(take), float(margin[take].sum()))

    def scaled(self, factor):
        return AdditiveValuation(self.values * factor)

    def to_dict(self):
        return {"kind": self.kind, "values": self.values.tolist()}

    def __repr__(self):
        return f"AdditiveValuation({self.values.tolist()})"


class ExplicitXOS(Valuation):
    """Pointwise maximum of ``L`` additive clauses, ``v(S) = max_l sum_{j in S} c[l, j]``."""

    kind = "xos"

    def __init__(self, clauses):
        c = np.atleast_2d(np.asarray(clauses, dtype=float)).copy()
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("XOS valuation needs at least one clause over at least one item")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("XOS clauses must be finite and nonnegative")
        c.flags.writeable = False
        self.clauses = c
        self.m = c.shape[1]

    def value_many(self, masks):
        return (np.asarray(masks, dtype=float) @ self.clauses.T).max(axis=1)

    def max_value(self):
        return float(self.clauses.sum(axis=1).max())

    def xos_clause(self, S):
        mask = as_mask(S, self.m)
        sums = self.clauses[:, mask].sum(axis=1)
        return self.clauses[int(np.argmax(sums))].copy()

    def demand(self, prices, cap=DEFAULT_BRUTE_FORCE_CAP):
        # max_S max_l sum_{j in S}(c_lj - p_j) swaps to max_l sum_j (c_lj - p_j)^+
        margin = self.clauses - np.asarray(prices, dtype=float)
        gains = np.where(margin > 0, margin, 0.0).sum(axis=1)
        best = int(np.argmax(gains))
        return Demand(as_set(margin[best] > 0), float(gains[best]))

    def scaled(self, factor):
        return ExplicitXOS(self.clauses * factor)

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "clauses": self.clauses.tolist()}

    def __repr__(self):
        return f"ExplicitXOS(L={self.clauses.shape[0]}, m={self.m})"


class CoverageValuation(Valuation):
    """Weighted hypergraph coverage: item ``j`` covers the vertex set ``edges[j]``."""

    kind = "coverage"

    def __init__(self, weights, edges: Sequence[Iterable[int]]):
        w = np.asarray(weights, dtype=float).reshape(-1).copy()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("vertex weights must be finite and nonnegative")
        self.m = len(edges)
        if self.m < 1:
            raise ValueError("coverage valuation needs at least one item")
        n_vertices = w.shape[0]
        incidence = np.zeros((self.m, n_vertices), dtype=bool)
        for j, edge in enumerate(edges):
            for u in edge:
                if not 0 <= u < n_vertices:
                    raise ValueError(f"item {j} covers unknown vertex {u}")
                incidence[j, u] = True
        w.flags.writeable = False
        incidence.flags.writeable = False
        self.weights = w
        self.incidence = incidence

    @property
    def edges(self) -> list[list[int]]:
        return [np.flatnonzero(row).tolist() for row in self.incidence]

    def value_many(self, masks):
        covered = (np.asarray(masks, dtype=np.int64) @ self.incidence.astype(np.int64)) > 0
        return covered.astype(float) @ self.weights

    def xos_clause(self, S):
        mask = as_mask(S, self.m)
        clause = np.zeros(self.m)
        if not mask.any():
            return clause
        sub = self.incidence & mask[:, None]
        covered = sub.any(axis=0)
        owner = np.argmax(sub, axis=0)  # lowest-index covering item in S
        np.add.at(clause, owner[covered], self.weights[covered])
        return clause

    def scaled(self, factor):
        return CoverageValuation(self.weights * factor, self.edges)

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "weights": self.weights.tolist(), "edges": self.edges}

    def __repr__(self):
        return f"CoverageValuation(m={self.m}, vertices={self.weights.shape[0]})"


class UnitDemandUniform(Valuation):
    """``v(S) = value * 1{S nonempty}``."""

    kind = "unit_demand"

    def __init__(self, value: float, m: int):
        if value < 0 or not np.isfinite(value):
            raise ValueError("unit-demand value must be finite and nonnegative")
        if m < 1:
            raise ValueError("need at least one item")
        self.v = float(value)
        self.m = int(m)

    def value_many(self, masks):
        return np.asarray(masks, dtype=bool).any(axis=1) * self.v

    def xos_clause(self, S):
        mask = as_mask(S, self.m)
        clause = np.zeros(self.m)
        if mask.any():
            clause[int(np.argmax(mask))] = self.v
        return clause

    def demand(self, prices, cap=DEFAULT_BRUTE_FORCE_CAP):
        p = np.asarray(prices, dtype=float)
        j = int(np.argmin(p))
        if self.v - p[j] > 0:
            return Demand(frozenset([j]), self.v - float(p[j]))
        return Demand(frozenset(), 0.0)

    def scaled(self, factor):
        return UnitDemandUniform(self.v * factor, self.m)

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "value": self.v}

    def __repr__(self):
        return f"UnitDemandUniform(v={self.v}, m={self.m})"


def value(val: Valuation, S) -> float:
    return val.value(S)


def xos_oracle(val: Valuation, S) -> np.ndarray:
    """Additive clause tight on ``S`` and dominated by ``val`` everywhere."""
    mask = as_mask(S, val.m)
    if not mask.any():
        return np.zeros(val.m)
    return val.xos_clause(mask)


def demand_oracle(val: Valuation, prices, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> Demand:
    p = np.asarray(prices, dtype=float)
    if p.shape != (val.m,):
        raise ValueError(f"price vector has shape {p.shape}, expected ({val.m},)")
    if np.any(p < 0):
        raise ValueError("prices must be nonnegative")
    return val.demand(p, cap)


_KINDS = {
    "xos": lambda d: ExplicitXOS(d["clauses"]),
    "coverage": lambda d: CoverageValuation(d["weights"], d["edges"]),
    "unit_demand": lambda d: UnitDemandUniform(d["value"], d["m"]),
    "additive": lambda d: AdditiveValuation(d["values"]),
}


def valuation_from_dict(d: dict) -> Valuation:
    """Build and validate a valuation from its JSON-compatible dict form."""
    kind = d.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown valuation kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        val = _KINDS[kind](d)
    except KeyError as exc:
        raise ValueError(f"{kind} valuation is missing field {exc.args[0]!r}") from None
    if "m" in d and int(d["m"]) != val.m:
        raise ValueError(f"declared m={d['m']} but representation has m={val.m}")
    return val
