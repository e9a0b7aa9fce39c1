"""Shared domain types: slot layouts, relevance matrices, probability models,
sample sets, and rankings.

All randomness in the library flows through :func:`substream`, which derives an
independent PCG64 generator from a user seed plus a structured spawn key.
Streams therefore never depend on evaluation order or thread schedule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InputError",
    "ContractError",
    "UNMATCHED",
    "PROB_CLIP",
    "substream",
    "SlotLayout",
    "RelevanceMatrix",
    "SparseProbMatrix",
    "ProbabilityModel",
    "SampleSet",
    "Ranking",
]


class InputError(ValueError):
    """Invalid user-supplied data: bad dimensions, malformed files, values out of range."""


class ContractError(RuntimeError):
    """An internal precondition was violated; indicates a bug in calling code."""


#: Sentinel for "no partner" in matching arrays.
UNMATCHED = -1

#: Probabilities in generated models are clipped into this closed range.
PROB_CLIP = (0.0001, 0.9999)

# Spawn-key purposes.  Every consumer of randomness owns one purpose so that
# sub-streams for model construction, sampling, evaluation draws, and the
# ranker never collide even under a shared top-level seed.
PURPOSE_MODEL = 0
PURPOSE_SAMPLE = 1
PURPOSE_EVAL = 2
PURPOSE_RANKER = 3


def substream(seed: int, purpose: int, *index: int) -> np.random.Generator:
    """Return a PCG64 generator for the sub-stream (purpose, *index) of `seed`."""
    ss = np.random.SeedSequence(seed, spawn_key=(purpose, *index))
    return np.random.Generator(np.random.PCG64(ss))


def _as_int_array(values, dtype, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise InputError(f"{name} must be integers, got dtype {arr.dtype}")
    return np.ascontiguousarray(arr, dtype=dtype)


@dataclass(frozen=True)
class SlotLayout:
    """Slots partitioned into groups; slot ids are dense and group-contiguous.

    Slot ``t`` belongs to group ``slot_to_group[t]``; group ``j`` owns the
    contiguous id range ``[group_start[j], group_start[j] + slots_per_group[j])``.
    """

    slots_per_group: tuple[int, ...]

    def __post_init__(self):
        if len(self.slots_per_group) < 1:
            raise InputError("layout needs at least one group")
        if any(int(n) < 0 for n in self.slots_per_group):
            raise InputError("slot counts must be non-negative")
        object.__setattr__(
            self, "slots_per_group", tuple(int(n) for n in self.slots_per_group)
        )

    @classmethod
    def uniform(cls, groups: int, slots_per_group: int) -> "SlotLayout":
        if groups < 1:
            raise InputError("layout needs at least one group")
        return cls((slots_per_group,) * groups)

    @property
    def group_count(self) -> int:
        return len(self.slots_per_group)

    @property
    def total_slots(self) -> int:
        return sum(self.slots_per_group)

    @property
    def group_sizes(self) -> np.ndarray:
        return np.array(self.slots_per_group, dtype=np.int64)

    @property
    def group_start(self) -> np.ndarray:
        """First slot id of each group."""
        starts = np.zeros(self.group_count, dtype=np.int64)
        np.cumsum(self.group_sizes[:-1], out=starts[1:])
        return starts

    @property
    def slot_to_group(self) -> np.ndarray:
        return np.repeat(np.arange(self.group_count, dtype=np.int32), self.group_sizes)

    def group_slots(self, group: int) -> np.ndarray:
        """Slot ids owned by `group`, in ascending order."""
        if not 0 <= group < self.group_count:
            raise InputError(f"group {group} out of range [0, {self.group_count})")
        start = int(self.group_start[group])
        return np.arange(start, start + self.slots_per_group[group], dtype=np.int32)


def _validate_csr(candidates: int, slots: int, indptr: np.ndarray, indices: np.ndarray):
    if candidates < 0 or slots < 0:
        raise InputError("dimensions must be non-negative")
    if indptr.shape != (candidates + 1,):
        raise InputError(f"indptr must have length {candidates + 1}")
    if indptr[0] != 0 or indptr[-1] != indices.shape[0]:
        raise InputError("indptr endpoints do not bracket the entry array")
    if np.any(np.diff(indptr) < 0):
        raise InputError("indptr must be non-decreasing")
    if indices.size:
        if indices.min() < 0 or indices.max() >= slots:
            raise InputError(f"slot ids must lie in [0, {slots})")
        # Sorted with no duplicates within each row: strictly increasing runs.
        diffs = np.diff(indices)
        row_break = np.zeros(len(diffs), dtype=bool)
        interior = indptr[1:-1]
        row_break[interior[(interior > 0) & (interior < indices.size)] - 1] = True
        if np.any(~row_break & (diffs <= 0)):
            raise InputError("slot ids must be strictly increasing within each row")


@dataclass(frozen=True, eq=False)
class RelevanceMatrix:
    """One realized 0/1 relevance matrix in CSR form over candidate rows.

    ``indices[indptr[a]:indptr[a+1]]`` lists the slots relevant to candidate
    ``a``, strictly increasing.  Immutable once constructed.
    """

    candidates: int
    slots: int
    indptr: np.ndarray  # int64, length candidates+1
    indices: np.ndarray  # int32, slot ids

    def __post_init__(self):
        object.__setattr__(self, "indptr", _as_int_array(self.indptr, np.int64, "indptr"))
        object.__setattr__(self, "indices", _as_int_array(self.indices, np.int32, "indices"))
        _validate_csr(self.candidates, self.slots, self.indptr, self.indices)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_edges(
        cls, candidates: int, slots: int, edges: Iterable[tuple[int, int]]
    ) -> "RelevanceMatrix":
        """Build from (candidate, slot) pairs; duplicates collapse to one edge."""
        pairs = sorted(set((int(a), int(t)) for a, t in edges))
        rows = np.array([p[0] for p in pairs], dtype=np.int64)
        cols = np.array([p[1] for p in pairs], dtype=np.int32)
        if rows.size and (rows.min() < 0 or rows.max() >= candidates):
            raise InputError(f"candidate ids must lie in [0, {candidates})")
        indptr = np.zeros(candidates + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=candidates), out=indptr[1:])
        return cls(candidates, slots, indptr, cols)

    @classmethod
    def from_dense(cls, dense) -> "RelevanceMatrix":
        arr = np.asarray(dense)
        if arr.ndim != 2:
            raise InputError("dense relevance matrix must be 2-D")
        rows, cols = np.nonzero(arr)
        c, s = arr.shape
        indptr = np.zeros(c + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=c), out=indptr[1:])
        return cls(c, s, indptr, cols.astype(np.int32))

    def row(self, a: int) -> np.ndarray:
        """Slots relevant to candidate `a` (ascending, read-only view)."""
        return self.indices[self.indptr[a] : self.indptr[a + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return int(self.indices.shape[0])

    def row_ids(self) -> np.ndarray:
        """Candidate id of every edge, aligned with `indices` (cached)."""
        cached = getattr(self, "_row_ids", None)
        if cached is None:
            cached = np.repeat(np.arange(self.candidates, dtype=np.int32), self.degrees())
            cached.setflags(write=False)
            object.__setattr__(self, "_row_ids", cached)
        return cached

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.row_ids().tolist(), self.indices.tolist()))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.candidates, self.slots), dtype=np.int8)
        dense[self.row_ids(), self.indices] = 1
        return dense

    def slot_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSC view: (indptr over slots, candidate ids per slot, ascending)."""
        cached = getattr(self, "_csc", None)
        if cached is None:
            order = np.argsort(self.indices, kind="stable")
            cands = self.row_ids()[order]
            sp = np.zeros(self.slots + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.indices, minlength=self.slots), out=sp[1:])
            cached = (sp, cands)
            object.__setattr__(self, "_csc", cached)
        return cached

    def tobytes(self) -> bytes:
        """Canonical byte encoding, for determinism checks."""
        head = np.array([self.candidates, self.slots], dtype=np.int64)
        return head.tobytes() + self.indptr.tobytes() + self.indices.tobytes()


@dataclass(frozen=True, eq=False)
class SparseProbMatrix:
    """Per-(candidate, slot) probabilities in CSR form; absent entries are 0."""

    candidates: int
    slots: int
    indptr: np.ndarray  # int64
    indices: np.ndarray  # int32
    probs: np.ndarray  # float64, each in (0, 1]

    def __post_init__(self):
        object.__setattr__(self, "indptr", _as_int_array(self.indptr, np.int64, "indptr"))
        object.__setattr__(self, "indices", _as_int_array(self.indices, np.int32, "indices"))
        object.__setattr__(
            self, "probs", np.ascontiguousarray(self.probs, dtype=np.float64)
        )
        _validate_csr(self.candidates, self.slots, self.indptr, self.indices)
        if self.probs.shape != self.indices.shape:
            raise InputError("probs must align with indices")
        if self.probs.size and (self.probs.min() <= 0.0 or self.probs.max() > 1.0):
            raise InputError("stored probabilities must lie in (0, 1]")
        for arr in (self.indptr, self.indices, self.probs):
            arr.setflags(write=False)

    @classmethod
    def from_dense(cls, dense) -> "SparseProbMatrix":
        arr = np.asarray(dense, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError("dense probability matrix must be 2-D")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InputError("probabilities must lie in [0, 1]")
        rows, cols = np.nonzero(arr)
        c, s = arr.shape
        indptr = np.zeros(c + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=c), out=indptr[1:])
        return cls(c, s, indptr, cols.astype(np.int32), arr[rows, cols])

    @classmethod
    def from_triplets(
        cls,
        candidates: int,
        slots: int,
        entries: Sequence[tuple[int, int, float]],
    ) -> "SparseProbMatrix":
        """Build from (candidate, slot, p) triplets; zero entries are dropped."""
        seen = set()
        kept = []
        for a, t, p in entries:
            a, t, p = int(a), int(t), float(p)
            if not 0 <= a < candidates:
                raise InputError(f"candidate id {a} out of range [0, {candidates})")
            if not 0 <= t < slots:
                raise InputError(f"slot id {t} out of range [0, {slots})")
            if not 0.0 <= p <= 1.0:
                raise InputError(f"probability {p} out of range [0, 1]")
            if (a, t) in seen:
                raise InputError(f"duplicate entry for candidate {a}, slot {t}")
            seen.add((a, t))
            if p > 0.0:
                kept.append((a, t, p))
        kept.sort()
        rows = np.array([e[0] for e in kept], dtype=np.int64)
        indptr = np.zeros(candidates + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=candidates), out=indptr[1:])
        cols = np.array([e[1] for e in kept], dtype=np.int32)
        vals = np.array([e[2] for e in kept], dtype=np.float64)
        return cls(candidates, slots, indptr, cols, vals)

    def row(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[a], self.indptr[a + 1]
        return self.indices[lo:hi], self.probs[lo:hi]

    def row_ids(self) -> np.ndarray:
        """Candidate id of every stored entry, aligned with `indices`."""
        return np.repeat(np.arange(self.candidates, dtype=np.int32), np.diff(self.indptr))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.candidates, self.slots), dtype=np.float64)
        dense[self.row_ids(), self.indices] = self.probs
        return dense

    def clipped(self, max_prob: float) -> "SparseProbMatrix":
        """Copy with every stored probability capped at `max_prob`."""
        if not 0.0 < max_prob <= 1.0:
            raise InputError("max_prob must lie in (0, 1]")
        return SparseProbMatrix(
            self.candidates,
            self.slots,
            self.indptr,
            self.indices,
            np.minimum(self.probs, max_prob),
        )

    def tobytes(self) -> bytes:
        head = np.array([self.candidates, self.slots], dtype=np.int64)
        return (
            head.tobytes()
            + self.indptr.tobytes()
            + self.indices.tobytes()
            + self.probs.tobytes()
        )


KIND_INDEPENDENT = "independent"
KIND_GROUP = "group"


@dataclass(frozen=True, eq=False)
class ProbabilityModel:
    """Distribution over relevance matrices.

    Two kinds:

    * ``independent`` — every (candidate, slot) entry is an independent
      Bernoulli with probability ``marginals[a, t]``.
    * ``group`` — each candidate belongs to a few groups; one Bernoulli per
      (candidate, group) toggles *all* slots of that group at once, so edges
      within a group are perfectly correlated for a given candidate.
    """

    kind: str
    marginals: SparseProbMatrix | None = None
    layout: SlotLayout | None = None
    membership: np.ndarray | None = None  # (candidates, memberships) int32, rows ascending
    group_prob: np.ndarray | None = None  # same shape, float64

    def __post_init__(self):
        if self.kind == KIND_INDEPENDENT:
            if self.marginals is None:
                raise InputError("independent model requires marginals")
            if self.layout is not None or self.membership is not None:
                raise InputError("independent model carries marginals only")
        elif self.kind == KIND_GROUP:
            if self.layout is None or self.membership is None or self.group_prob is None:
                raise InputError("group model requires layout, membership, group_prob")
            if self.marginals is not None:
                raise InputError("group model must not carry explicit marginals")
            mem = _as_int_array(self.membership, np.int32, "membership")
            gp = np.ascontiguousarray(self.group_prob, dtype=np.float64)
            if mem.ndim != 2 or gp.shape != mem.shape:
                raise InputError("membership and group_prob must share shape (candidates, memberships)")
            if mem.shape[1] < 1 or mem.shape[1] > self.layout.group_count:
                raise InputError("memberships per candidate must lie in [1, group_count]")
            if mem.size and (mem.min() < 0 or mem.max() >= self.layout.group_count):
                raise InputError("membership ids out of range")
            if mem.shape[1] > 1 and np.any(np.diff(mem, axis=1) <= 0):
                raise InputError("membership rows must be strictly increasing")
            if gp.size and (gp.min() <= 0.0 or gp.max() >= 1.0):
                raise InputError("group probabilities must lie strictly inside (0, 1)")
            mem.setflags(write=False)
            gp.setflags(write=False)
            object.__setattr__(self, "membership", mem)
            object.__setattr__(self, "group_prob", gp)
        else:
            raise InputError(f"unknown model kind {self.kind!r}")

    @classmethod
    def independent(cls, marginals: SparseProbMatrix) -> "ProbabilityModel":
        return cls(kind=KIND_INDEPENDENT, marginals=marginals)

    @classmethod
    def group_structured(
        cls, layout: SlotLayout, membership, group_prob
    ) -> "ProbabilityModel":
        return cls(
            kind=KIND_GROUP,
            layout=layout,
            membership=np.asarray(membership),
            group_prob=np.asarray(group_prob),
        )

    @property
    def candidates(self) -> int:
        if self.kind == KIND_INDEPENDENT:
            return self.marginals.candidates
        return self.membership.shape[0]

    @property
    def slots(self) -> int:
        if self.kind == KIND_INDEPENDENT:
            return self.marginals.slots
        return self.layout.total_slots

    def marginal_matrix(self) -> SparseProbMatrix:
        """Per-(candidate, slot) edge probabilities implied by the model."""
        if self.kind == KIND_INDEPENDENT:
            return self.marginals
        sizes = self.layout.group_sizes
        starts = self.layout.group_start
        c, a = self.membership.shape
        per_cand = sizes[self.membership].sum(axis=1)
        indptr = np.zeros(c + 1, dtype=np.int64)
        np.cumsum(per_cand, out=indptr[1:])
        flat_groups = self.membership.ravel()
        indices = _expand_group_blocks(flat_groups, starts, sizes)
        probs = np.repeat(self.group_prob.ravel(), sizes[flat_groups])
        return SparseProbMatrix(c, self.layout.total_slots, indptr, indices, probs)


def _expand_group_blocks(
    groups: np.ndarray, starts: np.ndarray, sizes: np.ndarray
) -> np.ndarray:
    """Concatenate the slot-id ranges of `groups`, preserving order.

    Equivalent to ``np.concatenate([arange(starts[g], starts[g]+sizes[g])
    for g in groups])`` without the Python loop.
    """
    lens = sizes[groups]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int32)
    keep = lens > 0
    g, lens = groups[keep], lens[keep]
    first = starts[g]
    steps = np.ones(total, dtype=np.int64)
    steps[0] = first[0]
    bounds = np.cumsum(lens)[:-1]
    steps[bounds] = first[1:] - (first[:-1] + lens[:-1] - 1)
    return np.cumsum(steps).astype(np.int32)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n relevance matrices drawn i.i.d. from one model, plus the seed used."""

    samples: tuple[RelevanceMatrix, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) < 1:
            raise InputError("a sample set needs at least one sample")
        c, s = self.samples[0].candidates, self.samples[0].slots
        for m in self.samples:
            if m.candidates != c or m.slots != s:
                raise InputError("all samples must share dimensions")

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def candidates(self) -> int:
        return self.samples[0].candidates

    @property
    def slots(self) -> int:
        return self.samples[0].slots

    def tobytes(self) -> bytes:
        head = np.array([self.n, self.seed], dtype=np.int64).tobytes()
        return head + b"".join(m.tobytes() for m in self.samples)


@dataclass(frozen=True, eq=False)
class Ranking:
    """An ordered list of distinct candidate ids, best first.

    ``prefix_gain[k]``, when present, is the total matching size over the
    ranker's sample set after committing the first k+1 candidates — an exact
    integer, non-decreasing in k.
    """

    order: np.ndarray  # int32 candidate ids
    prefix_gain: tuple[int, ...] | None = None

    def __post_init__(self):
        order = _as_int_array(self.order, np.int32, "order")
        if order.ndim != 1:
            raise InputError("order must be 1-D")
        if order.size and order.min() < 0:
            raise InputError("candidate ids must be non-negative")
        if np.unique(order).size != order.size:
            raise InputError("order must not repeat a candidate")
        order.setflags(write=False)
        object.__setattr__(self, "order", order)
        if self.prefix_gain is not None:
            pg = tuple(int(v) for v in self.prefix_gain)
            if len(pg) != order.size:
                raise InputError("prefix_gain must align with order")
            if any(b < a for a, b in zip(pg, pg[1:])) or (pg and pg[0] < 0):
                raise InputError("prefix_gain must be non-negative and non-decreasing")
            object.__setattr__(self, "prefix_gain", pg)

    def __len__(self) -> int:
        return int(self.order.size)

    def is_complete(self, candidates: int) -> bool:
        """True when the ranking is a full permutation of range(candidates)."""
        return len(self) == candidates
