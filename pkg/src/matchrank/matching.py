"""Maximum bipartite matching: a batch solver plus incremental maintenance.

The greedy ranker never recomputes a matching from scratch.  It keeps one
:class:`MatchState` per sampled relevance matrix and relies on two facts about
bipartite matchings:

* adding one candidate to the pool raises the maximum matching size by 0 or 1,
  and by 1 exactly when an alternating path from that candidate reaches an
  unmatched slot;
* applying that augmenting path (flipping matched/unmatched edges along it)
  yields a maximum matching for the enlarged pool.

Alternating-path searches scan slots in ascending id order and expand
candidates in discovery order, so every operation is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import ContractError, InputError, RelevanceMatrix, SampleSet, UNMATCHED

__all__ = [
    "MatchState",
    "max_matching_size",
    "init_state",
    "gain_if_added",
    "commit_add",
    "commit_nonaugmenting",
    "augmenting_slots",
    "scan_augmenting_candidates",
    "avg_matching",
]


def max_matching_size(matrix: RelevanceMatrix, pool=None) -> int:
    """Exact maximum matching size between `pool` (default: all candidates)
    and the slots of `matrix`.  Hopcroft–Karp via scipy."""
    if pool is None:
        indptr, indices = matrix.indptr, matrix.indices
        rows = matrix.candidates
    else:
        pool = np.asarray(pool, dtype=np.int64).ravel()
        if pool.size and (pool.min() < 0 or pool.max() >= matrix.candidates):
            raise InputError("pool candidate ids out of range")
        if np.unique(pool).size != pool.size:
            raise InputError("pool must not repeat a candidate")
        counts = matrix.indptr[pool + 1] - matrix.indptr[pool]
        indptr = np.zeros(pool.size + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = (
            np.concatenate([matrix.row(int(a)) for a in pool])
            if pool.size
            else np.empty(0, dtype=np.int32)
        )
        rows = pool.size
    if indices.size == 0 or matrix.slots == 0:
        return 0
    m = sp.csr_matrix(
        (np.ones(indices.size, dtype=np.int8), indices, indptr),
        shape=(rows, matrix.slots),
    )
    match = maximum_bipartite_matching(m, perm_type="column")
    return int(np.count_nonzero(match != UNMATCHED))


@dataclass
class MatchState:
    """A maximum matching between the committed pool and the slots of one sample.

    Invariants (all maintained by :func:`commit_add`):

    * ``candidate_match[a] == t`` iff ``slot_match[t] == a``; both sides use
      ``UNMATCHED`` otherwise;
    * matched candidates lie in the pool and every matched pair is an edge;
    * ``size`` equals the number of matched pairs and is the maximum matching
      size achievable by the current pool.
    """

    sample_ref: int
    pool: np.ndarray  # bool, per candidate
    candidate_match: np.ndarray  # int32, per candidate
    slot_match: np.ndarray  # int32, per slot
    unmatched_slot: np.ndarray  # bool, per slot
    size: int = 0
    pool_count: int = 0

    @property
    def unmatched_slots(self) -> np.ndarray:
        """Unmatched slot ids, ascending."""
        return np.flatnonzero(self.unmatched_slot)

    def pool_ids(self) -> np.ndarray:
        return np.flatnonzero(self.pool)

    def check_invariants(self, matrix: RelevanceMatrix, check_maximality: bool = True):
        """Raise ContractError on any violated invariant (test/debug helper)."""
        matched_c = np.flatnonzero(self.candidate_match != UNMATCHED)
        matched_s = np.flatnonzero(self.slot_match != UNMATCHED)
        if matched_c.size != matched_s.size or matched_c.size != self.size:
            raise ContractError("matched-side counts disagree with size")
        for a in matched_c:
            t = int(self.candidate_match[a])
            if int(self.slot_match[t]) != a:
                raise ContractError(f"pair ({a}, {t}) not mutual")
            if not self.pool[a]:
                raise ContractError(f"matched candidate {a} outside pool")
            if t not in matrix.row(int(a)):
                raise ContractError(f"pair ({a}, {t}) is not an edge")
        if not np.array_equal(self.unmatched_slot, self.slot_match == UNMATCHED):
            raise ContractError("unmatched_slot mask out of sync")
        if self.pool_count != int(np.count_nonzero(self.pool)):
            raise ContractError("pool_count out of sync")
        if check_maximality:
            want = max_matching_size(matrix, self.pool_ids())
            if self.size != want:
                raise ContractError(f"size {self.size} not maximum ({want})")


def init_state(matrix: RelevanceMatrix, sample_ref: int = 0) -> MatchState:
    """Empty-pool state for one sample: size 0, every slot unmatched."""
    return MatchState(
        sample_ref=sample_ref,
        pool=np.zeros(matrix.candidates, dtype=bool),
        candidate_match=np.full(matrix.candidates, UNMATCHED, dtype=np.int32),
        slot_match=np.full(matrix.slots, UNMATCHED, dtype=np.int32),
        unmatched_slot=np.ones(matrix.slots, dtype=bool),
        size=0,
        pool_count=0,
    )


def _check_addable(state: MatchState, a: int, matrix: RelevanceMatrix):
    if not 0 <= a < matrix.candidates:
        raise InputError(f"candidate {a} out of range [0, {matrix.candidates})")
    if state.pool[a]:
        raise ContractError(f"candidate {a} already in pool")


def _find_augmenting_path(state: MatchState, a: int, matrix: RelevanceMatrix):
    """Alternating BFS from candidate `a` over the current pool.

    Returns the id of the reached unmatched slot and a per-slot predecessor
    array for path reconstruction, or (None, None) when no augmenting path
    exists.  Cheap common case first: any unmatched slot directly adjacent.
    """
    row = matrix.row(a)
    if row.size == 0 or state.size == matrix.slots:
        return None, None
    direct = row[state.unmatched_slot[row]]
    if direct.size:
        prev = np.empty(matrix.slots, dtype=np.int32)
        prev[direct[0]] = a
        return int(direct[0]), prev
    visited = np.zeros(matrix.slots, dtype=bool)
    prev = np.empty(matrix.slots, dtype=np.int32)
    visited[row] = True
    prev[row] = a
    frontier = row
    while frontier.size:
        # Slots in `frontier` are all matched; hop to their partners and expand.
        partners = state.slot_match[frontier]
        new_slots = []
        for b in partners:
            rb = matrix.row(int(b))
            fresh = rb[~visited[rb]]
            if fresh.size == 0:
                continue
            visited[fresh] = True
            prev[fresh] = b
            hit = fresh[state.unmatched_slot[fresh]]
            if hit.size:
                return int(hit[0]), prev
            new_slots.append(fresh)
        frontier = np.concatenate(new_slots) if new_slots else np.empty(0, np.int32)
    return None, None


def _apply_path(state: MatchState, a: int, goal: int, prev: np.ndarray):
    """Flip matched/unmatched edges along the path ending at unmatched `goal`."""
    t = goal
    while True:
        b = int(prev[t])
        old = int(state.candidate_match[b])
        state.candidate_match[b] = t
        state.slot_match[t] = b
        if b == a:
            break
        t = old
    state.unmatched_slot[goal] = False
    state.size += 1


def gain_if_added(state: MatchState, a: int, matrix: RelevanceMatrix) -> int:
    """Marginal matching gain (0 or 1) of adding candidate `a`; no mutation."""
    _check_addable(state, a, matrix)
    goal, _ = _find_augmenting_path(state, a, matrix)
    return 0 if goal is None else 1


def commit_add(state: MatchState, a: int, matrix: RelevanceMatrix) -> int:
    """Add candidate `a` to the pool, augmenting in place; returns the gain."""
    _check_addable(state, a, matrix)
    goal, prev = _find_augmenting_path(state, a, matrix)
    state.pool[a] = True
    state.pool_count += 1
    if goal is None:
        return 0
    _apply_path(state, a, goal, prev)
    return 1


def commit_nonaugmenting(state: MatchState, a: int, matrix: RelevanceMatrix) -> int:
    """Admit candidate `a` when the caller has proven it cannot augment.

    Skips the path search entirely — the caller vouches that no augmenting
    path from `a` exists, normally because `a`'s row misses every slot of a
    current :func:`augmenting_slots` mask (or is empty).  With that premise
    the matching is already maximum over the grown pool, so the add is pure
    bookkeeping.  Returns 0 to mirror :func:`commit_add`.
    """
    _check_addable(state, a, matrix)
    state.pool[a] = True
    state.pool_count += 1
    return 0


def augmenting_slots(state: MatchState, matrix: RelevanceMatrix) -> np.ndarray:
    """Boolean mask of slots from which an alternating path can finish.

    A candidate outside the pool augments the matching iff its row touches
    this set.  The set is built by walking backward from the unmatched slots
    through matched pool candidates (one hop per layer), costing O(edges
    incident to the set) rather than one search per queried candidate.
    The mask stays valid across pool additions that fail to augment: an
    unmatched pool candidate is never interior to an alternating path.
    """
    reach = state.unmatched_slot.copy()
    if state.size == 0 or not reach.any():
        return reach
    queue = np.flatnonzero(reach)
    slot_ptr, slot_cands = matrix.slot_adjacency()
    seen_cand = np.zeros(matrix.candidates, dtype=bool)
    while queue.size:
        cands = _gather_rows(slot_ptr, slot_cands, queue)
        cands = cands[state.pool[cands] & ~seen_cand[cands]]
        if cands.size == 0:
            break
        seen_cand[cands] = True
        partners = state.candidate_match[cands]
        partners = partners[partners != UNMATCHED]
        fresh = partners[~reach[partners]]
        if fresh.size == 0:
            break
        reach[fresh] = True
        queue = np.unique(fresh)
    return reach


def scan_augmenting_candidates(
    state: MatchState, frontier, matrix: RelevanceMatrix
) -> np.ndarray:
    """Ids of `frontier` candidates whose addition would raise the matching.

    One :func:`augmenting_slots` walk answers the question for the whole
    frontier at once; cost O(edges) independent of frontier size.
    """
    frontier = np.asarray(frontier, dtype=np.int64).ravel()
    if frontier.size and (frontier.min() < 0 or frontier.max() >= matrix.candidates):
        raise InputError("frontier candidate ids out of range")
    if np.any(state.pool[frontier]):
        raise ContractError("frontier candidates must lie outside the pool")
    if state.size == matrix.slots or frontier.size == 0 or matrix.edge_count == 0:
        return np.empty(0, dtype=np.int64)
    if state.size == 0:
        degrees = matrix.indptr[frontier + 1] - matrix.indptr[frontier]
        return frontier[degrees > 0]
    reach = augmenting_slots(state, matrix)
    hits = reach[matrix.indices]
    any_hit = np.bincount(
        matrix.row_ids(), weights=hits, minlength=matrix.candidates
    ) > 0
    return frontier[any_hit[frontier]]


def _gather_rows(indptr: np.ndarray, entries: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Concatenated entries of the given rows, preserving row order."""
    lens = indptr[rows + 1] - indptr[rows]
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=entries.dtype)
    keep = lens > 0
    r, lens = rows[keep], lens[keep]
    first = indptr[r]
    steps = np.ones(total, dtype=np.int64)
    steps[0] = first[0]
    bounds = np.cumsum(lens)[:-1]
    steps[bounds] = first[1:] - (first[:-1] + lens[:-1] - 1)
    return entries[np.cumsum(steps)]


def avg_matching(pool: Sequence[int], samples: SampleSet) -> Fraction:
    """Average maximum matching size of `pool` across the sample set.

    Exact rational: the per-sample sizes are integers and the average is their
    sum over n, so no floating-point noise enters comparisons.
    """
    pool = np.asarray(list(pool), dtype=np.int64)
    total = sum(max_matching_size(m, pool) for m in samples.samples)
    return Fraction(int(total), samples.n)
