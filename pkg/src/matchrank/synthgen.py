"""Synthetic model construction and relevance sampling.

The group-structured generator assigns each candidate a few groups uniformly
at random and gives each (candidate, group) pair a success probability drawn
from a Gaussian whose mean rises linearly with the group id — later groups
are systematically easier.  Probabilities are drawn once, at model
construction; sampling a relevance matrix afterwards only flips the
per-(candidate, group) coins.

Keeping the probability draw inside the model (and keyed off the model seed
alone) means two models built with the same seed but different base rates
share memberships and noise exactly — which is what a controlled
misspecification comparison needs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    InputError,
    PROB_CLIP,
    PURPOSE_MODEL,
    PURPOSE_SAMPLE,
    ProbabilityModel,
    RelevanceMatrix,
    SampleSet,
    SlotLayout,
    SparseProbMatrix,
    _expand_group_blocks,
    substream,
)

__all__ = [
    "SynthParams",
    "build_synthetic_model",
    "draw_relevance",
    "sample_relevances",
    "two_block_model",
    "model_metadata",
]

#: Standard deviation of the per-(candidate, group) probability noise.
GAUSSIAN_STD = 0.1
#: Increment of the mean probability per group id (groups count from 1 here).
GROUP_SLOPE = 0.03


@dataclass(frozen=True)
class SynthParams:
    """Knobs of the group-structured generator.

    The noise scale, the per-group slope, and the clipping range are part of
    the generator's definition and are not configurable.
    """

    groups: int = 10
    slots_per_group: int = 50
    candidates: int = 10_000
    memberships: int = 2
    p_base: float = 0.3
    seed: int = 0

    gaussian_std = GAUSSIAN_STD
    group_slope = GROUP_SLOPE
    clip_range = PROB_CLIP

    def __post_init__(self):
        if self.groups < 1 or self.slots_per_group < 1 or self.candidates < 1:
            raise InputError("groups, slots_per_group and candidates must be positive")
        if self.memberships < 1:
            raise InputError("memberships must be positive")
        if self.memberships > self.groups:
            raise InputError("memberships exceed groups")
        if not 0.0 < self.p_base < 1.0:
            raise InputError("p_base must lie strictly inside (0, 1)")


def build_synthetic_model(params: SynthParams) -> ProbabilityModel:
    """Construct the group-structured model for `params`.

    Membership is a uniform draw of `memberships` distinct groups per
    candidate (via ranking one uniform key per group).  Success probabilities
    are ``N(p_base + slope * group_id, std)`` with 1-based group ids, clipped
    into the closed range `clip_range`.

    The draw order (membership keys first, then noise) is fixed, and the
    noise does not depend on `p_base`, so models that differ only in
    `p_base` share memberships and noise realizations.
    """
    rng = substream(params.seed, PURPOSE_MODEL)
    c, g, a = params.candidates, params.groups, params.memberships
    keys = rng.random((c, g))
    membership = np.sort(np.argsort(keys, axis=1)[:, :a], axis=1).astype(np.int32)
    noise = rng.normal(0.0, params.gaussian_std, size=(c, a))
    means = params.p_base + params.group_slope * (membership + 1)
    group_prob = np.clip(means + noise, *params.clip_range)
    layout = SlotLayout.uniform(g, params.slots_per_group)
    return ProbabilityModel.group_structured(layout, membership, group_prob)


def draw_relevance(model: ProbabilityModel, rng: np.random.Generator) -> RelevanceMatrix:
    """Draw one relevance matrix from `model` using `rng`.

    Group models flip one coin per (candidate, group) membership; a success
    makes the candidate relevant to every slot of that group.  Independent
    models flip one coin per stored (candidate, slot) probability.
    """
    if model.kind == "group":
        return _draw_group(model, rng)
    return _draw_independent(model.marginals, rng)


def _draw_group(model: ProbabilityModel, rng: np.random.Generator) -> RelevanceMatrix:
    layout = model.layout
    success = rng.random(model.group_prob.shape) < model.group_prob
    sizes = layout.group_sizes
    starts = layout.group_start
    per_cand = (success * sizes[model.membership]).sum(axis=1)
    indptr = np.zeros(model.candidates + 1, dtype=np.int64)
    np.cumsum(per_cand, out=indptr[1:])
    # Row-major selection keeps each candidate's groups in ascending order,
    # so the expanded slot ids are sorted within each row.
    won = model.membership[success]
    indices = _expand_group_blocks(won, starts, sizes)
    return RelevanceMatrix(model.candidates, layout.total_slots, indptr, indices)


def _draw_independent(marginals: SparseProbMatrix, rng: np.random.Generator) -> RelevanceMatrix:
    keep = rng.random(marginals.probs.shape) < marginals.probs
    counts = np.bincount(
        marginals.row_ids()[keep].astype(np.int64), minlength=marginals.candidates
    )
    indptr = np.zeros(marginals.candidates + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return RelevanceMatrix(
        marginals.candidates, marginals.slots, indptr, marginals.indices[keep]
    )


def sample_relevances(model: ProbabilityModel, n: int, seed: int) -> SampleSet:
    """Draw `n` i.i.d. relevance matrices.

    Sample i comes from the sub-stream (sample, i) of `seed`, so any sample
    can be regenerated alone and the set is independent of iteration order.
    """
    if n < 1:
        raise InputError("need at least one sample")
    return SampleSet(
        tuple(
            draw_relevance(model, substream(seed, PURPOSE_SAMPLE, i)) for i in range(n)
        ),
        seed,
    )


def two_block_model(
    candidates: int = 1000,
    slots: int = 10,
    p_first: float = 0.5,
    p_second: float = 0.4,
) -> ProbabilityModel:
    """Two-population benchmark: the first half of the candidates sees the
    first half of the slots with probability `p_first`, the second half sees
    the rest with `p_second`; entries are independent coins."""
    if candidates < 2 or slots < 2:
        raise InputError("need at least two candidates and two slots")
    for p in (p_first, p_second):
        if not 0.0 < p <= 1.0:
            raise InputError("block probabilities must lie in (0, 1]")
    half_c, half_s = candidates // 2, slots // 2
    dense = np.zeros((candidates, slots))
    dense[:half_c, :half_s] = p_first
    dense[half_c:, half_s:] = p_second
    return ProbabilityModel.independent(SparseProbMatrix.from_dense(dense))


def model_metadata(model: ProbabilityModel) -> dict:
    """Realized summary of a model, for report/metadata files."""
    meta: dict = {
        "kind": model.kind,
        "candidates": model.candidates,
        "slots": model.slots,
    }
    if model.kind == "group":
        counts = np.bincount(
            model.membership.ravel(), minlength=model.layout.group_count
        )
        meta["group_count"] = model.layout.group_count
        meta["slots_per_group"] = list(model.layout.slots_per_group)
        meta["members_per_group"] = counts.tolist()
        meta["memberships_per_candidate"] = int(model.membership.shape[1])
        meta["group_prob_min"] = float(model.group_prob.min())
        meta["group_prob_max"] = float(model.group_prob.max())
        meta["group_prob_mean"] = float(model.group_prob.mean())
    else:
        meta["stored_entries"] = int(model.marginals.probs.size)
        if model.marginals.probs.size:
            meta["prob_min"] = float(model.marginals.probs.min())
            meta["prob_max"] = float(model.marginals.probs.max())
            meta["prob_mean"] = float(model.marginals.probs.mean())
    return meta
