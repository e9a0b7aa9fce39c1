"""Evaluation: how deep into a ranking must one go to fill every slot?

For one realized relevance matrix, ``k_min`` is the smallest prefix length
whose maximum matching covers all slots; dividing by the slot count gives the
normalized depth (1.0 is perfect).  A draw whose full candidate set cannot
fill the slots has no ``k_min`` — such draws are reported and excluded from
the mean/deviation.

Evaluation draws come from dedicated per-draw sub-streams, so results are
identical regardless of how many worker processes compute them.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .core import (
    ContractError,
    InputError,
    PURPOSE_EVAL,
    ProbabilityModel,
    Ranking,
    RelevanceMatrix,
    SampleSet,
    substream,
)
from .matching import (
    augmenting_slots,
    commit_add,
    commit_nonaugmenting,
    init_state,
    max_matching_size,
)
from .ranker import RankerConfig, RankerStats, rank
from .synthgen import build_synthetic_model, draw_relevance, sample_relevances

__all__ = [
    "EvalReport",
    "prefix_match_curve",
    "k_min",
    "avg_matching_curve",
    "evaluate",
    "evaluate_ranking",
    "misspecification_run",
]


@dataclass(frozen=True)
class EvalReport:
    """Outcome of evaluating one ranking policy on fresh draws.

    ``per_draw_kmin`` holds one entry per evaluation draw, ``None`` marking a
    draw whose slots cannot all be filled even by the complete candidate set.
    ``normalized_mean``/``normalized_std`` (population deviation) summarize
    ``k_min / slots`` over the fillable draws and are ``None`` when no draw
    is fillable.
    """

    algorithm: str
    candidates: int
    slots: int
    n_samples: int
    sample_seed: int
    draws: int
    eval_seed: int
    per_draw_kmin: tuple[int | None, ...]
    normalized_mean: float | None
    normalized_std: float | None
    unfillable_count: int
    config: dict

    def __post_init__(self):
        if len(self.per_draw_kmin) != self.draws:
            raise InputError("per_draw_kmin must have one entry per draw")

    def normalized_kmins(self) -> list[float]:
        return [k / self.slots for k in self.per_draw_kmin if k is not None]


def prefix_match_curve(ranking: Ranking, matrix: RelevanceMatrix) -> np.ndarray:
    """Maximum matching size after each successive candidate of `ranking`."""
    _check_ranking_ids(ranking, matrix)
    state = init_state(matrix)
    out = np.zeros(len(ranking), dtype=np.int32)
    for i, a in enumerate(ranking.order):
        commit_add(state, int(a), matrix)
        out[i] = state.size
    return out


def k_min(ranking: Ranking, matrix: RelevanceMatrix, target: int | None = None) -> int | None:
    """Smallest prefix length of `ranking` that fills `target` slots.

    `target` defaults to all slots of `matrix`.  Returns ``None`` when even
    the full ranking cannot reach the target, which requires the ranking to
    cover every candidate — otherwise "unfillable" would be ambiguous.
    """
    _check_ranking_ids(ranking, matrix)
    if target is None:
        target = matrix.slots
    if not 0 <= target <= matrix.slots:
        raise InputError(f"target must lie in [0, {matrix.slots}]")
    if not ranking.is_complete(matrix.candidates):
        raise InputError("k_min needs a complete ranking")
    return _kmin_walk(matrix, ranking.order, target)


def _check_ranking_ids(ranking: Ranking, matrix: RelevanceMatrix):
    if len(ranking) and int(ranking.order.max()) >= matrix.candidates:
        raise InputError("ranking refers to candidates outside the matrix")


def _kmin_walk(matrix: RelevanceMatrix, order: np.ndarray, target: int) -> int | None:
    if target == 0:
        return 0
    # If even the full pool falls short there is no point walking the prefix.
    if max_matching_size(matrix) < target:
        return None
    state = init_state(matrix)
    reach = None  # augmenting-slot mask, rebuilt lazily after each gain
    for i, a in enumerate(order):
        a = int(a)
        row = matrix.row(a)
        if row.size == 0:
            commit_nonaugmenting(state, a, matrix)
            continue
        if reach is None and not state.unmatched_slot[row].any():
            reach = augmenting_slots(state, matrix)
        if reach is not None and not reach[row].any():
            commit_nonaugmenting(state, a, matrix)
            continue
        if commit_add(state, a, matrix) == 0:
            raise ContractError("augmenting-slot mask promised a gain")
        reach = None
        if state.size >= target:
            return i + 1
    raise AssertionError("full matching size promised target reachability")


def avg_matching_curve(ranking: Ranking, samples: SampleSet) -> tuple[Fraction, ...]:
    """Average matching size across `samples` after each ranking prefix.

    Exact rationals, suitable for comparisons without float tolerance.
    Matches ``prefix_gain / n`` for rankings produced by the greedy ranker.
    """
    if len(ranking) and int(ranking.order.max()) >= samples.candidates:
        raise InputError("ranking refers to candidates outside the sample set")
    states = [init_state(m, j) for j, m in enumerate(samples.samples)]
    full = [max_matching_size(m) for m in samples.samples]
    active = [j for j in range(samples.n) if full[j] > 0]
    total = 0
    out = []
    for a in ranking.order:
        still = []
        for j in active:
            total += commit_add(states[j], int(a), samples.samples[j])
            if states[j].size < full[j]:
                still.append(j)
        active = still
        out.append(Fraction(total, samples.n))
    return tuple(out)


def _kmin_chunk(
    model: ProbabilityModel, order: np.ndarray, eval_seed: int, lo: int, hi: int
) -> list[int | None]:
    """k_min of draws [lo, hi) — the process-pool work unit."""
    target = model.slots
    return [
        _kmin_walk(draw_relevance(model, substream(eval_seed, PURPOSE_EVAL, i)), order, target)
        for i in range(lo, hi)
    ]


def _per_draw_kmins(
    model: ProbabilityModel,
    order: np.ndarray,
    draws: int,
    eval_seed: int,
    threads: int,
) -> list[int | None]:
    if threads <= 1 or draws == 1:
        return _kmin_chunk(model, order, eval_seed, 0, draws)
    workers = min(threads, draws)
    bounds = np.linspace(0, draws, workers + 1, dtype=int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_kmin_chunk, model, order, eval_seed, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        out: list[int | None] = []
        # Reduce in submission order: the draw index alone determines each
        # result, so the thread count can never change the output.
        for f in futures:
            out.extend(f.result())
    return out


def evaluate_ranking(
    ranking: Ranking,
    model: ProbabilityModel,
    draws: int,
    eval_seed: int,
    threads: int = 1,
    *,
    algorithm: str,
    n_samples: int,
    sample_seed: int,
    config: dict | None = None,
) -> EvalReport:
    """Measure k_min of an existing ranking on fresh draws from `model`.

    The ranking must be a complete permutation of the model's candidates;
    otherwise a draw that the full candidate set could fill would be
    indistinguishable from a truly unfillable one.  `threads` only
    distributes the evaluation draws; it cannot affect any reported number.
    The keyword fields describe how the ranking was produced and are echoed
    into the report.
    """
    if draws < 1:
        raise InputError("need at least one evaluation draw")
    if not ranking.is_complete(model.candidates):
        raise InputError(
            f"ranking dimensions do not match the model "
            f"(a permutation of {model.candidates} candidates is required)"
        )
    kmins = _per_draw_kmins(model, ranking.order, draws, eval_seed, threads)
    normalized = [k / model.slots for k in kmins if k is not None]
    unfillable = sum(1 for k in kmins if k is None)
    if unfillable:
        warnings.warn(
            f"{unfillable} of {draws} evaluation draws cannot fill all "
            f"{model.slots} slots; they are excluded from the summary",
            stacklevel=2,
        )
    return EvalReport(
        algorithm=algorithm,
        candidates=model.candidates,
        slots=model.slots,
        n_samples=n_samples,
        sample_seed=sample_seed,
        draws=draws,
        eval_seed=eval_seed,
        per_draw_kmin=tuple(kmins),
        normalized_mean=float(np.mean(normalized)) if normalized else None,
        normalized_std=float(np.std(normalized)) if normalized else None,
        unfillable_count=unfillable,
        config=config if config is not None else {},
    )


def evaluate(
    cfg: RankerConfig,
    model: ProbabilityModel,
    n_samples: int,
    sample_seed: int,
    draws: int,
    eval_seed: int,
    sample_model: ProbabilityModel | None = None,
    threads: int = 1,
    stats: RankerStats | None = None,
    config_extra: dict | None = None,
) -> EvalReport:
    """Rank from sampled matrices, then measure k_min on fresh draws.

    The ranker sees samples from `sample_model` when given (a deliberately
    wrong model, say), while evaluation draws always come from `model`.
    """
    if cfg.stop_at is not None:
        raise InputError("evaluation needs complete rankings; unset stop_at")
    ranking_source = sample_model if sample_model is not None else model
    if (ranking_source.candidates, ranking_source.slots) != (model.candidates, model.slots):
        raise InputError("sample_model dimensions must match the evaluation model")
    samples = sample_relevances(ranking_source, n_samples, sample_seed)
    ranking = rank(samples, cfg, stats=stats)
    config = {
        "algorithm": cfg.algorithm,
        "tie_break": cfg.tie_break,
        "seed": cfg.seed,
        "stop_at": cfg.stop_at,
        "misspecified_sampling": sample_model is not None,
    }
    if config_extra:
        config.update(config_extra)
    return evaluate_ranking(
        ranking,
        model,
        draws,
        eval_seed,
        threads,
        algorithm=cfg.algorithm,
        n_samples=n_samples,
        sample_seed=sample_seed,
        config=config,
    )


def misspecification_run(
    base_params,
    assumed_p_bases,
    cfg: RankerConfig,
    n_samples: int,
    sample_seed: int,
    draws: int,
    eval_seed: int,
    threads: int = 1,
) -> list[EvalReport]:
    """Evaluate rankings built under assumed base rates against the true model.

    `base_params` defines the true generator.  For each assumed base rate a
    model is built with the *same* seed — sharing memberships and noise, so
    the only difference is the success-rate level — and its samples drive the
    ranking, while evaluation draws always come from the true model.
    """
    true_model = build_synthetic_model(base_params)
    reports = []
    for p_base in assumed_p_bases:
        assumed = None
        if p_base != base_params.p_base:
            assumed = build_synthetic_model(replace(base_params, p_base=p_base))
        reports.append(
            evaluate(
                cfg,
                true_model,
                n_samples,
                sample_seed,
                draws,
                eval_seed,
                sample_model=assumed,
                threads=threads,
                config_extra={
                    "assumed_p_base": p_base,
                    "true_p_base": base_params.p_base,
                },
            )
        )
    return reports
