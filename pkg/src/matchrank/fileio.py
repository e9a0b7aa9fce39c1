"""On-disk formats: probability triplets, models, samples, rankings, reports.

All JSON artifacts are written with sorted keys and fixed separators, so a
given in-memory object always serializes to identical bytes — runs can be
compared with ``cmp`` alone.  Parse errors carry file names and line numbers
where lines exist.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    InputError,
    ProbabilityModel,
    Ranking,
    RelevanceMatrix,
    SampleSet,
    SlotLayout,
    SparseProbMatrix,
)
from .evaluation import EvalReport
from .ranker import ALGORITHMS, TIE_BREAK

__all__ = [
    "read_prob_triplets",
    "write_prob_triplets",
    "ingest_model",
    "write_model",
    "read_model",
    "write_samples",
    "read_samples",
    "write_ranking",
    "read_ranking",
    "write_report",
    "read_report",
    "report_table",
    "ExperimentConfig",
    "load_config",
]

MODEL_FORMAT = "matchrank-model"
RANKING_FORMAT = "matchrank-ranking"
REPORT_FORMAT = "matchrank-report"
FORMAT_VERSION = 1


def _dump_compact(obj, path: str | Path):
    Path(path).write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def _dump_pretty(obj, path: str | Path):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load_json(path: str | Path, expect_format: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON ({e})")
    if not isinstance(obj, dict) or obj.get("format") != expect_format:
        raise InputError(f"{path}: expected a {expect_format} file")
    if obj.get("version") != FORMAT_VERSION:
        raise InputError(f"{path}: unsupported version {obj.get('version')!r}")
    return obj


# --------------------------------------------------------------------------
# probability triplet text files


def read_prob_triplets(path: str | Path) -> SparseProbMatrix:
    """Parse a whitespace triplet file.

    Line 1: ``candidates slots nnz``; then nnz lines ``candidate slot p``
    with 0-based ids.  Zero probabilities may be listed but are dropped;
    blank lines and ``#`` comments are allowed.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    rows = [
        (no, line.split())
        for no, raw in enumerate(lines, start=1)
        if (line := raw.split("#")[0].strip())
    ]
    if not rows:
        raise InputError(f"{path}: empty file")
    head_no, head = rows[0]
    if len(head) != 3:
        raise InputError(f"{path}:{head_no}: header must be 'candidates slots nnz'")
    try:
        c, s, nnz = (int(x) for x in head)
    except ValueError:
        raise InputError(f"{path}:{head_no}: header values must be integers")
    if c < 0 or s < 0 or nnz < 0:
        raise InputError(f"{path}:{head_no}: header values must be non-negative")
    if len(rows) - 1 != nnz:
        raise InputError(
            f"{path}: header promises {nnz} entries but found {len(rows) - 1}"
        )
    entries = []
    for no, parts in rows[1:]:
        if len(parts) != 3:
            raise InputError(f"{path}:{no}: expected 'candidate slot p'")
        try:
            a, t, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InputError(f"{path}:{no}: malformed numbers")
        entries.append((a, t, p))
    try:
        return SparseProbMatrix.from_triplets(c, s, entries)
    except InputError as e:
        raise InputError(f"{path}: {e}")


def write_prob_triplets(matrix: SparseProbMatrix, path: str | Path):
    out = [f"{matrix.candidates} {matrix.slots} {matrix.probs.size}"]
    rows = matrix.row_ids()
    for a, t, p in zip(rows.tolist(), matrix.indices.tolist(), matrix.probs.tolist()):
        out.append(f"{a} {t} {p!r}")
    Path(path).write_text("\n".join(out) + "\n")


def ingest_model(
    probs: SparseProbMatrix,
    slots_per_label: int = 1,
    max_clip: float | None = None,
) -> ProbabilityModel:
    """Independent model from a probability matrix.

    Each input column is a label; with ``slots_per_label`` = k, label t
    expands to slots [t*k, (t+1)*k) sharing its probability.  ``max_clip``
    caps every probability (useful when frequencies of 1 would make the
    "or"/"and" scores degenerate).
    """
    if slots_per_label < 1:
        raise InputError("slots_per_label must be at least 1")
    if max_clip is not None:
        probs = probs.clipped(max_clip)
    if slots_per_label > 1:
        k = slots_per_label
        indptr = np.zeros(probs.candidates + 1, dtype=np.int64)
        np.cumsum(np.diff(probs.indptr) * k, out=indptr[1:])
        base = probs.indices.astype(np.int64) * k
        indices = (base[:, None] + np.arange(k)[None, :]).ravel().astype(np.int32)
        vals = np.repeat(probs.probs, k)
        probs = SparseProbMatrix(
            probs.candidates, probs.slots * k, indptr, indices, vals
        )
    return ProbabilityModel.independent(probs)


# --------------------------------------------------------------------------
# model files


def write_model(model: ProbabilityModel, path: str | Path, metadata: dict | None = None):
    obj: dict = {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "metadata": metadata or {},
    }
    if model.kind == "group":
        obj["slots_per_group"] = list(model.layout.slots_per_group)
        obj["membership"] = model.membership.tolist()
        obj["group_prob"] = model.group_prob.tolist()
    else:
        m = model.marginals
        obj["candidates"] = m.candidates
        obj["slots"] = m.slots
        obj["entries"] = [
            [int(a), int(t), float(p)]
            for a, t, p in zip(m.row_ids().tolist(), m.indices.tolist(), m.probs.tolist())
        ]
    _dump_compact(obj, path)


def read_model(path: str | Path) -> tuple[ProbabilityModel, dict]:
    obj = _load_json(path, MODEL_FORMAT)
    try:
        if obj["kind"] == "group":
            model = ProbabilityModel.group_structured(
                SlotLayout(tuple(obj["slots_per_group"])),
                np.array(obj["membership"], dtype=np.int32),
                np.array(obj["group_prob"], dtype=np.float64),
            )
        elif obj["kind"] == "independent":
            model = ProbabilityModel.independent(
                SparseProbMatrix.from_triplets(
                    int(obj["candidates"]), int(obj["slots"]), obj["entries"]
                )
            )
        else:
            raise InputError(f"unknown model kind {obj.get('kind')!r}")
    except KeyError as e:
        raise InputError(f"{path}: missing field {e}")
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: malformed model ({e})")
    except InputError as e:
        raise InputError(f"{path}: {e}")
    return model, obj.get("metadata", {})


# --------------------------------------------------------------------------
# sample-set debug dumps (plain text)


def write_samples(samples: SampleSet, path: str | Path):
    out = [f"{samples.n} {samples.candidates} {samples.slots} {samples.seed}"]
    for i, m in enumerate(samples.samples):
        out.append(f"sample {i} {m.edge_count}")
        for a, t in zip(m.row_ids().tolist(), m.indices.tolist()):
            out.append(f"{a} {t}")
    Path(path).write_text("\n".join(out) + "\n")


def read_samples(path: str | Path) -> SampleSet:
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    if not lines:
        raise InputError(f"{path}: empty file")
    try:
        n, c, s, seed = (int(x) for x in lines[0].split())
    except ValueError:
        raise InputError(f"{path}:1: header must be 'n candidates slots seed'")
    pos = 1
    mats = []
    for i in range(n):
        if pos >= len(lines):
            raise InputError(f"{path}: truncated before sample {i}")
        parts = lines[pos].split()
        if len(parts) != 3 or parts[0] != "sample" or int(parts[1]) != i:
            raise InputError(f"{path}:{pos + 1}: expected 'sample {i} <edges>'")
        edges = int(parts[2])
        pos += 1
        pairs = []
        for j in range(edges):
            try:
                a, t = (int(x) for x in lines[pos + j].split())
            except (ValueError, IndexError):
                raise InputError(f"{path}:{pos + j + 1}: expected 'candidate slot'")
            pairs.append((a, t))
        pos += edges
        try:
            mats.append(RelevanceMatrix.from_edges(c, s, pairs))
        except InputError as e:
            raise InputError(f"{path}: sample {i}: {e}")
    return SampleSet(tuple(mats), seed)


# --------------------------------------------------------------------------
# ranking files


def write_ranking(
    ranking: Ranking,
    path: str | Path,
    algorithm: str,
    candidates: int,
    slots: int,
    n_samples: int,
    sample_seed: int,
    ranker_seed: int,
):
    obj = {
        "format": RANKING_FORMAT,
        "version": FORMAT_VERSION,
        "algorithm": algorithm,
        "tie_break": TIE_BREAK,
        "candidates": candidates,
        "slots": slots,
        "n_samples": n_samples,
        "sample_seed": sample_seed,
        "ranker_seed": ranker_seed,
        "order": ranking.order.tolist(),
        "prefix_gain": list(ranking.prefix_gain) if ranking.prefix_gain else None,
    }
    _dump_compact(obj, path)


def read_ranking(path: str | Path) -> tuple[Ranking, dict]:
    obj = _load_json(path, RANKING_FORMAT)
    try:
        pg = obj["prefix_gain"]
        ranking = Ranking(
            np.array(obj["order"], dtype=np.int32),
            tuple(pg) if pg is not None else None,
        )
    except KeyError as e:
        raise InputError(f"{path}: missing field {e}")
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: malformed ranking ({e})")
    except InputError as e:
        raise InputError(f"{path}: {e}")
    meta = {k: v for k, v in obj.items() if k not in ("order", "prefix_gain")}
    return ranking, meta


# --------------------------------------------------------------------------
# report files


def write_report(report: EvalReport, path: str | Path):
    obj = {
        "format": REPORT_FORMAT,
        "version": FORMAT_VERSION,
        "algorithm": report.algorithm,
        "candidates": report.candidates,
        "slots": report.slots,
        "n_samples": report.n_samples,
        "sample_seed": report.sample_seed,
        "draws": report.draws,
        "eval_seed": report.eval_seed,
        "per_draw_kmin": list(report.per_draw_kmin),
        "normalized_mean": report.normalized_mean,
        "normalized_std": report.normalized_std,
        "unfillable_count": report.unfillable_count,
        "config": report.config,
    }
    _dump_pretty(obj, path)


def read_report(path: str | Path) -> EvalReport:
    obj = _load_json(path, REPORT_FORMAT)
    try:
        return EvalReport(
            algorithm=obj["algorithm"],
            candidates=obj["candidates"],
            slots=obj["slots"],
            n_samples=obj["n_samples"],
            sample_seed=obj["sample_seed"],
            draws=obj["draws"],
            eval_seed=obj["eval_seed"],
            per_draw_kmin=tuple(obj["per_draw_kmin"]),
            normalized_mean=obj["normalized_mean"],
            normalized_std=obj["normalized_std"],
            unfillable_count=obj["unfillable_count"],
            config=obj["config"],
        )
    except KeyError as e:
        raise InputError(f"{path}: missing field {e}")


def report_table(reports: list[EvalReport]) -> tuple[str, list[list[str]]]:
    """Console text and CSV rows summarizing a list of reports.

    Rows are ordered best-first (ascending mean depth); reports where every
    draw was unfillable sink to the bottom.
    """
    ordered = sorted(
        reports,
        key=lambda r: (r.normalized_mean is None, r.normalized_mean or 0.0),
    )
    csv_rows = [
        ["algorithm", "label", "normalized_mean", "normalized_std", "unfillable", "draws"]
    ]
    for r in ordered:
        label = ""
        if "assumed_p_base" in r.config:
            label = f"p_base={r.config['assumed_p_base']}"
        mean = "n/a" if r.normalized_mean is None else f"{r.normalized_mean:.4f}"
        std = "n/a" if r.normalized_std is None else f"{r.normalized_std:.4f}"
        csv_rows.append(
            [r.algorithm, label, mean, std, str(r.unfillable_count), str(r.draws)]
        )
    widths = [max(len(row[i]) for row in csv_rows) for i in range(len(csv_rows[0]))]
    lines = []
    for irow, row in enumerate(csv_rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if irow == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines), csv_rows


# --------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Optional JSON-backed defaults for the command-line tools.

    Every section may be absent; command-line flags override section values.
    Recognized sections: ``synth`` (generator parameters), ``ingest``
    (slots_per_label, max_clip), ``sampling`` (n, seed), ``ranker``
    (algorithm, seed, stop_at, use_model_marginals), ``evaluation``
    (draws, seed), and a top-level ``threads``.
    """

    synth: dict
    ingest: dict
    sampling: dict
    ranker: dict
    evaluation: dict
    threads: int | None

    _SECTIONS = {
        "synth": {"groups", "slots_per_group", "candidates", "memberships", "p_base", "seed"},
        "ingest": {"slots_per_label", "max_clip"},
        "sampling": {"n", "seed"},
        "ranker": {"algorithm", "seed", "stop_at", "use_model_marginals"},
        "evaluation": {"draws", "seed"},
    }

    @classmethod
    def empty(cls) -> "ExperimentConfig":
        return cls({}, {}, {}, {}, {}, None)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise InputError("config root must be a JSON object")
        unknown = set(obj) - set(cls._SECTIONS) - {"threads"}
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sections = {}
        for name, allowed in cls._SECTIONS.items():
            sec = obj.get(name, {})
            if not isinstance(sec, dict):
                raise InputError(f"config section {name!r} must be an object")
            bad = set(sec) - allowed
            if bad:
                raise InputError(
                    f"unknown keys in config section {name!r}: {', '.join(sorted(bad))}"
                )
            sections[name] = sec
        threads = obj.get("threads")
        if threads is not None and (not isinstance(threads, int) or threads < 1):
            raise InputError("config threads must be a positive integer")
        algo = sections["ranker"].get("algorithm")
        if algo is not None and algo not in ALGORITHMS:
            raise InputError(
                f"unknown algorithm {algo!r} in config; valid: {', '.join(ALGORITHMS)}"
            )
        return cls(
            synth=sections["synth"],
            ingest=sections["ingest"],
            sampling=sections["sampling"],
            ranker=sections["ranker"],
            evaluation=sections["evaluation"],
            threads=threads,
        )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON ({e})")
    try:
        return ExperimentConfig.from_dict(obj)
    except InputError as e:
        raise InputError(f"{path}: {e}")
