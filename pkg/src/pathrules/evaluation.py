"""Filtered link-prediction metrics over both query directions, path-weight
ablations, and alpha/K parameter sweeps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .kg import Fact, GraphIndex, Vocabulary
from .mining import fork_context, mine_rulebook
from .rules import RuleBook
from .inference import expected_rank, hits_credit, rank_stats, score_candidates

DEFAULT_HITS = (1, 3, 10)


@dataclass
class Metrics:
    """Mean reciprocal rank and Hits@k over a set of queries."""

    mrr: float
    hits_at: dict[int, float]
    query_count: int


def build_known_answers(
    facts: Iterable[Fact], inverse: Sequence[int]
) -> dict[tuple[int, int], list[int]]:
    """(source, relation) -> known true answers, covering both directions."""
    known: dict[tuple[int, int], list[int]] = {}
    for s, r, o in facts:
        known.setdefault((s, r), []).append(o)
        known.setdefault((o, inverse[r]), []).append(s)
    return known


def _rank_group(
    index: GraphIndex,
    rulebook: RuleBook,
    group: tuple[tuple[int, int], list[tuple[int, int]]],
    known: dict[tuple[int, int], list[int]],
    universe: int,
    top_k: int | None,
    mode: str,
) -> list[tuple[int, tuple[int, int]]]:
    """Rank every gold of one (source, relation) query group.

    Queries sharing a (source, relation) pair see the same candidate scores,
    so the top-K propagation runs once per group.  Returns (query position,
    (above, tied)) pairs.
    """
    (source, relation), golds = group
    scored = score_candidates(
        index, rulebook, source, relation, top_k, mode, with_provenance=False
    )
    answers = known.get((source, relation), ())
    out = []
    for gold, position in golds:
        filtered = set(answers)
        filtered.discard(gold)
        out.append((position, rank_stats(scored.scores, gold, filtered, universe)))
    return out


_EVAL_STATE: dict = {}


def _init_eval_worker(index, rulebook, known, universe, top_k, mode):
    _EVAL_STATE["args"] = (index, rulebook, known, universe, top_k, mode)


def _eval_worker(group):
    index, rulebook, known, universe, top_k, mode = _EVAL_STATE["args"]
    return _rank_group(index, rulebook, group, known, universe, top_k, mode)


def evaluate(
    index: GraphIndex,
    rulebook: RuleBook,
    test_facts: Sequence[Fact],
    known_facts: Iterable[Fact],
    vocab: Vocabulary,
    *,
    top_k: int | None = 300,
    mode: str = "sum",
    hits_ks: Sequence[int] = DEFAULT_HITS,
    workers: int = 1,
) -> Metrics:
    """Filtered MRR / Hits@k over every test fact in both directions.

    Each fact (s, r, o) is ranked as the tail query (s, r, ?) with gold o and
    as the head query (o, inv(r), ?) with gold s, filtering all other answers
    known from ``known_facts`` (train + valid + test).  Ties are handled by
    expected rank, with fractional Hits credit where a tie group straddles k.
    Results are macro-averaged over the 2 * |test| queries and do not depend
    on query order.
    """
    if not test_facts:
        raise ValueError("empty test set")
    inverse = vocab.inverse_map()
    known = build_known_answers(dict.fromkeys(known_facts), inverse)
    universe = len(vocab.entities)

    queries: list[tuple[int, int, int]] = []
    for s, r, o in test_facts:
        queries.append((s, r, o))
        queries.append((o, inverse[r], s))

    # group queries sharing (source, relation): their candidate scores are
    # identical, so the top-K propagation runs once per group.
    grouped: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for position, (source, relation, gold) in enumerate(queries):
        grouped.setdefault((source, relation), []).append((gold, position))
    groups = list(grouped.items())

    stats: list = [None] * len(queries)
    context = fork_context() if workers > 1 else None
    if context is not None:
        chunk = max(1, len(groups) // (workers * 8))
        with context.Pool(
            workers,
            initializer=_init_eval_worker,
            initargs=(index, rulebook, known, universe, top_k, mode),
        ) as pool:
            for ranked in pool.imap(_eval_worker, groups, chunksize=chunk):
                for position, stat in ranked:
                    stats[position] = stat
    else:
        for group in groups:
            for position, stat in _rank_group(
                index, rulebook, group, known, universe, top_k, mode
            ):
                stats[position] = stat

    reciprocal = [1.0 / expected_rank(above, tied) for above, tied in stats]
    hits = {
        k: math.fsum(hits_credit(above, tied, k) for above, tied in stats) / len(stats)
        for k in hits_ks
    }
    return Metrics(
        mrr=math.fsum(reciprocal) / len(stats),
        hits_at=hits,
        query_count=len(stats),
    )


def metrics_to_json(metrics: Metrics, config: dict | None = None) -> str:
    payload = {
        "mrr": metrics.mrr,
        "hits": {str(k): v for k, v in sorted(metrics.hits_at.items())},
        "queries": metrics.query_count,
        "config": config or {},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def ablate_path_weight(
    index: GraphIndex,
    variant: str,
    *,
    alpha: int | None = 100,
    max_len: int = 3,
    beta: int | None = 100,
    answer_cap: int | None = 5,
    seed: int = 0,
    workers: int = 1,
) -> RuleBook:
    """Mine with an alternative per-path weight: ``markov`` (transition-product
    probability), ``length`` (1/path length) or ``constant`` (1).  The rest of
    the pipeline, including normalization, is unchanged."""
    rulebook, _ = mine_rulebook(
        index,
        alpha=alpha,
        max_len=max_len,
        beta=beta,
        answer_cap=answer_cap,
        seed=seed,
        path_weight=variant,
        workers=workers,
    )
    return rulebook


def sweep(
    parameter: str,
    values: Sequence,
    index: GraphIndex,
    vocab: Vocabulary,
    test_facts: Sequence[Fact],
    known_facts: Iterable[Fact],
    *,
    alpha: int | None = 100,
    max_len: int = 3,
    beta: int | None = 100,
    answer_cap: int | None = 5,
    seed: int = 0,
    path_weight: str = "markov",
    top_k: int | None = 300,
    mode: str = "sum",
    workers: int = 1,
) -> list[tuple[object, Metrics]]:
    """Re-run mine + evaluate per value of ``alpha`` or ``top_k``.

    The loaded index is reused throughout.  For a top_k sweep the rule book is
    mined once (mining does not depend on K); for an alpha sweep each value
    re-mines.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter not in ("alpha", "top_k"):
        raise ValueError(f"sweep parameter must be 'alpha' or 'top_k', got {parameter!r}")
    known = list(dict.fromkeys(known_facts))
    results: list[tuple[object, Metrics]] = []
    if parameter == "alpha":
        for value in values:
            rulebook, _ = mine_rulebook(
                index,
                alpha=value,
                max_len=max_len,
                beta=beta,
                answer_cap=answer_cap,
                seed=seed,
                path_weight=path_weight,
                workers=workers,
            )
            metrics = evaluate(
                index, rulebook, test_facts, known, vocab,
                top_k=top_k, mode=mode, workers=workers,
            )
            results.append((value, metrics))
    else:
        rulebook, _ = mine_rulebook(
            index,
            alpha=alpha,
            max_len=max_len,
            beta=beta,
            answer_cap=answer_cap,
            seed=seed,
            path_weight=path_weight,
            workers=workers,
        )
        for value in values:
            metrics = evaluate(
                index, rulebook, test_facts, known, vocab,
                top_k=value, mode=mode, workers=workers,
            )
            results.append((value, metrics))
    return results


def sweep_rows_to_csv(rows: list[tuple[object, Metrics]]) -> str:
    """CSV with header ``value,mrr,hits1,hits10``; None renders as unlimited."""
    lines = ["value,mrr,hits1,hits10"]
    for value, metrics in rows:
        shown = "unlimited" if value is None else str(value)
        lines.append(
            f"{shown},{metrics.mrr:.12g},{metrics.hits_at[1]:.12g},{metrics.hits_at[10]:.12g}"
        )
    return "\n".join(lines) + "\n"
