"""Query answering: absorbing-chain mass propagation along rule bodies,
confidence-weighted candidate scoring over the top-K rules, expected-rank
computation for filtered evaluation, and per-candidate explanations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .kg import GraphIndex
from .rules import Rule, RuleBook, ScoredRule

# Mass entries below this are folded into the absorbed share to bound the
# sparse vector's growth on hub-heavy graphs; conservation stays exact.
PRUNE_EPS = 1e-15


@dataclass
class Distribution:
    """Sparse entity -> probability map plus the absorbing state's share."""

    mass: dict[int, float]
    absorbed: float

    def total(self) -> float:
        return math.fsum(self.mass.values()) + self.absorbed


def _advance(
    index: GraphIndex, mass: dict[int, float], relation: int
) -> tuple[dict[int, float], float]:
    """One chain step: split each node's mass uniformly over its successors;
    nodes with none send theirs to the absorbing state."""
    forward = index.forward
    grown: dict[int, float] = {}
    absorbed = 0.0
    get = grown.get
    for node, probability in mass.items():
        successors = forward.get((node, relation))
        if not successors:
            absorbed += probability
            continue
        share = probability / len(successors)
        for obj in successors:
            grown[obj] = get(obj, 0.0) + share
    if grown:
        tiny = [node for node, p in grown.items() if p < PRUNE_EPS]
        for node in tiny:
            absorbed += grown.pop(node)
    return grown, absorbed


def propagate_steps(
    index: GraphIndex, body: tuple[int, ...], source: int
) -> Iterator[Distribution]:
    """Yield the distribution after each step of the body's chain."""
    if not body:
        raise ValueError("rule body must be non-empty")
    mass: dict[int, float] = {source: 1.0}
    absorbed = 0.0
    for relation in body:
        mass, delta = _advance(index, mass, relation)
        absorbed += delta
        yield Distribution(dict(mass), absorbed)


def propagate(index: GraphIndex, body: tuple[int, ...], source: int) -> Distribution:
    """Distribution over entities (plus absorbed share) after walking ``body``.

    Exact chain semantics: revisits are allowed and the absorbing state is
    sticky, so total mass is conserved at every step.  Deterministic; no
    sampling is involved at inference time.
    """
    if not body:
        raise ValueError("rule body must be non-empty")
    mass: dict[int, float] = {source: 1.0}
    absorbed = 0.0
    for relation in body:
        mass, delta = _advance(index, mass, relation)
        absorbed += delta
    return Distribution(mass, absorbed)


@dataclass
class ScoredCandidates:
    """Candidate scores plus, optionally, the per-rule contributions behind them."""

    scores: dict[int, float]
    provenance: dict[int, list[tuple[Rule, float]]]


def score_candidates(
    index: GraphIndex,
    rulebook: RuleBook,
    source: int,
    relation: int,
    top_k: int | None,
    mode: str = "sum",
    with_provenance: bool = True,
) -> ScoredCandidates:
    """Aggregate reach-probability x confidence over the top-K rules for a head.

    Each rule contributes P(reach y | body chain from source) * confidence to
    every terminal y; contributions are summed (``mode="sum"``) or maxed
    (``mode="max"``).  ``top_k=None`` applies every rule.  Rules sharing a
    body prefix share its propagation via a prefix trie, which leaves per-rule
    distributions bit-identical to propagating each body on its own.  A
    relation without rules yields an empty result.
    """
    if top_k is not None and top_k < 1:
        raise ValueError(f"top_k must be >= 1 or None, got {top_k}")
    if mode not in ("sum", "max"):
        raise ValueError(f"mode must be 'sum' or 'max', got {mode!r}")
    rules = rulebook.top_k(relation, top_k)
    scores: dict[int, float] = {}
    provenance: dict[int, list[tuple[Rule, float]]] = {}
    if not rules:
        return ScoredCandidates(scores, provenance)

    children: dict[tuple[int, ...], set[int]] = {}
    terminal: dict[tuple[int, ...], list[ScoredRule]] = {}
    for scored in rules:
        body = scored.rule.body
        for i, relation_id in enumerate(body):
            children.setdefault(body[:i], set()).add(relation_id)
        terminal.setdefault(body, []).append(scored)

    summing = mode == "sum"

    def visit(prefix: tuple[int, ...], mass: dict[int, float]) -> None:
        for scored in terminal.get(prefix, ()):
            confidence = scored.confidence
            for candidate, probability in mass.items():
                contribution = probability * confidence
                if summing:
                    scores[candidate] = scores.get(candidate, 0.0) + contribution
                elif contribution > scores.get(candidate, 0.0):
                    scores[candidate] = contribution
                if with_provenance:
                    provenance.setdefault(candidate, []).append(
                        (scored.rule, contribution)
                    )
        for relation_id in sorted(children.get(prefix, ())):
            grown, _ = _advance(index, mass, relation_id)
            if grown:
                visit(prefix + (relation_id,), grown)

    visit((), {source: 1.0})
    return ScoredCandidates(scores, provenance)


# Scores within this relative distance count as tied.  Candidates whose exact
# values coincide can differ by an ulp once float products are reassociated
# (e.g. after rescaling every confidence by a constant); treating such noise
# as a strict order would make ranks depend on rounding accidents.
RANK_REL_TOL = 1e-12


def _scores_tie(a: float, b: float) -> bool:
    return abs(a - b) <= RANK_REL_TOL * (a if a > b else b)


def rank_stats(
    scores: dict[int, float],
    gold: int,
    filtered_out: set[int],
    universe: int,
) -> tuple[int, int]:
    """(#candidates strictly above gold, #candidates tied with gold) among the
    non-filtered universe; entities without a score count as score 0."""
    gold_score = scores.get(gold, 0.0)
    above = tied = scored_others = 0
    for candidate, value in scores.items():
        if candidate == gold or candidate in filtered_out:
            continue
        scored_others += 1
        if _scores_tie(value, gold_score):
            tied += 1
        elif value > gold_score:
            above += 1
    if gold_score == 0.0:
        unscored = universe - len(filtered_out) - 1 - scored_others
        tied += max(unscored, 0)
    return above, tied


def expected_rank(above: int, tied: int) -> float:
    """Expected filtered rank under a uniform tie-break: above + 1 + tied/2."""
    return above + 1 + tied / 2


def hits_credit(above: int, tied: int, k: int) -> float:
    """Probability a uniform tie-break lands the gold within the top k."""
    group = tied + 1
    return min(max((k - above) / group, 0.0), 1.0)


def rank_answer(
    scored: ScoredCandidates,
    gold: int,
    filtered_out: set[int],
    universe: int,
) -> float:
    """Expected rank of ``gold`` given candidate scores and filtered answers."""
    above, tied = rank_stats(scored.scores, gold, filtered_out, universe)
    return expected_rank(above, tied)


@dataclass
class Explanation:
    """One rule's contribution to a candidate, with a concrete grounding."""

    rule: Rule
    confidence: float
    contribution: float
    nodes: tuple[int, ...]
    edges: tuple[int, ...]


def _grounding_walk(
    index: GraphIndex, body: tuple[int, ...], source: int, candidate: int
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """First body-labeled walk source -> candidate in adjacency order.

    Walks may revisit nodes (chain semantics); a (node, depth) failure memo
    keeps the search linear in graph size times body length.
    """
    depth_count = len(body)
    dead: set[tuple[int, int]] = set()
    trail: list[int] = [source]

    def search(node: int, depth: int) -> bool:
        if depth == depth_count:
            return node == candidate
        if (node, depth) in dead:
            return False
        for successor in index.q_lookup(node, body[depth]):
            trail.append(successor)
            if search(successor, depth + 1):
                return True
            trail.pop()
        dead.add((node, depth))
        return False

    if search(source, 0):
        return tuple(trail), body
    return None


def explain(
    index: GraphIndex,
    rulebook: RuleBook,
    source: int,
    relation: int,
    candidate: int,
    top_k: int | None,
) -> list[Explanation]:
    """Every top-K rule that gives ``candidate`` mass, contribution-descending,
    each with one concrete grounding walk.  Contributions sum to the
    candidate's sum-mode score; an unreached candidate yields []."""
    scored = score_candidates(
        index, rulebook, source, relation, top_k, mode="sum", with_provenance=True
    )
    entries = scored.provenance.get(candidate, [])
    position: dict[Rule, tuple[int, float]] = {
        sr.rule: (i, sr.confidence)
        for i, sr in enumerate(rulebook.top_k(relation, top_k))
    }
    entries = sorted(entries, key=lambda item: (-item[1], position[item[0]][0]))
    explanations = []
    for rule, contribution in entries:
        walk = _grounding_walk(index, rule.body, source, candidate)
        if walk is None:
            raise RuntimeError(
                f"candidate {candidate} scored under rule {rule} but no grounding walk exists"
            )
        explanations.append(
            Explanation(rule, position[rule][1], contribution, walk[0], walk[1])
        )
    return explanations
