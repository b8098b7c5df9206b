"""Rule extraction.

Single-hop rules come from set intersections over shared (subject, object)
pairs; longer rules come from bidirectional BFS between a query subject and
its answers.  Every discovered path is converted to a rule immediately and
only per-rule running sums are kept, so memory stays proportional to the
rule set rather than the path set.
"""

from __future__ import annotations

import hashlib
import multiprocessing
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple

from .kg import Fact, GraphIndex
from .rules import Rule, RuleBook, ScoredRule, rule_sort_key

PATH_WEIGHTS = ("markov", "length", "constant")

ORACLE_MAX_ENTITIES = 200


class LabeledPath(NamedTuple):
    """A simple path: pairwise-distinct nodes and the relations linking them."""

    nodes: tuple[int, ...]
    edges: tuple[int, ...]


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from ints/strings; independent of platform and hash seed."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(repr(part).encode())
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "big")


def sample_facts(
    index: GraphIndex, alpha: int | None, seed: int
) -> dict[int, list[Fact]]:
    """Per relation (inverses included), min(alpha, available) facts uniformly
    without replacement.  ``alpha=None`` keeps everything.  Each relation uses
    its own derived RNG, so the draw is independent of iteration order."""
    if alpha is not None and alpha < 1:
        raise ValueError(f"alpha must be >= 1 or None, got {alpha}")
    sampled: dict[int, list[Fact]] = {}
    for relation in sorted(index.by_relation):
        facts = index.by_relation[relation]
        if alpha is None or alpha >= len(facts):
            sampled[relation] = list(facts)
        else:
            rng = random.Random(derive_seed(seed, "sample", relation))
            sampled[relation] = sorted(rng.sample(facts, alpha))
    return sampled


@dataclass
class ConfAccumulator:
    """Running reachability-mass sums per rule plus sampled-query counts."""

    mass_sums: dict[Rule, float] = field(default_factory=dict)
    query_count: dict[int, int] = field(default_factory=dict)

    def add_fact_sums(self, fact_sums: dict[Rule, float]) -> None:
        sums = self.mass_sums
        for rule, value in fact_sums.items():
            sums[rule] = sums.get(rule, 0.0) + value

    @staticmethod
    def query_counts_for(sampled: dict[int, list[Fact]]) -> dict[int, int]:
        return {relation: len(facts) for relation, facts in sampled.items() if facts}

    @staticmethod
    def combine_same_sample(a: "ConfAccumulator", b: "ConfAccumulator") -> "ConfAccumulator":
        """Merge accumulators built from the same sampled facts (e.g. the
        single-hop and multi-hop passes); counts must agree, sums add."""
        if a.query_count != b.query_count:
            raise ValueError("accumulators were built from different samples")
        merged = ConfAccumulator(dict(a.mass_sums), dict(a.query_count))
        merged.add_fact_sums(b.mass_sums)
        return merged


def single_hop_mass(index: GraphIndex, fact: Fact, path_weight: str = "markov") -> dict[Rule, float]:
    """Reachability mass one fact (s, r, o) adds to each length-1 rule.

    For every relation r_j != r that also links s to o, the rule r_j => r
    gains |(Q(s,r) ∩ Q(s,r_j)) \\ {s}| / |Q(s,r_j)|: the one-step chain mass
    landing on a valid answer.  The subject itself is not a valid answer of a
    simple one-step path, hence the exclusion.  Non-markov weight variants
    count satisfied answers instead of mass.
    """
    s, r, o = fact
    answers = set(index.q_lookup(s, r))
    answers.discard(s)
    sums: dict[Rule, float] = {}
    if not answers:
        return sums
    for r_j in index.relations_of.get(s, ()):
        if r_j == r:
            continue
        if not index.has_fact(s, r_j, o):
            continue
        objects = index.q_lookup(s, r_j)
        hits = len(answers.intersection(objects))
        if not hits:
            continue
        if path_weight == "markov":
            value = hits / len(objects)
        else:  # length and constant coincide at body length 1
            value = float(hits)
        sums[Rule(r, (r_j,))] = value
    return sums


def mine_single_hop(
    index: GraphIndex,
    sampled_facts: dict[int, list[Fact]],
    path_weight: str = "markov",
) -> ConfAccumulator:
    """Accumulate length-1 rule mass over all sampled facts."""
    acc = ConfAccumulator(query_count=ConfAccumulator.query_counts_for(sampled_facts))
    for relation in sorted(sampled_facts):
        for fact in sampled_facts[relation]:
            acc.add_fact_sums(single_hop_mass(index, fact, path_weight))
    return acc


def bibfs_paths(
    index: GraphIndex,
    source: int,
    targets: Iterable[int],
    max_len: int,
    beta: int | None = None,
    excluded_edges: frozenset[tuple[int, int, int]] = frozenset(),
    seed: int = 0,
    *,
    rng: random.Random | None = None,
    edge_cache: dict[int, list[tuple[int, int]]] | None = None,
) -> Iterator[LabeledPath]:
    """Every simple labeled path from ``source`` to any target, 2..max_len edges.

    Meet-in-the-middle enumeration: forward partial paths of length ceil(l/2)
    from the source are joined with backward partial paths of length
    floor(l/2) grown from the targets (stored in forward orientation, using
    inverse relations to walk edges backwards).  Fixing that split per total
    length l makes each path appear exactly once, so with ``beta=None`` the
    emitted set is the complete simple-path set.

    ``beta`` caps the children considered each time a node is expanded, in
    both frontiers, by uniform sampling from the node's labeled out-edges.
    Edges in ``excluded_edges`` (directed (s, r, o) triples) are never
    traversed.
    """
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    if beta is not None and beta < 1:
        raise ValueError(f"beta must be >= 1 or None, got {beta}")
    target_set = frozenset(targets)
    if not target_set:
        return
    if rng is None:
        rng = random.Random(seed)
    if edge_cache is None:
        edge_cache = {}
    inverse = index.inverse

    def expand(node: int) -> list[tuple[int, int]]:
        edges = edge_cache.get(node)
        if edges is None:
            edges = index.edges_of(node)
            edge_cache[node] = edges
        if beta is not None and len(edges) > beta:
            edges = rng.sample(edges, beta)
        return edges

    forward_depth = (max_len + 1) // 2
    backward_depth = max_len // 2

    # depth -> endpoint -> list of (nodes, edges) partial paths
    forward: dict[int, dict[int, list[tuple[tuple[int, ...], tuple[int, ...]]]]] = {}
    level = [((source,), ())]
    for depth in range(1, forward_depth + 1):
        bucket: dict[int, list] = {}
        grown = []
        for nodes, edges in level:
            tip = nodes[-1]
            for relation, obj in expand(tip):
                if obj in nodes:
                    continue
                if (tip, relation, obj) in excluded_edges:
                    continue
                partial = (nodes + (obj,), edges + (relation,))
                grown.append(partial)
                bucket.setdefault(obj, []).append(partial)
        forward[depth] = bucket
        level = grown

    backward: dict[int, dict[int, list[tuple[tuple[int, ...], tuple[int, ...]]]]] = {}
    level = [((target,), ()) for target in sorted(target_set)]
    for depth in range(1, backward_depth + 1):
        bucket = {}
        grown = []
        for nodes, edges in level:
            tip = nodes[0]
            # (tip, relation, origin) indexed means (origin, inverse[relation], tip)
            # is the forward edge entering this partial path.
            for relation, origin in expand(tip):
                if origin in nodes:
                    continue
                forward_relation = inverse[relation]
                if (origin, forward_relation, tip) in excluded_edges:
                    continue
                partial = ((origin,) + nodes, (forward_relation,) + edges)
                grown.append(partial)
                bucket.setdefault(origin, []).append(partial)
        backward[depth] = bucket
        level = grown

    for total in range(2, max_len + 1):
        front = forward.get((total + 1) // 2)
        back = backward.get(total // 2)
        if not front or not back:
            continue
        for meet, front_paths in front.items():
            back_paths = back.get(meet)
            if not back_paths:
                continue
            for front_nodes, front_edges in front_paths:
                seen_nodes = set(front_nodes)
                for back_nodes, back_edges in back_paths:
                    tail = back_nodes[1:]
                    if seen_nodes.intersection(tail):
                        continue
                    yield LabeledPath(front_nodes + tail, front_edges + back_edges)


def path_probability(path: LabeledPath, index: GraphIndex) -> float:
    """Product of uniform transition probabilities 1/fanout along the path."""
    probability = 1.0
    nodes, edges = path
    for step, relation in enumerate(edges):
        fanout = index.fanout(nodes[step], relation)
        if fanout == 0:
            raise ValueError(
                f"path claims edge ({nodes[step]}, {relation}, {nodes[step + 1]}) "
                "but the index has no such adjacency"
            )
        probability /= fanout
    return probability


def _weight_of(path: LabeledPath, index: GraphIndex, path_weight: str) -> float:
    if path_weight == "markov":
        return path_probability(path, index)
    if path_weight == "length":
        return 1.0 / len(path.edges)
    if path_weight == "constant":
        return 1.0
    raise ValueError(f"unknown path weight {path_weight!r}")


def multi_hop_mass(
    index: GraphIndex,
    fact: Fact,
    max_len: int,
    beta: int | None,
    answer_cap: int | None,
    rng: random.Random,
    path_weight: str = "markov",
    edge_cache: dict | None = None,
) -> dict[Rule, float]:
    """Reachability mass one sampled fact adds to each rule of length 2..max_len.

    The fact's own edge and its inverse are barred from the search so the
    answer edge cannot leak into rule bodies.  When the query has more than
    ``answer_cap`` answers, that many targets are drawn uniformly.
    """
    s, r, o = fact
    answers = index.q_lookup(s, r)
    if answer_cap is not None and len(answers) > answer_cap:
        targets: Iterable[int] = rng.sample(answers, answer_cap)
    else:
        targets = answers
    excluded = frozenset(((s, r, o), (o, index.inverse[r], s)))
    sums: dict[Rule, float] = {}
    for path in bibfs_paths(
        index, s, targets, max_len, beta, excluded, rng=rng, edge_cache=edge_cache
    ):
        rule = Rule(r, path.edges)
        sums[rule] = sums.get(rule, 0.0) + _weight_of(path, index, path_weight)
    return sums


def _canonical_fact_order(sampled: dict[int, list[Fact]]) -> list[Fact]:
    return [fact for relation in sorted(sampled) for fact in sampled[relation]]


def fork_context():
    """The fork multiprocessing context, or None where fork is unavailable
    (workers then fall back to the serial path, which is bit-identical)."""
    try:
        return multiprocessing.get_context("fork")
    except ValueError:
        return None


# Worker state for fork-based pools; populated by the initializer.
_WORKER: dict = {}


def _init_multi_hop_worker(index, max_len, beta, answer_cap, seed, path_weight):
    _WORKER["args"] = (index, max_len, beta, answer_cap, seed, path_weight)
    _WORKER["edge_cache"] = {}


def _multi_hop_worker(fact: Fact) -> dict[Rule, float]:
    index, max_len, beta, answer_cap, seed, path_weight = _WORKER["args"]
    rng = random.Random(derive_seed(seed, *fact))
    return multi_hop_mass(
        index, fact, max_len, beta, answer_cap, rng, path_weight, _WORKER["edge_cache"]
    )


def mine_multi_hop(
    index: GraphIndex,
    alpha: int | None,
    max_len: int,
    beta: int | None,
    seed: int,
    *,
    answer_cap: int | None = 5,
    path_weight: str = "markov",
    workers: int = 1,
    sampled_facts: dict[int, list[Fact]] | None = None,
) -> ConfAccumulator:
    """Accumulate rule mass from bidirectional search around every sampled fact.

    Each fact gets an RNG derived from (seed, fact), so results do not depend
    on evaluation order and parallel runs reproduce serial ones bit for bit:
    per-fact sums are folded into the accumulator in canonical fact order
    either way.
    """
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2 for multi-hop mining, got {max_len}")
    sampled = sampled_facts if sampled_facts is not None else sample_facts(index, alpha, seed)
    facts = _canonical_fact_order(sampled)
    acc = ConfAccumulator(query_count=ConfAccumulator.query_counts_for(sampled))

    context = fork_context() if workers > 1 else None
    if context is not None and facts:
        chunk = max(1, len(facts) // (workers * 8))
        with context.Pool(
            workers,
            initializer=_init_multi_hop_worker,
            initargs=(index, max_len, beta, answer_cap, seed, path_weight),
        ) as pool:
            for fact_sums in pool.imap(_multi_hop_worker, facts, chunksize=chunk):
                acc.add_fact_sums(fact_sums)
    else:
        edge_cache: dict = {}
        for fact in facts:
            rng = random.Random(derive_seed(seed, *fact))
            acc.add_fact_sums(
                multi_hop_mass(
                    index, fact, max_len, beta, answer_cap, rng, path_weight, edge_cache
                )
            )
    return acc


def normalize_confidence(acc: ConfAccumulator) -> RuleBook:
    """Mass sums divided by sampled-query counts, grouped and sorted.

    Confidence is the mean per-query reachability mass; each per-query term
    lies in [0, 1], so the mean does too (clipped against stray float
    accumulation above 1).  Rules that never fired carry no entry.
    """
    by_head: dict[int, list[ScoredRule]] = {}
    for rule, total in acc.mass_sums.items():
        count = acc.query_count.get(rule.head, 0)
        if count < 1:
            raise ValueError(
                f"rule with head {rule.head} has mass but no sampled queries"
            )
        confidence = min(total / count, 1.0)
        if confidence <= 0.0:
            continue
        by_head.setdefault(rule.head, []).append(ScoredRule(rule, confidence))
    for group in by_head.values():
        group.sort(key=rule_sort_key)
    return RuleBook(dict(sorted(by_head.items())))


def mine_rulebook(
    index: GraphIndex,
    *,
    alpha: int | None = 100,
    max_len: int = 3,
    beta: int | None = 100,
    answer_cap: int | None = 5,
    seed: int = 0,
    path_weight: str = "markov",
    workers: int = 1,
) -> tuple[RuleBook, dict]:
    """Full extraction pipeline: sample once, run both passes, normalize.

    Returns the rule book plus a stats dict (facts sampled, rules found,
    per-phase seconds) for timing reports.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    if path_weight not in PATH_WEIGHTS:
        raise ValueError(f"path_weight must be one of {PATH_WEIGHTS}, got {path_weight!r}")
    started = time.perf_counter()
    sampled = sample_facts(index, alpha, seed)
    acc = mine_single_hop(index, sampled, path_weight)
    if max_len >= 2:
        multi = mine_multi_hop(
            index,
            alpha,
            max_len,
            beta,
            seed,
            answer_cap=answer_cap,
            path_weight=path_weight,
            workers=workers,
            sampled_facts=sampled,
        )
        # Rule keys are disjoint across the passes (length 1 vs >= 2).
        acc = ConfAccumulator.combine_same_sample(acc, multi)
    mined = time.perf_counter()
    rulebook = normalize_confidence(acc)
    finished = time.perf_counter()
    stats = {
        "facts_sampled": sum(len(facts) for facts in sampled.values()),
        "rules_found": len(rulebook),
        "mine_seconds": mined - started,
        "normalize_seconds": finished - mined,
    }
    return rulebook, stats


def brute_force_reachability_mass(
    index: GraphIndex,
    rule: Rule,
    source: int,
    excluded_edges: frozenset[tuple[int, int, int]] = frozenset(),
) -> float:
    """Exact reachability mass of ``rule`` from ``source`` by exhaustive DFS.

    Test oracle: enumerates, in exact rational arithmetic, every simple path
    whose edge labels equal the rule body, and sums the products of uniform
    transition probabilities over paths ending in an answer of
    (source, head).  Deliberately independent of the bidirectional search.
    Refuses graphs with more than 200 entities.
    """
    if index.entity_count > ORACLE_MAX_ENTITIES:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_ENTITIES} entities, "
            f"index has {index.entity_count}"
        )
    answers = set(index.q_lookup(source, rule.head))
    answers.discard(source)
    body = rule.body
    total = Fraction(0)

    def walk(node: int, depth: int, probability: Fraction, visited: frozenset) -> None:
        nonlocal total
        if depth == len(body):
            if node in answers:
                total += probability
            return
        relation = body[depth]
        successors = index.q_lookup(node, relation)
        if not successors:
            return
        share = Fraction(1, len(successors))
        for successor in successors:
            if successor in visited:
                continue
            if (node, relation, successor) in excluded_edges:
                continue
            walk(successor, depth + 1, probability * share, visited | {successor})

    walk(source, 0, Fraction(1), frozenset((source,)))
    return float(total)
