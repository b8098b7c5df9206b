"""Triple loading, entity/relation interning, inverse-fact augmentation, and
the read-only adjacency index the miner, scorer, and evaluator all share."""

from __future__ import annotations

import bisect
from typing import Iterable, NamedTuple

INVERSE_PREFIX = "INV_"


class Fact(NamedTuple):
    """One interned (subject, relation, object) triple."""

    subject: int
    relation: int
    object: int


class Interner:
    """Bidirectional string/dense-id table; ids issued in first-seen order."""

    __slots__ = ("_ids", "names")

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self.names: list[str] = []

    def intern(self, name: str) -> int:
        ident = self._ids.get(name)
        if ident is None:
            ident = len(self.names)
            self._ids[name] = ident
            self.names.append(name)
        return ident

    def id_of(self, name: str) -> int:
        return self._ids[name]

    def name_of(self, ident: int) -> str:
        return self.names[ident]

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self.names)


class Vocabulary:
    """Entity and relation tables shared by every split of a dataset.

    Relation ids are dense.  Once inverse relations exist, every relation id
    has a partner id and ``inverse_of`` is an involution; relations first seen
    after augmentation (e.g. a test-only relation) are registered together
    with their inverse so the pairing stays total.
    """

    def __init__(self) -> None:
        self.entities = Interner()
        self.relations = Interner()
        self._inverse: list[int] = []

    @property
    def has_inverses(self) -> bool:
        return bool(self._inverse)

    def ensure_inverse_relations(self) -> None:
        """Register an ``INV_``-prefixed partner for every known relation."""
        if self._inverse:
            return
        base = len(self.relations)
        inverse_names = [INVERSE_PREFIX + name for name in self.relations.names]
        for offset, name in enumerate(inverse_names):
            if name in self.relations:
                raise ValueError(
                    f"cannot generate inverse relations: {name!r} already exists"
                )
            assert self.relations.intern(name) == base + offset
        self._inverse = list(range(base, 2 * base)) + list(range(base))

    def inverse_of(self, relation: int) -> int:
        return self._inverse[relation]

    def inverse_map(self) -> tuple[int, ...]:
        return tuple(self._inverse)

    def intern_relation(self, name: str) -> int:
        if name in self.relations or not self._inverse:
            return self.relations.intern(name)
        # New relation after augmentation: register the pair immediately.
        inverse_name = INVERSE_PREFIX + name
        if inverse_name in self.relations:
            raise ValueError(
                f"cannot register relation {name!r}: inverse name {inverse_name!r} taken"
            )
        rid = self.relations.intern(name)
        inv = self.relations.intern(inverse_name)
        self._inverse.extend((inv, rid))
        return rid


def load_triples(
    path,
    vocab: Vocabulary | None = None,
    column_order: str = "sro",
) -> tuple[list[Fact], Vocabulary]:
    """Read a UTF-8 TSV of triples into deduplicated, interned facts.

    ``column_order`` is ``"sro"`` (subject, relation, object; the layout of
    the common benchmark dumps) or ``"ors"`` for files written the other way
    around.  Passing an existing ``vocab`` extends its tables in place, which
    is how validation/test splits pick up entities unseen in training.
    """
    if column_order not in ("sro", "ors"):
        raise ValueError(f"column_order must be 'sro' or 'ors', got {column_order!r}")
    if vocab is None:
        vocab = Vocabulary()
    intern_entity = vocab.entities.intern
    intern_relation = vocab.intern_relation
    facts: list[Fact] = []
    seen: set[Fact] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}"
                )
            if column_order == "ors":
                parts.reverse()
            fact = Fact(intern_entity(parts[0]), intern_relation(parts[1]), intern_entity(parts[2]))
            if fact not in seen:
                seen.add(fact)
                facts.append(fact)
    if not facts:
        raise ValueError(f"{path}: no facts found")
    return facts, vocab


def export_triples(facts: Iterable[Fact], vocab: Vocabulary) -> list[tuple[str, str, str]]:
    """Map interned facts back to their string triples."""
    entity = vocab.entities.name_of
    relation = vocab.relations.name_of
    return [(entity(s), relation(r), entity(o)) for s, r, o in facts]


def augment_inverse(facts: list[Fact], vocab: Vocabulary) -> list[Fact]:
    """Append (o, inv(r), s) for every fact (s, r, o).

    Doubles the relation table.  With deduplicated input the output is exactly
    twice as long: inverse facts occupy fresh relation ids, so they cannot
    collide with the originals or with each other.
    """
    vocab.ensure_inverse_relations()
    inverse = vocab._inverse
    return facts + [Fact(o, inverse[r], s) for s, r, o in facts]


class GraphIndex:
    """Immutable adjacency index with O(1) expected (subject, relation) lookup.

    Adjacency lists are sorted entity-id tuples, so iteration order never
    depends on hash seeds.  Instances are read-only after construction and
    safe to share across threads or forked workers.
    """

    __slots__ = (
        "forward",
        "by_relation",
        "relations_of",
        "inverse",
        "entity_count",
        "relation_count",
        "fact_count",
    )

    def __init__(
        self,
        forward: dict[tuple[int, int], tuple[int, ...]],
        by_relation: dict[int, tuple[Fact, ...]],
        relations_of: dict[int, tuple[int, ...]],
        inverse: tuple[int, ...],
        entity_count: int,
        relation_count: int,
        fact_count: int,
    ) -> None:
        self.forward = forward
        self.by_relation = by_relation
        self.relations_of = relations_of
        self.inverse = inverse
        self.entity_count = entity_count
        self.relation_count = relation_count
        self.fact_count = fact_count

    def q_lookup(self, subject: int, relation: int) -> tuple[int, ...]:
        """All objects o with (subject, relation, o) indexed; () if none."""
        return self.forward.get((subject, relation), ())

    def fanout(self, subject: int, relation: int) -> int:
        return len(self.forward.get((subject, relation), ()))

    def has_fact(self, subject: int, relation: int, obj: int) -> bool:
        objects = self.forward.get((subject, relation))
        if not objects:
            return False
        i = bisect.bisect_left(objects, obj)
        return i < len(objects) and objects[i] == obj

    def inverse_of(self, relation: int) -> int:
        return self.inverse[relation]

    def edges_of(self, subject: int) -> list[tuple[int, int]]:
        """All labeled out-edges of a node as (relation, object), sorted."""
        edges: list[tuple[int, int]] = []
        for relation in self.relations_of.get(subject, ()):
            for obj in self.forward[(subject, relation)]:
                edges.append((relation, obj))
        return edges


def build_index(facts: Iterable[Fact], vocab: Vocabulary) -> GraphIndex:
    """Build the shared adjacency index from (normally inverse-augmented) facts."""
    unique = list(dict.fromkeys(facts))
    adjacency: dict[tuple[int, int], list[int]] = {}
    by_relation: dict[int, list[Fact]] = {}
    relations_seen: dict[int, set[int]] = {}
    for fact in unique:
        s, r, o = fact
        adjacency.setdefault((s, r), []).append(o)
        by_relation.setdefault(r, []).append(fact)
        relations_seen.setdefault(s, set()).add(r)
    forward = {key: tuple(sorted(objs)) for key, objs in adjacency.items()}
    return GraphIndex(
        forward=forward,
        by_relation={r: tuple(sorted(fs)) for r, fs in by_relation.items()},
        relations_of={s: tuple(sorted(rs)) for s, rs in relations_seen.items()},
        inverse=vocab.inverse_map(),
        entity_count=len(vocab.entities),
        relation_count=len(vocab.relations),
        fact_count=len(unique),
    )
