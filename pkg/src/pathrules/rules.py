"""Rule types, the confidence-ranked rule book, and its TSV wire format."""

from __future__ import annotations

import math
from typing import Iterator, NamedTuple

from .kg import Vocabulary

BODY_SEPARATOR = ","


class Rule(NamedTuple):
    """A Horn rule: ordered body relations (inverses allowed) implying head.

    Built from chains x -r0-> z1 -r1-> ... -> y, so every rule is connected
    and closed by construction.
    """

    head: int
    body: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.body)


class ScoredRule(NamedTuple):
    rule: Rule
    confidence: float


def rule_sort_key(scored: ScoredRule):
    """Confidence descending, then shorter bodies, then lexicographic body.

    Confidence is compared at the wire format's 12-significant-digit
    resolution, so a book and its TSV round-trip order identically even when
    two raw values differ only below what the file can represent.
    """
    return (
        -float(format_confidence(scored.confidence)),
        len(scored.rule.body),
        scored.rule.body,
    )


class RuleBook:
    """Rules grouped by head relation, each group confidence-descending."""

    __slots__ = ("by_head",)

    def __init__(self, by_head: dict[int, list[ScoredRule]]) -> None:
        self.by_head = by_head

    def top_k(self, head: int, k: int | None) -> list[ScoredRule]:
        """The k highest-confidence rules for a head; ``k=None`` means all."""
        return self.by_head.get(head, [])[:k]

    def __len__(self) -> int:
        return sum(len(group) for group in self.by_head.values())

    def __iter__(self) -> Iterator[ScoredRule]:
        for head in sorted(self.by_head):
            yield from self.by_head[head]

    def scaled(self, factor: float) -> "RuleBook":
        """Same rules with every confidence multiplied by ``factor``."""
        return RuleBook(
            {
                head: [ScoredRule(sr.rule, sr.confidence * factor) for sr in group]
                for head, group in self.by_head.items()
            }
        )


def format_confidence(value: float) -> str:
    return f"{value:.12g}"


def rule_to_line(scored: ScoredRule, vocab: Vocabulary) -> str:
    name_of = vocab.relations.name_of
    names = []
    for relation in (scored.rule.head,) + scored.rule.body:
        name = name_of(relation)
        if BODY_SEPARATOR in name or "\t" in name:
            raise ValueError(f"relation name {name!r} cannot be serialized")
        names.append(name)
    return "\t".join((format_confidence(scored.confidence), names[0], BODY_SEPARATOR.join(names[1:])))


def write_rules_tsv(rulebook: RuleBook, vocab: Vocabulary, path) -> None:
    """One rule per line: confidence, head relation, comma-joined body."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for scored in rulebook:
            handle.write(rule_to_line(scored, vocab))
            handle.write("\n")


def read_rules_tsv(path, vocab: Vocabulary) -> RuleBook:
    """Parse a rule TSV back into a RuleBook.

    Relation names must already exist in ``vocab`` (mining and evaluation
    share one vocabulary); unknown names are collected and reported together.
    Groups are re-sorted with the canonical key, so files produced by
    ``write_rules_tsv`` round-trip byte-for-byte.
    """
    unknown: set[str] = set()
    by_head: dict[int, list[ScoredRule]] = {}
    seen: set[Rule] = set()
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
            confidence_text, head_name, body_text = parts
            try:
                confidence = float(confidence_text)
            except ValueError:
                confidence = float("nan")
            if not math.isfinite(confidence) or confidence < 0:
                raise ValueError(
                    f"{path}: line {lineno}: bad confidence {confidence_text!r}"
                )
            body_names = body_text.split(BODY_SEPARATOR)
            if not body_text or any(not name for name in body_names):
                raise ValueError(f"{path}: line {lineno}: empty rule body")
            ids = []
            for name in (head_name, *body_names):
                if name in vocab.relations:
                    ids.append(vocab.relations.id_of(name))
                else:
                    unknown.add(name)
            if unknown:
                continue
            rule = Rule(ids[0], tuple(ids[1:]))
            if rule in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate rule")
            seen.add(rule)
            by_head.setdefault(rule.head, []).append(ScoredRule(rule, confidence))
    if unknown:
        raise ValueError(
            "rule file references unknown relation names: "
            + ", ".join(sorted(unknown))
        )
    for group in by_head.values():
        group.sort(key=rule_sort_key)
    return RuleBook(by_head)
