"""Command-line interface: mine, eval, sweep, ablate, and explain subcommands.

All artifacts are plain TSV/CSV/JSON.  Every subcommand is a pure function of
its input files and configuration; rerunning reproduces outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields

from . import evaluation, inference, mining
from .config import RunConfig, load_config_file, make_config, parse_count
from .kg import GraphIndex, Vocabulary, augment_inverse, build_index, load_triples
from .rules import read_rules_tsv, write_rules_tsv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathrules",
        description=(
            "Mine closed Horn rules from a knowledge graph, score them with a "
            "Markov path-probability confidence, and answer completion queries "
            "with ranked, explainable predictions."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, needs_eval_splits: bool) -> None:
        p.add_argument("--config", help="TOML config file (flags override it)")
        p.add_argument("--train", help="training triples, TSV")
        if needs_eval_splits:
            p.add_argument("--valid", help="validation triples (used for filtering)")
            p.add_argument("--test", help="test triples, TSV")
        p.add_argument("--max-len", type=int, dest="max_len", help="maximum rule body length")
        p.add_argument("--alpha", help="sampled facts per relation, or 'unlimited'")
        p.add_argument("--beta", help="children expanded per node in the search, or 'unlimited'")
        p.add_argument(
            "--answer-cap", dest="answer_cap",
            help="max answers targeted per sampled fact, or 'unlimited'",
        )
        p.add_argument(
            "--top-k", dest="top_k", help="rules applied per query, or 'unlimited'"
        )
        p.add_argument("--mode", choices=("sum", "max"), help="score aggregation")
        p.add_argument("--seed", type=int, help="64-bit RNG seed")
        p.add_argument(
            "--path-weight", dest="path_weight",
            choices=mining.PATH_WEIGHTS,
            help="per-path weight: markov (default), length, or constant",
        )
        p.add_argument("--workers", type=int, help="parallel workers (1 = serial)")
        p.add_argument(
            "--column-order", dest="column_order", choices=("sro", "ors"),
            help="triple file column order (default sro)",
        )

    p_mine = sub.add_parser("mine", help="extract rules and write a rule TSV")
    add_common(p_mine, needs_eval_splits=False)
    p_mine.add_argument("--rules-out", dest="rules_out", help="output rule TSV path")
    p_mine.add_argument("--report-out", dest="report_out", help="output timing JSON path")

    p_eval = sub.add_parser("eval", help="filtered MRR / Hits@k on a test split")
    add_common(p_eval, needs_eval_splits=True)
    p_eval.add_argument("--rules", required=True, help="rule TSV produced by mine")
    p_eval.add_argument("--metrics-out", dest="metrics_out", help="output metrics JSON path")

    p_sweep = sub.add_parser("sweep", help="re-run mine+eval over alpha or top_k values")
    add_common(p_sweep, needs_eval_splits=True)
    p_sweep.add_argument("--parameter", required=True, choices=("alpha", "top_k"))
    p_sweep.add_argument(
        "--values", required=True,
        help="comma-separated values, e.g. 1,10,100,unlimited",
    )
    p_sweep.add_argument("--sweep-out", dest="sweep_out", help="output CSV path")

    p_ablate = sub.add_parser(
        "ablate", help="compare path-weight variants across rule budgets"
    )
    add_common(p_ablate, needs_eval_splits=True)
    p_ablate.add_argument(
        "--budgets", default="1,10,100",
        help="comma-separated top-k budgets (default 1,10,100)",
    )
    p_ablate.add_argument("--ablate-out", dest="ablate_out", help="output CSV path")

    p_explain = sub.add_parser("explain", help="show the rules behind one prediction")
    add_common(p_explain, needs_eval_splits=False)
    p_explain.add_argument("--rules", required=True, help="rule TSV produced by mine")
    p_explain.add_argument("--source", required=True, help="query subject (entity string)")
    p_explain.add_argument("--relation", required=True, help="query relation (string)")
    p_explain.add_argument("--candidate", required=True, help="candidate answer (entity string)")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    field_names = {field.name for field in fields(RunConfig)}
    provided = {
        name: value
        for name, value in vars(args).items()
        if name in field_names and value is not None
    }
    for name in ("alpha", "beta", "answer_cap", "top_k"):
        if name in provided:
            provided[name] = parse_count(provided[name])
    file_values = load_config_file(args.config) if getattr(args, "config", None) else None
    return make_config(file_values, provided)


def _load_training(config: RunConfig) -> tuple[list, Vocabulary, GraphIndex]:
    """Load the training split; returns (base facts, vocab, augmented index)."""
    if not config.train:
        raise ValueError("a training file is required (--train or config)")
    facts, vocab = load_triples(config.train, column_order=config.column_order)
    augmented = augment_inverse(facts, vocab)
    return facts, vocab, build_index(augmented, vocab)


def _load_eval_splits(config: RunConfig, vocab: Vocabulary):
    if not config.test:
        raise ValueError("a test file is required (--test or config)")
    known = []
    test_facts = None
    for path in (config.valid, config.test):
        if not path:
            continue
        facts, _ = load_triples(path, vocab, column_order=config.column_order)
        known.extend(facts)
        test_facts = facts
    return test_facts, known


def cmd_mine(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if not config.rules_out:
        raise ValueError("mine needs --rules-out")
    load_start = time.perf_counter()
    _, vocab, index = _load_training(config)
    load_seconds = time.perf_counter() - load_start

    rulebook, stats = mining.mine_rulebook(
        index,
        alpha=config.alpha,
        max_len=config.max_len,
        beta=config.beta,
        answer_cap=config.answer_cap,
        seed=config.seed,
        path_weight=config.path_weight,
        workers=config.workers,
    )
    write_rules_tsv(rulebook, vocab, config.rules_out)

    report = {
        "wall_seconds": load_seconds + stats["mine_seconds"] + stats["normalize_seconds"],
        "facts_sampled": stats["facts_sampled"],
        "rules_found": stats["rules_found"],
        "phases": {
            "load_seconds": load_seconds,
            "mine_seconds": stats["mine_seconds"],
            "normalize_seconds": stats["normalize_seconds"],
        },
        "config": config.summary(),
    }
    if config.report_out:
        with open(config.report_out, "w", encoding="utf-8") as handle:
            json.dump(report, handle, indent=2, sort_keys=True)
            handle.write("\n")
    print(
        f"mined {stats['rules_found']} rules from {stats['facts_sampled']} sampled facts "
        f"in {report['wall_seconds']:.2f}s -> {config.rules_out}"
    )
    return 0


def _print_metrics(metrics: evaluation.Metrics) -> None:
    ks = sorted(metrics.hits_at)
    header = "MRR     " + "".join(f"Hits@{k:<4}" for k in ks) + "queries"
    row = f"{metrics.mrr:<8.4f}" + "".join(f"{metrics.hits_at[k]:<9.4f}" for k in ks)
    print(header)
    print(f"{row}{metrics.query_count}")


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    train_facts, vocab, index = _load_training(config)
    test_facts, known = _load_eval_splits(config, vocab)
    rulebook = read_rules_tsv(args.rules, vocab)
    metrics = evaluation.evaluate(
        index,
        rulebook,
        test_facts,
        train_facts + known,
        vocab,
        top_k=config.top_k,
        mode=config.mode,
        workers=config.workers,
    )
    if config.metrics_out:
        with open(config.metrics_out, "w", encoding="utf-8") as handle:
            handle.write(evaluation.metrics_to_json(metrics, config.summary()))
    _print_metrics(metrics)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    values = [parse_count(item) for item in args.values.split(",") if item]
    train_facts, vocab, index = _load_training(config)
    test_facts, known = _load_eval_splits(config, vocab)
    rows = evaluation.sweep(
        args.parameter,
        values,
        index,
        vocab,
        test_facts,
        train_facts + known,
        alpha=config.alpha,
        max_len=config.max_len,
        beta=config.beta,
        answer_cap=config.answer_cap,
        seed=config.seed,
        path_weight=config.path_weight,
        top_k=config.top_k,
        mode=config.mode,
        workers=config.workers,
    )
    csv_text = evaluation.sweep_rows_to_csv(rows)
    if args.sweep_out:
        with open(args.sweep_out, "w", encoding="utf-8") as handle:
            handle.write(csv_text)
    print(csv_text, end="")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    budgets = [int(item) for item in args.budgets.split(",") if item]
    if not budgets:
        raise ValueError("ablate needs at least one budget")
    train_facts, vocab, index = _load_training(config)
    test_facts, known = _load_eval_splits(config, vocab)
    all_known = train_facts + known
    lines = ["variant,top_k,mrr,hits1,hits10"]
    for variant in mining.PATH_WEIGHTS:
        rulebook = evaluation.ablate_path_weight(
            index,
            variant,
            alpha=config.alpha,
            max_len=config.max_len,
            beta=config.beta,
            answer_cap=config.answer_cap,
            seed=config.seed,
            workers=config.workers,
        )
        for budget in budgets:
            metrics = evaluation.evaluate(
                index, rulebook, test_facts, all_known, vocab,
                top_k=budget, mode=config.mode, workers=config.workers,
            )
            lines.append(
                f"{variant},{budget},{metrics.mrr:.12g},"
                f"{metrics.hits_at[1]:.12g},{metrics.hits_at[10]:.12g}"
            )
    csv_text = "\n".join(lines) + "\n"
    if args.ablate_out:
        with open(args.ablate_out, "w", encoding="utf-8") as handle:
            handle.write(csv_text)
    print(csv_text, end="")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _, vocab, index = _load_training(config)
    rulebook = read_rules_tsv(args.rules, vocab)
    for name in (args.source, args.candidate):
        if name not in vocab.entities:
            raise ValueError(f"unknown entity {name!r}")
    if args.relation not in vocab.relations:
        raise ValueError(f"unknown relation {args.relation!r}")
    source = vocab.entities.id_of(args.source)
    relation = vocab.relations.id_of(args.relation)
    candidate = vocab.entities.id_of(args.candidate)

    explanations = inference.explain(
        index, rulebook, source, relation, candidate, config.top_k
    )
    if not explanations:
        print(
            f"no top-{config.top_k} rule reaches {args.candidate} "
            f"for ({args.source}, {args.relation}, ?)"
        )
        return 0
    total = sum(entry.contribution for entry in explanations)
    print(
        f"({args.source}, {args.relation}, ?) -> {args.candidate}  "
        f"score {total:.6g} from {len(explanations)} rule(s)"
    )
    rel_name = vocab.relations.name_of
    ent_name = vocab.entities.name_of
    for i, entry in enumerate(explanations, start=1):
        body = ", ".join(rel_name(r) for r in entry.rule.body)
        print(
            f"{i:3d}. contribution {entry.contribution:.6g}  "
            f"confidence {entry.confidence:.6g}  {rel_name(entry.rule.head)} <- {body}"
        )
        hops = [ent_name(entry.nodes[0])]
        for step, relation_id in enumerate(entry.edges):
            hops.append(f"-[{rel_name(relation_id)}]-> {ent_name(entry.nodes[step + 1])}")
        print("      " + " ".join(hops))
    return 0


_COMMANDS = {
    "mine": cmd_mine,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "explain": cmd_explain,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
