"""Rule mining and explainable link prediction over knowledge graphs.

The pipeline: intern triples and augment them with inverse facts (`kg`),
extract closed Horn rules scored by aggregated path probabilities (`mining`),
answer (subject, relation, ?) queries by propagating each rule's absorbing
chain (`inference`), and measure filtered ranking metrics (`evaluation`).
"""

from .kg import (
    Fact,
    GraphIndex,
    Interner,
    Vocabulary,
    augment_inverse,
    build_index,
    export_triples,
    load_triples,
)
from .rules import Rule, RuleBook, ScoredRule, read_rules_tsv, write_rules_tsv
from .mining import (
    ConfAccumulator,
    LabeledPath,
    bibfs_paths,
    brute_force_reachability_mass,
    derive_seed,
    mine_multi_hop,
    mine_rulebook,
    mine_single_hop,
    normalize_confidence,
    path_probability,
    sample_facts,
    single_hop_mass,
)
from .inference import (
    Distribution,
    Explanation,
    ScoredCandidates,
    expected_rank,
    explain,
    hits_credit,
    propagate,
    propagate_steps,
    rank_answer,
    rank_stats,
    score_candidates,
)
from .evaluation import Metrics, ablate_path_weight, evaluate, metrics_to_json, sweep
from .config import RunConfig, load_config_file, make_config

__version__ = "0.1.0"

__all__ = [
    "Fact",
    "GraphIndex",
    "Interner",
    "Vocabulary",
    "augment_inverse",
    "build_index",
    "export_triples",
    "load_triples",
    "Rule",
    "RuleBook",
    "ScoredRule",
    "read_rules_tsv",
    "write_rules_tsv",
    "ConfAccumulator",
    "LabeledPath",
    "bibfs_paths",
    "brute_force_reachability_mass",
    "derive_seed",
    "mine_multi_hop",
    "mine_rulebook",
    "mine_single_hop",
    "normalize_confidence",
    "path_probability",
    "sample_facts",
    "single_hop_mass",
    "Distribution",
    "Explanation",
    "ScoredCandidates",
    "expected_rank",
    "explain",
    "hits_credit",
    "propagate",
    "propagate_steps",
    "rank_answer",
    "rank_stats",
    "score_candidates",
    "Metrics",
    "ablate_path_weight",
    "evaluate",
    "metrics_to_json",
    "sweep",
    "RunConfig",
    "load_config_file",
    "make_config",
    "__version__",
]
