import os
import random
from pathlib import Path

import pytest

from pathrules import Vocabulary, augment_inverse, build_index, load_triples

REPO_ROOT = Path(__file__).resolve().parent.parent
TOY_DIR = REPO_ROOT / "sample_data" / "toy"

DATASET_DIRS = {
    "wn18rr": "wn18rr",
    "fb15k237": "fb15k237",
    "nell995": "nell995",
    "yago310": "yago310",
}


def make_kg(triples):
    """Intern string triples, add inverse facts, build the index.

    Returns (base_facts, vocab, index); the index covers the augmented graph.
    """
    vocab = Vocabulary()
    facts = []
    seen = set()
    for s, r, o in triples:
        fact = (vocab.entities.intern(s), vocab.intern_relation(r), vocab.entities.intern(o))
        if fact not in seen:
            seen.add(fact)
            facts.append(fact)
    from pathrules import Fact

    facts = [Fact(*f) for f in facts]
    augmented = augment_inverse(facts, vocab)
    return facts, vocab, build_index(augmented, vocab)


def random_kg(seed, n_entities=20, n_relations=4, n_facts=50, self_loops=True):
    """Random small KG for fuzzing; deterministic in the seed."""
    rng = random.Random(seed)
    triples = set()
    attempts = 0
    while len(triples) < n_facts and attempts < n_facts * 20:
        attempts += 1
        s = rng.randrange(n_entities)
        o = rng.randrange(n_entities)
        if not self_loops and s == o:
            continue
        r = rng.randrange(n_relations)
        triples.add((f"e{s}", f"r{r}", f"e{o}"))
    return make_kg(sorted(triples))


@pytest.fixture
def toy_paths():
    return {
        "train": TOY_DIR / "train.txt",
        "valid": TOY_DIR / "valid.txt",
        "test": TOY_DIR / "test.txt",
    }


@pytest.fixture
def toy_kg(toy_paths):
    facts, vocab = load_triples(toy_paths["train"])
    augmented = augment_inverse(facts, vocab)
    return facts, vocab, build_index(augmented, vocab)


def dataset_dir(name: str) -> Path:
    base = os.environ.get("PATHRULES_DATA")
    root = Path(base) if base else REPO_ROOT / "datasets"
    return root / DATASET_DIRS[name]


def require_dataset(name: str) -> dict:
    """Return split paths for a benchmark or skip with fetch instructions."""
    directory = dataset_dir(name)
    paths = {split: directory / f"{split}.txt" for split in ("train", "valid", "test")}
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        pytest.skip(
            f"{name} splits not found ({missing[0]} ...); run "
            "scripts/fetch_datasets.sh or point PATHRULES_DATA at the data"
        )
    return paths
