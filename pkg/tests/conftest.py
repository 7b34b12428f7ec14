from __future__ import annotations

import pytest

from todkit.corpus import AnnotationMask, write_canonical
from todkit.evaluation import save_goals
from todkit.grounding import save_db
from todkit.synthetic import SyntheticConfig, generate_corpus


@pytest.fixture(scope="session")
def bundle():
    """A small all-task synthetic world: (corpus, db, goals)."""
    return generate_corpus(SyntheticConfig(seed=11, sessions=12))


@pytest.fixture(scope="session")
def dst_nlg_bundle():
    """A partially annotated world (DST+NLG only), mirroring mixed sources."""
    config = SyntheticConfig(
        seed=19, sessions=8, corpus_id="partial", mask=AnnotationMask.of("DST", "NLG")
    )
    return generate_corpus(config)


@pytest.fixture()
def bundle_paths(bundle, tmp_path):
    corpus, db, goals = bundle
    paths = {
        "corpus": tmp_path / "corpus.jsonl",
        "db": tmp_path / "db.jsonl",
        "goals": tmp_path / "goals.jsonl",
    }
    write_canonical(corpus, paths["corpus"])
    save_db(db, paths["db"])
    save_goals(goals, paths["goals"])
    return paths
