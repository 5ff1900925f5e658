import os
import random
from pathlib import Path

import pytest

from fragreuse.conllu import Treebank, read_conllu
from fragreuse.synthetic import sentence_from_arrays

DATA = Path(__file__).parent / "data"
UD_ENV = "FRAGREUSE_UD_DIR"


def make_sentence(spec, sent_id=None):
    """Build a sentence from ``(form, tag, head, deprel)`` tuples."""
    forms, tags, heads, deps = zip(*spec) if spec else ((), (), (), ())
    comments = [f"# sent_id = {sent_id}"] if sent_id else []
    return sentence_from_arrays(forms, tags, heads, deps, comments)


def make_treebank(*specs):
    return Treebank(tuple(make_sentence(s, f"s{i}") for i, s in enumerate(specs)))


def find_ud_files():
    """UD English (EWT) v2.1 train/dev/test paths, or None when not supplied."""
    root = os.environ.get(UD_ENV)
    if not root:
        return None
    found = {}
    for split in ("train", "dev", "test"):
        matches = sorted(Path(root).glob(f"*{split}.conllu"))
        if not matches:
            return None
        found[split] = matches[0]
    return found


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def ud_files():
    files = find_ud_files()
    if files is None:
        pytest.skip(f"UD English v2.1 not supplied (set {UD_ENV})")
    return files


@pytest.fixture(scope="session")
def ud_treebanks(ud_files):
    return {split: read_conllu(path) for split, path in ud_files.items()}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # lets fixtures see the outcome of the test body during teardown
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        item.rep_call = rep
