import random
import sys

import pytest

from fragreuse.conllu import Treebank, is_tree
from fragreuse.evaluation import score
from fragreuse.parsing import (
    BaselineModel,
    BridgeError,
    ExternalParserSpec,
    TrainingError,
    parse_baseline,
    projectivize,
    run_external,
    train_baseline,
)
from fragreuse.synthetic import toy_treebank

from conftest import make_sentence, make_treebank


def crossing_free(heads):
    """Oracle: no two arcs cross, and no arc spans the root's position 0 from inside."""
    arcs = [(min(h, d), max(h, d)) for d, h in enumerate(heads, 1)]
    for a, b in arcs:
        for c, d in arcs:
            if a < c < b < d:
                return False
    return True


def random_tree(n, rng):
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * n
    for i, node in enumerate(order[1:], 1):
        heads[node - 1] = rng.choice(order[:i])
    return heads


@pytest.mark.parametrize("seed", range(40))
def test_projectivize_yields_projective_tree(seed):
    rng = random.Random(seed)
    heads = random_tree(rng.randint(1, 12), rng)
    out = projectivize(heads)
    assert is_tree(out)
    assert crossing_free(out)
    if crossing_free(heads):
        assert out == heads


def test_projectivize_lifts_to_grandparent():
    # 1 <- 3 crosses 2 -> 4
    heads = [3, 0, 2, 2]
    assert not crossing_free(heads)
    assert projectivize(heads) == [2, 0, 2, 2]


@pytest.fixture(scope="module")
def toy():
    return toy_treebank(600, seed=11, prefix="train"), toy_treebank(150, seed=12, prefix="dev")


@pytest.fixture(scope="module")
def model(toy):
    return train_baseline(toy[0], epochs=5)


def test_memorizes_small_training_set():
    tb = toy_treebank(5, seed=4)
    m = train_baseline(tb, epochs=30)
    parsed, _ = parse_baseline(m, tb)
    assert score(parsed, tb).uas == 100.0


def test_learns_toy_grammar(model, toy):
    parsed, seconds = parse_baseline(model, toy[1])
    report = score(parsed, toy[1])
    assert report.uas > 90.0
    assert report.las <= report.uas
    assert seconds > 0


def test_output_aligned_projective_trees(model, toy):
    parsed, _ = parse_baseline(model, toy[1])
    for out, gold in zip(parsed, toy[1]):
        assert [t.form for t in out.tokens] == [t.form for t in gold.tokens]
        assert is_tree(out.heads())
        assert crossing_free(out.heads())
        assert sum(1 for h in out.heads() if h == 0) == 1


def test_unannotated_input_is_parsed(model):
    sent = make_sentence([("dogs", "NOUN", None, "_"), ("bark", "VERB", None, "_"), (".", "PUNCT", None, "_")])
    parsed, _ = parse_baseline(model, Treebank((sent,)))
    assert is_tree(parsed[0].heads())


def test_single_token_attaches_to_root(model):
    parsed, _ = parse_baseline(model, make_treebank([("Hi", "INTJ", None, "_")]))
    assert parsed[0].heads() == [0]


def test_training_is_deterministic(toy):
    a = train_baseline(toy[0], epochs=2, seed=7)
    b = train_baseline(toy[0], epochs=2, seed=7)
    assert a.weight_map() == b.weight_map()


def test_zero_epochs_gives_untrained_but_usable_model(toy):
    m = train_baseline(toy[0], epochs=0)
    assert not m.weight_map()
    parsed, _ = parse_baseline(m, toy[1])
    assert all(is_tree(s.heads()) for s in parsed)


def test_no_training_data():
    with pytest.raises(TrainingError):
        train_baseline(make_treebank([("x", "X", None, "_")]))


def test_save_load_round_trip(model, toy, tmp_path):
    path = tmp_path / "m.json"
    model.save(path)
    loaded = BaselineModel.load(path)
    assert parse_baseline(loaded, toy[1])[0] == parse_baseline(model, toy[1])[0]


def test_load_rejects_other_versions(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"version": "x"}')
    with pytest.raises(ValueError):
        BaselineModel.load(path)


PY = sys.executable


def test_external_identity_bridge(toy):
    spec = ExternalParserSpec(f"{PY} -c \"import shutil,sys; shutil.copy(sys.argv[1], sys.argv[2])\" {{input}} {{output}}")
    parsed, seconds = run_external(spec, toy[1])
    assert parsed == toy[1]
    assert seconds > 0


def test_external_model_placeholder(tmp_path):
    tb = make_treebank([("a", "X", 0, "root")])
    marker = tmp_path / "model.bin"
    marker.write_text("")
    spec = ExternalParserSpec(
        f"{PY} -c \"import shutil,sys,os; assert os.path.exists(sys.argv[3]); shutil.copy(sys.argv[1], sys.argv[2])\" {{input}} {{output}} {{model}}",
        model=str(marker),
    )
    assert run_external(spec, tb)[0] == tb


def test_external_misaligned_output():
    tb = make_treebank([("a", "X", 0, "root")], [("b", "X", 0, "root")])
    script = "import sys; lines=open(sys.argv[1]).read().split('\\n\\n'); open(sys.argv[2],'w').write(lines[0]+'\\n\\n')"
    spec = ExternalParserSpec(f'{PY} -c "{script}" {{input}} {{output}}')
    with pytest.raises(BridgeError, match="1 sentences"):
        run_external(spec, tb)


def test_external_nonzero_exit_carries_stderr():
    spec = ExternalParserSpec(f"{PY} -c \"import sys; sys.stderr.write('model missing'); sys.exit(3)\" {{input}} {{output}}")
    with pytest.raises(BridgeError, match="model missing") as err:
        run_external(spec, make_treebank([("a", "X", 0, "root")]))
    assert "status 3" in str(err.value)


def test_external_timeout():
    spec = ExternalParserSpec(f"{PY} -c \"import time; time.sleep(5)\" {{input}} {{output}}", timeout=0.5)
    with pytest.raises(BridgeError, match="timed out"):
        run_external(spec, make_treebank([("a", "X", 0, "root")]))


def test_external_missing_command():
    spec = ExternalParserSpec("/nonexistent/parser {input} {output}")
    with pytest.raises(BridgeError, match="cannot run"):
        run_external(spec, make_treebank([("a", "X", 0, "root")]))


def test_external_no_output_file():
    spec = ExternalParserSpec(f"{PY} -c pass {{input}} {{output}}")
    with pytest.raises(BridgeError, match="no output"):
        run_external(spec, make_treebank([("a", "X", 0, "root")]))
