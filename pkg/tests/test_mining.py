import io
import json
import random
from collections import Counter, defaultdict
from fractions import Fraction

import pytest

from fragreuse.mining import (
    MiningConfig,
    StoreError,
    TemplateStore,
    count_patterns,
    load_store,
    mine,
    save_store,
    store_from_dict,
    store_to_dict,
)
from fragreuse.patterns import HeadPattern
from fragreuse.synthetic import random_treebank, toy_treebank

from conftest import make_sentence, make_treebank

THE_DOG_BARKED = [("the", "DET", 2, "det"), ("dog", "NOUN", 3, "nsubj"), ("barked", "VERB", 0, "root")]
DET_TO_VERB = [("the", "DET", 3, "dep"), ("dog", "NOUN", 3, "nsubj"), ("barked", "VERB", 0, "root")]
POSS = [("my", "DET", 2, "nmod:poss"), ("dog", "NOUN", 3, "nsubj"), ("barked", "VERB", 0, "root")]


def naive_counts(treebank, sizes):
    """Re-scan oracle: key -> Counter of rendered head patterns, written from scratch."""
    out = defaultdict(Counter)
    for sent in treebank:
        heads = [t.head for t in sent.tokens]
        tags = [t.upos for t in sent.tokens]
        n = len(heads)
        for size in sizes:
            for s in range(n - size + 1):
                span = list(range(s + 1, s + size + 1))
                cells = [str(heads[k - 1] - s - 1) if heads[k - 1] in span else "-" for k in span]
                external = False
                if cells.count("-") == 1:
                    for k in span:
                        if heads[k - 1] in span:
                            external |= any(heads[j - 1] == k for j in range(1, n + 1) if j not in span)
                out[tuple(tags[s : s + size])][" ".join(cells) + (" true" if external else " false")] += 1
    return out


def test_uniform_key_has_full_confidence():
    tb = make_treebank(*[THE_DOG_BARKED] * 10)
    store = mine(tb, MiningConfig())
    t = store.by_key()[("DET", "NOUN")]
    assert (t.head_count, t.label_count, t.frequency) == (10, 10, 10)
    assert str(t.head_pattern) == "1 - false"
    assert str(t.label_pattern) == "det - false"
    assert t.head_confidence == 100.0


def test_hand_counted_confidences():
    tb = make_treebank(*([THE_DOG_BARKED] * 8 + [POSS] + [DET_TO_VERB]))
    counts = count_patterns(tb, MiningConfig())
    kc = counts[("DET", "NOUN")]
    assert kc.total == 10
    assert {str(p): c for p, c in kc.patterns.items()} == {"1 - false": 9, "- - false": 1}
    store = mine(tb, MiningConfig(head_threshold=83, label_threshold=80))
    t = store.by_key()[("DET", "NOUN")]
    assert t.head_ratio == Fraction(90)
    assert t.label_ratio == Fraction(80)
    assert ("DET", "NOUN") not in mine(tb, MiningConfig(83, 83)).keys()


def test_thresholds_are_inclusive():
    tb = make_treebank(*([THE_DOG_BARKED] * 9 + [DET_TO_VERB]))
    assert ("DET", "NOUN") in mine(tb, MiningConfig(90, 90)).keys()
    assert ("DET", "NOUN") not in mine(tb, MiningConfig(90.5, 90)).keys()


def test_ineligible_dominant_pattern_gives_no_template():
    spec = [("saw", "VERB", 0, "root"), ("dogs", "NOUN", 1, "obj"), ("tired", "ADJ", 2, "amod")]
    tb = make_treebank(*[spec] * 5)
    kc = count_patterns(tb, MiningConfig())[("VERB", "NOUN")]
    assert {str(p) for p in kc.patterns} == {"- 0 true"}
    assert ("VERB", "NOUN") not in mine(tb, MiningConfig(50, 50)).keys()


def test_dominant_tie_breaks_on_smallest_pattern_text():
    left = [("a", "X", 2, "l"), ("b", "Y", 0, "root")]
    right = [("a", "X", 0, "root"), ("b", "Y", 1, "r")]
    tb = make_treebank(left, right, left, right)
    t = mine(tb, MiningConfig(50, 50, use_trigrams=False)).by_key()[("X", "Y")]
    assert str(t.head_pattern) == "- 0 false"
    assert t.head_ratio == 50


def test_min_count():
    tb = make_treebank(*[THE_DOG_BARKED] * 3)
    assert ("DET", "NOUN") in mine(tb, MiningConfig(min_count=3)).keys()
    assert ("DET", "NOUN") not in mine(tb, MiningConfig(min_count=4)).keys()


@pytest.mark.parametrize("seed", range(8))
def test_counts_match_naive_rescan(seed):
    tb = random_treebank(random.Random(seed), max_sentences=40, max_len=10)
    got = count_patterns(tb, MiningConfig())
    expected = naive_counts(tb, (2, 3))
    assert set(got) == set(expected)
    for key, kc in got.items():
        assert {str(p): c for p, c in kc.patterns.items()} == dict(expected[key])
        assert kc.total == sum(expected[key].values())


@pytest.mark.parametrize("seed", range(5))
def test_stricter_thresholds_give_subset(seed):
    tb = random_treebank(random.Random(seed), max_sentences=60, max_len=8, tags=("A", "B", "C"))
    loose = mine(tb, MiningConfig(60, 60))
    strict = mine(tb, MiningConfig(87, 87))
    assert strict.keys() <= loose.keys()
    for t in loose:
        assert t.label_count <= t.head_count <= t.frequency


def test_mining_is_deterministic_and_order_free():
    tb = toy_treebank(300, seed=3)
    a = mine(tb, MiningConfig())
    b = mine(tb, MiningConfig())
    assert a == b
    shuffled = list(tb.sentences)
    random.Random(0).shuffle(shuffled)
    c = mine(type(tb)(tuple(shuffled)), MiningConfig())
    assert c.templates == a.templates
    assert [t.key for t in a] == sorted((t.key for t in a), key=lambda k: (-a.by_key()[k].head_ratio, -a.by_key()[k].frequency, -a.by_key()[k].label_ratio, k))


def test_unannotated_sentences_are_ignored():
    tb = make_treebank(THE_DOG_BARKED, [("x", "DET", None, "_"), ("y", "NOUN", None, "_")])
    assert count_patterns(tb, MiningConfig())[("DET", "NOUN")].total == 1


def test_store_round_trip(tmp_path):
    store = mine(toy_treebank(200, seed=1), MiningConfig())
    assert len(store) > 0
    path = tmp_path / "t.json"
    save_store(store, path)
    assert load_store(path) == store
    buf = io.StringIO()
    save_store(store, buf)
    buf.seek(0)
    assert load_store(buf) == store
    entry = json.loads(path.read_text())["templates"][0]
    assert entry["head_confidence"] == round(store.templates[0].head_confidence, 2)


def test_empty_store_round_trip():
    store = TemplateStore((), MiningConfig(87, 87))
    assert store_from_dict(store_to_dict(store)) == store


@pytest.mark.parametrize("data", [{}, {"version": "other/9", "config": {}, "templates": []}, {"version": "fragreuse-templates/1"}])
def test_bad_store_rejected(data):
    with pytest.raises(StoreError):
        store_from_dict(data)


def test_malformed_json_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(StoreError):
        load_store(path)


@pytest.mark.parametrize(
    "setup, name, sizes",
    [("2,3:83-83", "M2,3_83-83", (2, 3)), ("3:87-87", "M3_87-87", (3,)), ("2:90-85.5", "M2_90-85.5", (2,))],
)
def test_setup_names(setup, name, sizes):
    config = MiningConfig.from_setup(setup)
    assert config.setup_name == name
    assert config.sizes == sizes


@pytest.mark.parametrize("kwargs", [{"head_threshold": 0}, {"label_threshold": 101}, {"use_bigrams": False, "use_trigrams": False}, {"mode": "x"}, {"min_count": 0}])
def test_bad_config(kwargs):
    with pytest.raises(ValueError):
        MiningConfig(**kwargs)


@pytest.mark.parametrize("setup", ["2,3", "4:80-80", "2:eighty-80"])
def test_bad_setup(setup):
    with pytest.raises(ValueError):
        MiningConfig.from_setup(setup)


# two-step fixture: ADJ NOUN only becomes adjacent once DET NOUN has been reduced
NP = [("big", "ADJ", 3, "amod"), ("the", "DET", 3, "det"), ("dog", "NOUN", 0, "root")]
XCOMP = [("made", "VERB", 0, "root"), ("happy", "ADJ", 1, "xcomp"), ("kids", "NOUN", 1, "obj")]


def test_iterative_mining_finds_templates_exposed_by_reduction():
    tb = make_treebank(*([NP] * 20 + [XCOMP] * 4))
    config = MiningConfig(80, 80, use_trigrams=False)
    bag = mine(tb, config)
    assert ("ADJ", "NOUN") not in bag.keys()
    iterative = mine(tb, MiningConfig(80, 80, use_trigrams=False, mode="iterative"))
    assert iterative.ordered
    assert iterative.templates[0].key == ("DET", "NOUN")
    assert ("ADJ", "NOUN") in iterative.keys()
    t = iterative.by_key()[("ADJ", "NOUN")]
    assert str(t.head_pattern) == "1 - false"
    assert [t.rank for t in iterative] == list(range(len(iterative)))


def test_iterative_respects_max_iterations():
    tb = make_treebank(*([NP] * 20 + [XCOMP] * 4))
    store = mine(tb, MiningConfig(80, 80, use_trigrams=False, mode="iterative", max_iterations=1))
    assert [t.key for t in store] == [("DET", "NOUN")]


def test_noun_proximity_priority_prefers_noun_headed_templates():
    tb = make_treebank(*([NP] * 20 + [XCOMP] * 4))
    store = mine(
        tb, MiningConfig(80, 80, use_trigrams=False, mode="iterative", priority="noun-proximity")
    )
    first = store.templates[0]
    assert first.key[first.fragment_head] == "NOUN"


def test_head_pattern_in_store_is_eligible():
    store = mine(toy_treebank(400, seed=2), MiningConfig(60, 60))
    for t in store:
        assert t.head_pattern.heads.count(None) == 1
        assert not t.head_pattern.external
        assert HeadPattern.parse(str(t.head_pattern)) == t.head_pattern
