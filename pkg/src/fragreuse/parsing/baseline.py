"""Greedy arc-eager dependency parser with an averaged perceptron.

A deliberately small stand-in for MaltParser-class systems: linear time,
static-oracle training, a compact feature set over the stack top, the
buffer front, their neighbours and their outermost children.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..conllu import Sentence, Token, Treebank

log = logging.getLogger(__name__)

MODEL_VERSION = "fragreuse-arceager/1"
SHIFT, REDUCE = 0, 1
ROOT_LABEL = "root"
STRAGGLER_LABEL = "dep"


class TrainingError(ValueError):
    pass


def projective_violations(heads: Sequence[int]) -> list[int]:
    """1-based dependents whose incoming arc is non-projective (heads are 1-based, 0 = root)."""
    n = len(heads)
    bad = []
    for d in range(1, n + 1):
        h = heads[d - 1]
        lo, hi = min(h, d), max(h, d)
        for k in range(lo + 1, hi):
            a = k
            while a not in (0, h):
                a = heads[a - 1]
            if a != h:
                bad.append(d)
                break
    return bad


def projectivize(heads: Sequence[int]) -> list[int]:
    """Lift the shortest non-projective arc to its grandparent until none remain."""
    heads = list(heads)
    while True:
        bad = projective_violations(heads)
        if not bad:
            return heads
        d = min(bad, key=lambda x: (abs(heads[x - 1] - x), x))
        heads[d - 1] = heads[heads[d - 1] - 1]


class _State:
    __slots__ = ("n", "stack", "b", "head", "label", "lmc", "rmc", "root_taken")

    def __init__(self, n: int):
        self.n = n
        self.stack = [0]
        self.b = 1
        self.head = [-1] * (n + 1)
        self.label: list[Optional[str]] = [None] * (n + 1)
        self.lmc = [0] * (n + 1)  # 0 = none (root is never a child)
        self.rmc = [0] * (n + 1)
        self.root_taken = False

    def add_arc(self, h: int, d: int, lab: str) -> None:
        self.head[d] = h
        self.label[d] = lab
        if d < h:
            if not self.lmc[h] or d < self.lmc[h]:
                self.lmc[h] = d
        elif d > self.rmc[h]:
            self.rmc[h] = d
        if h == 0:
            self.root_taken = True


def _features(st: _State, words: list[str], tags: list[str]) -> list[str]:
    n = st.n
    s0 = st.stack[-1]
    s1 = st.stack[-2] if len(st.stack) > 1 else -1
    b0 = st.b if st.b <= n else -1
    b1 = st.b + 1 if st.b + 1 <= n else -1
    b2 = st.b + 2 if st.b + 2 <= n else -1

    def t(i):
        return tags[i] if i >= 0 else "<none>"

    def w(i):
        return words[i] if i >= 0 else "<none>"

    s0t, s0w, b0t, b0w, b1t = t(s0), w(s0), t(b0), w(b0), t(b1)
    s0l = t(st.lmc[s0]) if st.lmc[s0] else "<none>"
    s0r = t(st.rmc[s0]) if st.rmc[s0] else "<none>"
    b0l = t(st.lmc[b0]) if b0 > 0 and st.lmc[b0] else "<none>"
    s0lab = st.label[s0] or "<none>"
    dist = min(b0 - s0, 5) if b0 > 0 else 0
    return [
        "bias",
        "s0w=" + s0w,
        "s0t=" + s0t,
        "s0wt=" + s0w + "/" + s0t,
        "b0w=" + b0w,
        "b0t=" + b0t,
        "b0wt=" + b0w + "/" + b0t,
        "b1t=" + b1t,
        "b1w=" + w(b1),
        "b2t=" + t(b2),
        "s1t=" + t(s1),
        "s0-1t=" + t(s0 - 1 if s0 > 0 else -1),
        "s0+1t=" + t(s0 + 1 if 0 < s0 < n else -1),
        "b0-1t=" + t(b0 - 1 if b0 > 1 else -1),
        "s0lab=" + s0lab,
        "s0hd=" + ("y" if st.head[s0] >= 0 else "n"),
        "s0t b0t=" + s0t + " " + b0t,
        "s0w b0w=" + s0w + " " + b0w,
        "s0wt b0t=" + s0w + "/" + s0t + " " + b0t,
        "s0t b0wt=" + s0t + " " + b0w + "/" + b0t,
        "s0t b0t b1t=" + s0t + " " + b0t + " " + b1t,
        "s1t s0t b0t=" + t(s1) + " " + s0t + " " + b0t,
        "s0t s0l b0t=" + s0t + " " + s0l + " " + b0t,
        "s0t s0r b0t=" + s0t + " " + s0r + " " + b0t,
        "s0t b0t b0l=" + s0t + " " + b0t + " " + b0l,
        "s0t b0t d=" + s0t + " " + b0t + " " + str(dist),
        "s0lab b0t=" + s0lab + " " + b0t,
    ]


@dataclass
class BaselineModel:
    labels: list[str]
    feature_index: dict[str, int] = field(default_factory=dict)
    weights: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    metadata: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return 2 + 2 * len(self.labels)

    def action(self, cls: int) -> tuple[str, Optional[str]]:
        if cls == SHIFT:
            return "shift", None
        if cls == REDUCE:
            return "reduce", None
        k = cls - 2
        kind = "left" if k % 2 == 0 else "right"
        return kind, self.labels[k // 2]

    def class_of(self, kind: str, label: Optional[str] = None) -> int:
        if kind == "shift":
            return SHIFT
        if kind == "reduce":
            return REDUCE
        k = 2 * self.labels.index(label)
        return 2 + k + (0 if kind == "left" else 1)

    def weight_map(self) -> dict[str, dict[int, float]]:
        """Non-zero weights as ``{feature: {class: weight}}`` (for comparison and storage)."""
        out = {}
        for feat, row in self.feature_index.items():
            nz = np.nonzero(self.weights[row])[0]
            if len(nz):
                out[feat] = {int(c): float(self.weights[row, c]) for c in nz}
        return out

    def save(self, path: Union[str, Path]) -> None:
        data = {
            "version": MODEL_VERSION,
            "labels": self.labels,
            "metadata": self.metadata,
            "weights": {f: [[c, w] for c, w in sorted(cw.items())] for f, cw in self.weight_map().items()},
        }
        Path(path).write_text(json.dumps(data), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BaselineModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {data.get('version')!r}; expected {MODEL_VERSION!r}")
        model = cls(list(data["labels"]), metadata=data.get("metadata", {}))
        feats = sorted(data["weights"])
        model.feature_index = {f: i for i, f in enumerate(feats)}
        model.weights = np.zeros((len(feats), model.n_classes))
        for f in feats:
            for c, w in data["weights"][f]:
                model.weights[model.feature_index[f], c] = w
        return model


def _legal(st: _State, n_classes: int) -> np.ndarray:
    ok = np.zeros(n_classes, dtype=bool)
    s0 = st.stack[-1]
    has_buffer = st.b <= st.n
    if has_buffer:
        ok[SHIFT] = True
        if s0 != 0 and st.head[s0] < 0:
            ok[2::2] = True
        if s0 != 0 or not st.root_taken:
            ok[3::2] = True
    if s0 != 0 and st.head[s0] >= 0:
        ok[REDUCE] = True
    return ok


def _apply(st: _State, kind: str, label: Optional[str]) -> None:
    s0 = st.stack[-1]
    if kind == "shift":
        st.stack.append(st.b)
        st.b += 1
    elif kind == "reduce":
        st.stack.pop()
    elif kind == "left":
        st.add_arc(st.b, s0, label)
        st.stack.pop()
    else:
        st.add_arc(s0, st.b, label)
        st.stack.append(st.b)
        st.b += 1


def _oracle(st: _State, gold: Sequence[int], labels: Sequence[str]) -> tuple[str, Optional[str]]:
    s0 = st.stack[-1]
    b0 = st.b
    if s0 != 0 and gold[s0] == b0:
        return "left", labels[s0]
    if gold[b0] == s0:
        return "right", labels[b0]
    if st.head[s0] >= 0 and any(gold[k] == b0 or gold[b0] == k for k in st.stack[:-1]):
        return "reduce", None
    return "shift", None


def _finish(st: _State) -> None:
    """Give every headless word a head; keeps the tree single-rooted and projective."""
    headless = [i for i in range(1, st.n + 1) if st.head[i] < 0]
    if not headless:
        return
    root = next((i for i in range(1, st.n + 1) if st.head[i] == 0), None)
    if root is None:
        root = headless.pop(0)
        st.add_arc(0, root, ROOT_LABEL)
    for i in headless:
        st.add_arc(root, i, STRAGGLER_LABEL)


def _arrays(sent: Sentence, tag_field: str) -> tuple[list[str], list[str]]:
    words = ["<root>"] + [t.form.lower() for t in sent.tokens]
    tags = ["<root>"] + [t.tag(tag_field) for t in sent.tokens]
    return words, tags


def _gold_sequences(sent: Sentence) -> tuple[list[int], list[str]]:
    heads = projectivize([t.head for t in sent.tokens])
    labels = [ROOT_LABEL if h == 0 else t.deprel for t, h in zip(sent.tokens, heads)]
    return [-1] + heads, [""] + labels


def train_baseline(
    treebank: Treebank, epochs: int = 10, seed: int = 0, tag_field: str = "upos"
) -> BaselineModel:
    """Averaged-perceptron training on static-oracle transition sequences."""
    sents = [s for s in treebank if s.annotated and not s.unsupported and len(s)]
    if not sents:
        raise TrainingError("no annotated sentences to train on")
    label_set = sorted({lab for s in sents for lab in _gold_sequences(s)[1][1:]})
    model = BaselineModel(label_set, metadata={"epochs": epochs, "seed": seed, "tag_field": tag_field})

    # the static oracle follows the gold path, so each configuration is extracted once
    index: dict[str, int] = {}
    examples = []  # per sentence: list of (feature ids, gold class, legal mask)
    for sent in sents:
        gold, labels = _gold_sequences(sent)
        words, tags = _arrays(sent, tag_field)
        st = _State(len(sent))
        seq = []
        while st.b <= st.n:
            feats = _features(st, words, tags)
            ids = np.fromiter((index.setdefault(f, len(index)) for f in feats), dtype=np.int64)
            kind, lab = _oracle(st, gold, labels)
            seq.append((ids, model.class_of(kind, lab), _legal(st, model.n_classes)))
            _apply(st, kind, lab)
        examples.append(seq)

    n_classes = model.n_classes
    weights = np.zeros((len(index), n_classes))
    totals = np.zeros_like(weights)
    step = 1
    rng = random.Random(seed)
    order = list(range(len(examples)))
    for epoch in range(epochs):
        rng.shuffle(order)
        errors = 0
        seen = 0
        for si in order:
            for ids, gold_cls, legal in examples[si]:
                scores = weights[ids].sum(axis=0)
                scores[~legal] = -np.inf
                gold_score = scores[gold_cls]
                scores[gold_cls] = -np.inf
                pred = int(np.argmax(scores))
                # a tie counts as an error so training states end up strictly separated
                if scores[pred] >= gold_score:
                    weights[ids, gold_cls] += 1.0
                    weights[ids, pred] -= 1.0
                    totals[ids, gold_cls] += step
                    totals[ids, pred] -= step
                    errors += 1
                seen += 1
                step += 1
        log.info("epoch %d: %d/%d transition errors", epoch + 1, errors, seen)
        if errors == 0 and "converged_epoch" not in model.metadata:
            # keep going: error-free epochs pull the average towards the final weights
            model.metadata["converged_epoch"] = epoch + 1
    model.feature_index = index
    model.weights = weights - totals / step if epochs else weights
    return model


def _parse_sentence(model: BaselineModel, sent: Sentence, tag_field: str) -> Sentence:
    n = len(sent)
    if n == 0:
        return sent
    words, tags = _arrays(sent, tag_field)
    st = _State(n)
    index = model.feature_index
    weights = model.weights
    n_classes = model.n_classes
    while st.b <= n:
        ids = [i for f in _features(st, words, tags) if (i := index.get(f)) is not None]
        scores = weights[ids].sum(axis=0) if ids else np.zeros(n_classes)
        scores[~_legal(st, n_classes)] = -np.inf
        kind, lab = model.action(int(np.argmax(scores)))
        _apply(st, kind, lab)
    _finish(st)
    return sent.with_tokens(
        replace(tok, head=st.head[tok.id], deprel=st.label[tok.id]) for tok in sent.tokens
    )


def parse_baseline(model: BaselineModel, treebank: Treebank) -> tuple[Treebank, float]:
    """Parse every sentence; the returned time covers inference only."""
    tag_field = model.metadata.get("tag_field", "upos")
    start = time.perf_counter()
    out = [_parse_sentence(model, s, tag_field) for s in treebank]
    elapsed = time.perf_counter() - start
    return Treebank(tuple(out)), elapsed
