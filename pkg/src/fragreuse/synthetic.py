"""Synthetic treebanks: random projective trees and a toy English-like grammar.

Used by the test-suite and as demo data when no real treebank is at hand.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .conllu import Sentence, Token, Treebank


def random_projective_heads(n: int, rng: random.Random) -> list[int]:
    """Heads (1-based, 0 = root) of a random projective tree over n words."""
    heads = [0] * n

    def subtree(lo: int, hi: int, parent: int) -> None:
        root = rng.randint(lo, hi)
        heads[root - 1] = parent
        attach(lo, root - 1, root)
        attach(root + 1, hi, root)

    def attach(lo: int, hi: int, parent: int) -> None:
        while lo <= hi:
            end = rng.randint(lo, hi)
            subtree(lo, end, parent)
            lo = end + 1

    if n:
        subtree(1, n, 0)
    return heads


def sentence_from_arrays(
    forms: Sequence[str],
    tags: Sequence[str],
    heads: Sequence[Optional[int]],
    deprels: Sequence[str],
    comments: Sequence[str] = (),
) -> Sentence:
    tokens = tuple(
        Token(i, f, f.lower(), t, t, "_", h, d) for i, (f, t, h, d) in enumerate(zip(forms, tags, heads, deprels), 1)
    )
    return Sentence(tokens, tuple(comments))


def random_treebank(
    rng: random.Random,
    max_sentences: int = 50,
    max_len: int = 12,
    tags: Sequence[str] = ("A", "B", "C", "D", "E", "F"),
    labels: Sequence[str] = ("x", "y", "z"),
) -> Treebank:
    sents = []
    for s in range(rng.randint(0, max_sentences)):
        n = rng.randint(1, max_len)
        heads = random_projective_heads(n, rng)
        tag_seq = [rng.choice(tags) for _ in range(n)]
        deps = ["root" if h == 0 else rng.choice(labels) for h in heads]
        forms = [f"w{rng.randint(0, 20)}" for _ in range(n)]
        sents.append(sentence_from_arrays(forms, tag_seq, heads, deps, [f"# sent_id = r{s}"]))
    return Treebank(tuple(sents))


@dataclass
class _Node:
    form: str
    tag: str
    deprel: str = "root"
    left: list["_Node"] = field(default_factory=list)
    right: list["_Node"] = field(default_factory=list)


LEXICON = {
    "DET": ["the", "a", "this", "every", "some"],
    "ADJ": ["big", "old", "red", "quiet", "new", "strange", "happy"],
    "NOUN": ["dog", "city", "report", "house", "idea", "river", "teacher", "plan", "car", "book"],
    "PROPN": ["Maria", "Lisbon", "Kim", "Oslo", "Acme"],
    "PRON": ["she", "they", "it", "we"],
    "VERB": ["saw", "likes", "built", "found", "reads", "moved", "wrote", "sold"],
    "AUX": ["will", "can", "has", "is"],
    "ADV": ["quickly", "often", "never", "really"],
    "ADP": ["in", "on", "with", "near", "of"],
    "SCONJ": ["because", "when", "if"],
    "CCONJ": ["and", "but"],
    "NUM": ["two", "three", "ten"],
    "PUNCT": [".", "!"],
}


class ToyGrammar:
    """A small generative dependency grammar with realistic PoS n-gram regularities.

    Prepositional-phrase attachment is deliberately ambiguous (noun vs verb)
    so blind template application costs some accuracy.
    """

    def __init__(self, rng: random.Random):
        self.rng = rng

    def word(self, tag: str, deprel: str) -> _Node:
        return _Node(self.rng.choice(LEXICON[tag]), tag, deprel)

    def np(self, deprel: str, depth: int = 0) -> _Node:
        r = self.rng.random()
        if r < 0.18:
            return self.word("PRON", deprel)
        if r < 0.32:
            head = self.word("PROPN", deprel)
            if self.rng.random() < 0.3:
                head.right.append(self.word("PROPN", "flat"))
            return head
        head = self.word("NOUN", deprel)
        if self.rng.random() < 0.1:
            head.left.append(self.word("NOUN", "compound"))
        for _ in range(self.rng.choices((0, 1, 2), (0.6, 0.32, 0.08))[0]):
            mod = self.word("ADJ", "amod")
            if self.rng.random() < 0.08:
                mod.left.append(self.word("ADV", "advmod"))
            head.left.insert(0, mod)
        if self.rng.random() < 0.08:
            head.left.insert(0, self.word("NUM", "nummod"))
        if self.rng.random() < 0.78:
            head.left.insert(0, self.word("DET", "det"))
        if depth < 1 and self.rng.random() < 0.15:
            head.right.append(self.pp("nmod", depth + 1))
        return head

    def pp(self, deprel: str, depth: int = 0) -> _Node:
        obj = self.np(deprel, depth)
        obj.left.insert(0, self.word("ADP", "case"))
        return obj

    def clause(self, depth: int = 0) -> _Node:
        if self.rng.random() < 0.15:
            pred = self.word("ADJ", "root")
            pred.left.append(self.word("AUX", "cop"))
            if self.rng.random() < 0.2:
                pred.left.insert(0, self.word("ADV", "advmod"))
                pred.left[0], pred.left[1] = pred.left[1], pred.left[0]
            pred.left.insert(0, self.np("nsubj", depth))
            return pred
        verb = self.word("VERB", "root")
        if self.rng.random() < 0.2:
            verb.left.append(self.word("ADV", "advmod"))
        if self.rng.random() < 0.3:
            verb.left.insert(0, self.word("AUX", "aux"))
        verb.left.insert(0, self.np("nsubj", depth))
        if self.rng.random() < 0.7:
            verb.right.append(self.np("obj", depth))
        if self.rng.random() < 0.35:
            verb.right.append(self.pp("obl", depth))
        if self.rng.random() < 0.1:
            verb.right.append(self.word("ADV", "advmod"))
        if depth == 0 and self.rng.random() < 0.1:
            conj = self.word("VERB", "conj")
            conj.left.append(self.word("CCONJ", "cc"))
            if self.rng.random() < 0.6:
                conj.right.append(self.np("obj", depth + 1))
            verb.right.append(conj)
        return verb

    def sentence(self) -> list[list]:
        root = self.clause()
        if self.rng.random() < 0.12:
            sub = self.clause(depth=1)
            sub.deprel = "advcl"
            sub.left.insert(0, self.word("SCONJ", "mark"))
            root.left.insert(0, sub)
        root.right.append(self.word("PUNCT", "punct"))
        rows: list[list] = []
        _emit(root, 0, rows)
        return rows


def _emit(node: _Node, parent: int, rows: list) -> int:
    """Append ``node``'s subtree to ``rows`` in surface order and return its 1-based id."""
    pending = []
    for dep in node.left:
        pending.append(_emit(dep, -1, rows))
    me = len(rows) + 1
    rows.append([node.form, node.tag, parent, node.deprel])
    for dep in node.right:
        pending.append(_emit(dep, -1, rows))
    for child in pending:
        rows[child - 1][2] = me
    return me


def toy_treebank(n_sentences: int, seed: int = 0, prefix: str = "toy") -> Treebank:
    rng = random.Random(seed)
    grammar = ToyGrammar(rng)
    sents = []
    for i in range(n_sentences):
        rows = grammar.sentence()
        rows[0][0] = rows[0][0][:1].upper() + rows[0][0][1:]
        forms, tags, heads, deps = zip(*rows)
        text = " ".join(forms)
        sents.append(
            sentence_from_arrays(forms, tags, heads, deps, [f"# sent_id = {prefix}-{i + 1}", f"# text = {text}"])
        )
    return Treebank(tuple(sents))
