"""Input reduction: collapse template-matched n-grams to their head word.

Matching looks at tags only. When a treebank carries gold heads they are
repaired by contracting each matched span into its fragment head: outside
words attached to a removed word are promoted to the fragment head, and the
fragment head takes over the attachment of the span's highest word. For a
match that agrees with gold this is exactly "dependents move to the head";
for a blind mismatch it still yields a tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import IO, Optional, Sequence, Union

from .conllu import ConlluError, MultiwordToken, Sentence, Token, Treebank, parse_line, tree_problem
from .mining import Template, TemplateStore

SIDECAR_VERSION = "fragreuse-reduction/1"


class ReductionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Match:
    span: tuple[int, ...]  # original word ids, left to right
    head: int  # original id of the fragment head
    template: Template

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def removed(self) -> tuple[int, ...]:
        return tuple(i for i in self.span if i != self.head)

    def to_dict(self) -> dict:
        return {"span": list(self.span), "head": self.head, "template": self.template.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Match":
        return cls(tuple(data["span"]), data["head"], Template.from_dict(data["template"]))


@dataclass(frozen=True)
class ReductionRecord:
    original_length: int
    kept: tuple[int, ...]  # reduced position i+1 -> original id kept[i]
    matches: tuple[Match, ...] = ()
    removed_tokens: tuple[Token, ...] = ()
    removed_mwts: tuple[MultiwordToken, ...] = ()

    @classmethod
    def identity(cls, length: int) -> "ReductionRecord":
        return cls(length, tuple(range(1, length + 1)))

    @property
    def reduced_length(self) -> int:
        return len(self.kept)

    @property
    def removed_count(self) -> int:
        return self.original_length - len(self.kept)

    @property
    def position_map(self) -> dict[int, int]:
        """Original id -> reduced id for surviving words."""
        return {orig: new for new, orig in enumerate(self.kept, 1)}

    def to_dict(self) -> dict:
        return {
            "original_length": self.original_length,
            "kept": list(self.kept),
            "matches": [m.to_dict() for m in self.matches],
            "removed_tokens": [t.to_line() for t in self.removed_tokens],
            "removed_mwts": [m.to_line() for m in self.removed_mwts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReductionRecord":
        return cls(
            data["original_length"],
            tuple(data["kept"]),
            tuple(Match.from_dict(m) for m in data.get("matches", ())),
            tuple(parse_line(line) for line in data.get("removed_tokens", ())),
            tuple(parse_line(line) for line in data.get("removed_mwts", ())),
        )


@dataclass(frozen=True)
class ReducedTreebank:
    treebank: Treebank
    records: tuple[ReductionRecord, ...]
    original_words: int
    removed_words: int

    @property
    def reduction_ratio(self) -> Fraction:
        if not self.original_words:
            return Fraction(0)
        return Fraction(100 * self.removed_words, self.original_words)

    @property
    def reduction_pct(self) -> float:
        return round(float(self.reduction_ratio), 1)


def _bag_matches(tags: Sequence[str], store: TemplateStore) -> list[Match]:
    by_key = store.by_key()
    sizes = sorted({t.n for t in store.templates})
    candidates = []
    for n in sizes:
        for s in range(len(tags) - n + 1):
            t = by_key.get(tuple(tags[s : s + n]))
            if t is not None:
                candidates.append((t, s))
    # higher head confidence, then longer, then leftmost
    candidates.sort(key=lambda c: (-c[0].head_ratio, -c[0].n, c[1]))
    taken = [False] * len(tags)
    accepted = []
    for t, s in candidates:
        if any(taken[s : s + t.n]):
            continue
        for k in range(s, s + t.n):
            taken[k] = True
        span = tuple(range(s + 1, s + t.n + 1))
        accepted.append(Match(span, span[t.fragment_head], t))
    accepted.sort(key=lambda m: m.start)
    return accepted


def _ordered_matches(tags: Sequence[str], templates: Sequence[Template]) -> list[Match]:
    ids = list(range(1, len(tags) + 1))
    current = list(tags)
    matches = []
    for t in sorted(templates, key=lambda t: (t.rank is None, t.rank)):
        next_ids, next_tags = [], []
        i = 0
        while i < len(ids):
            if i + t.n <= len(ids) and tuple(current[i : i + t.n]) == t.key:
                span = tuple(ids[i : i + t.n])
                matches.append(Match(span, span[t.fragment_head], t))
                next_ids.append(span[t.fragment_head])
                next_tags.append(current[i + t.fragment_head])
                i += t.n
            else:
                next_ids.append(ids[i])
                next_tags.append(current[i])
                i += 1
        ids, current = next_ids, next_tags
    return matches


def find_matches(tags: Sequence[str], store: TemplateStore) -> list[Match]:
    """Accepted matches for a tag sequence, in application order.

    Bag-of-rules stores match over the original adjacency and return
    disjoint spans sorted left to right. Ordered (iterative) stores apply each
    template in rank order over the progressively reduced sequence.
    """
    if not store.templates or len(tags) < 2:
        return []
    if store.ordered:
        return _ordered_matches(tags, store.templates)
    return _bag_matches(tags, store)


class _WorkingTree:
    """Mutable heads/labels of the surviving words during gold repair."""

    def __init__(self, tokens: Sequence[Token]):
        self.head = {t.id: t.head for t in tokens}
        self.deprel = {t.id: t.deprel for t in tokens}

    def depth(self, node: int) -> int:
        d = 0
        while node:
            node = self.head[node]
            d += 1
            if d > len(self.head):
                raise ReductionError("cycle in working tree")
        return d

    def agrees(self, m: Match) -> bool:
        """Whether the current tree realises ``m``'s template exactly."""
        pattern = m.template.head_pattern
        span = set(m.span)
        if self.head[m.head] in span:
            return False
        for i, node in enumerate(m.span):
            if node == m.head:
                continue
            if self.head[node] != m.span[pattern.heads[i]]:
                return False
        removed = set(m.removed)
        return not any(h in removed and d not in span for d, h in self.head.items())

    def contract(self, m: Match) -> None:
        span = set(m.span)
        top = min(m.span, key=lambda x: (self.depth(x), x != m.head, x))
        removed = set(m.removed)
        for node, h in self.head.items():
            if h in removed and node not in span:
                self.head[node] = m.head
        if top != m.head:
            self.head[m.head] = self.head[top]
            self.deprel[m.head] = self.deprel[top]
        for r in removed:
            del self.head[r]
            del self.deprel[r]


def reduce_sentence(
    sent: Sentence, store: TemplateStore, *, gold: bool = False, strict: bool = False
) -> tuple[Sentence, ReductionRecord]:
    """Reduce one sentence; ``gold`` requires (and checks) a well-formed tree."""
    n = len(sent)
    if sent.unsupported or n < 2 or not store.templates:
        return sent, ReductionRecord.identity(n)
    matches = find_matches(sent.tags(store.tag_field), store)
    annotated = sent.annotated
    if gold and not annotated:
        raise ReductionError(f"sentence {sent.sent_id or ''} lacks gold heads")
    if annotated:
        tree = _WorkingTree(sent.tokens)
        applied = []
        for m in matches:
            if strict and not tree.agrees(m):
                continue
            tree.contract(m)
            applied.append(m)
        matches = applied
    if not matches:
        return sent, ReductionRecord.identity(n)

    removed = {r for m in matches for r in m.removed}
    kept = tuple(i for i in range(1, n + 1) if i not in removed)
    new_id = {orig: new for new, orig in enumerate(kept, 1)}
    new_id[0] = 0
    tokens = []
    for orig in kept:
        tok = sent.tokens[orig - 1]
        if annotated:
            tok = replace(tok, id=new_id[orig], head=new_id[tree.head[orig]], deprel=tree.deprel[orig])
        else:
            tok = replace(tok, id=new_id[orig], head=None)
        tokens.append(tok)
    mwts, dropped = [], []
    for rng in sent.mwt_ranges:
        if any(i in removed for i in range(rng.start, rng.end + 1)):
            dropped.append(rng)
        else:
            mwts.append(replace(rng, start=new_id[rng.start], end=new_id[rng.end]))
    reduced = sent.with_tokens(tokens, mwt_ranges=tuple(mwts))
    if gold:
        problem = tree_problem(reduced.heads())
        if problem:
            raise ReductionError(f"reduced sentence {sent.sent_id or ''} is not a tree: {problem}")
    record = ReductionRecord(
        n,
        kept,
        tuple(matches),
        tuple(sent.tokens[r - 1] for r in sorted(removed)),
        tuple(dropped),
    )
    return reduced, record


def _reduce(treebank: Treebank, store: TemplateStore, gold: bool, strict: bool) -> ReducedTreebank:
    sentences, records = [], []
    removed = 0
    for sent in treebank:
        reduced, record = reduce_sentence(sent, store, gold=gold, strict=strict)
        sentences.append(reduced)
        records.append(record)
        removed += record.removed_count
    return ReducedTreebank(Treebank(tuple(sentences)), tuple(records), treebank.word_count, removed)


def reduce_input(treebank: Treebank, store: TemplateStore) -> ReducedTreebank:
    """Blindly apply templates before parsing.

    Gold heads, if present, are carried through the contraction so the
    reduced file can still be inspected; unannotated input stays unannotated.
    """
    return _reduce(treebank, store, gold=False, strict=False)


def reduce_gold(treebank: Treebank, store: TemplateStore, strict: bool = False) -> ReducedTreebank:
    """Reduce a gold training treebank, keeping every sentence a tree.

    With ``strict`` only matches whose gold structure agrees with the
    template are applied.
    """
    return _reduce(treebank, store, gold=True, strict=strict)


def reinsert(sentence: Sentence, record: ReductionRecord) -> list[Token]:
    """Original-order tokens: surviving words from ``sentence`` and removed words from the record.

    Heads of surviving words are mapped back to original ids; removed words
    keep whatever the record stored.
    """
    if len(sentence) != record.reduced_length:
        raise ReductionError(
            f"reduced sentence has {len(sentence)} words, record expects {record.reduced_length}"
        )
    by_id: dict[int, Token] = {t.id: t for t in record.removed_tokens}
    for reduced_tok, orig in zip(sentence.tokens, record.kept):
        head = reduced_tok.head
        if head is not None:
            if not 0 <= head <= len(record.kept):
                raise ReductionError(f"head {head} out of range for reduced word {reduced_tok.id}")
            head = record.kept[head - 1] if head else 0
        by_id[orig] = replace(reduced_tok, id=orig, head=head)
    if sorted(by_id) != list(range(1, record.original_length + 1)):
        raise ReductionError("record does not cover the original sentence")
    return [by_id[i] for i in range(1, record.original_length + 1)]


def write_records(records: Sequence[ReductionRecord], sink: Union[str, Path, IO[str]], tag_field: str = "upos") -> None:
    data = {
        "version": SIDECAR_VERSION,
        "tag_field": tag_field,
        "sentences": [dict(index=i, **r.to_dict()) for i, r in enumerate(records)],
    }
    text = json.dumps(data) + "\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def read_records(source: Union[str, Path, IO[str]]) -> tuple[ReductionRecord, ...]:
    try:
        if isinstance(source, (str, Path)):
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        else:
            data = json.load(source)
    except json.JSONDecodeError as exc:
        raise ReductionError(f"malformed reduction sidecar: {exc}") from exc
    if data.get("version") != SIDECAR_VERSION:
        raise ReductionError(
            f"unsupported sidecar version {data.get('version')!r}; expected {SIDECAR_VERSION!r}"
        )
    entries = sorted(data["sentences"], key=lambda e: e["index"])
    if [e["index"] for e in entries] != list(range(len(entries))):
        raise ReductionError("sidecar sentence indices are not consecutive")
    try:
        return tuple(ReductionRecord.from_dict(e) for e in entries)
    except (KeyError, ConlluError) as exc:
        raise ReductionError(f"malformed reduction sidecar: {exc}") from exc
