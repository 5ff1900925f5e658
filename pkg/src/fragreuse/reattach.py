"""Splice stored fragment analyses back into a parse of the reduced input."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from .conllu import Sentence, Treebank, is_tree
from .reduce import ReductionError, ReductionRecord, reinsert

log = logging.getLogger(__name__)


class ReattachError(ValueError):
    pass


@dataclass(frozen=True)
class ParsedReduced:
    treebank: Treebank
    records: tuple[ReductionRecord, ...]


def reattach_sentence(parsed: Sentence, record: ReductionRecord) -> Sentence:
    if not record.matches:
        if len(parsed) != record.original_length:
            raise ReductionError(
                f"parse has {len(parsed)} words, record expects {record.original_length}"
            )
        return parsed
    tokens = {t.id: t for t in reinsert(parsed, record)}
    for m in record.matches:
        heads = m.template.head_pattern.heads
        labels = m.template.label_pattern.labels
        for i, node in enumerate(m.span):
            if node == m.head:
                continue
            tokens[node] = replace(tokens[node], head=m.span[heads[i]], deprel=labels[i])
    mwts = [
        replace(r, start=record.kept[r.start - 1], end=record.kept[r.end - 1])
        for r in parsed.mwt_ranges
    ]
    mwts.extend(record.removed_mwts)
    mwts.sort(key=lambda r: r.start)
    return parsed.with_tokens(
        (tokens[i] for i in range(1, record.original_length + 1)), mwt_ranges=tuple(mwts)
    )


def reattach(parsed: ParsedReduced | Treebank, records: Sequence[ReductionRecord] | None = None) -> Treebank:
    """Restore original sentences from a parse of the reduced input.

    Removed words get the head and label prescribed by their template; every
    other word keeps the parser's decision, mapped back to original ids.
    Non-tree parser output is reattached as is and logged.
    """
    if isinstance(parsed, ParsedReduced):
        treebank, records = parsed.treebank, parsed.records
    else:
        treebank = parsed
    if records is None:
        raise ReattachError("reduction records are required")
    if len(treebank) != len(records):
        raise ReattachError(f"parse has {len(treebank)} sentences, records cover {len(records)}")
    out = []
    non_trees = 0
    for idx, (sent, record) in enumerate(zip(treebank, records)):
        try:
            restored = reattach_sentence(sent, record)
        except ReductionError as exc:
            name = sent.sent_id or f"#{idx}"
            raise ReattachError(f"sentence {name}: {exc}") from None
        if restored.annotated and not is_tree(restored.heads()):
            non_trees += 1
        out.append(restored)
    if non_trees:
        log.warning("%d reattached sentences are not single-rooted trees", non_trees)
    return Treebank(tuple(out))
