"""Head and label patterns of PoS n-gram fragments.

A head pattern records, for each word of an n-gram, the index of its head
inside the fragment (``None`` when the head lies outside, printed ``-``) and
whether any word attached inside the fragment has dependents outside it.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .conllu import Sentence

OUT = "-"


class Eligibility(enum.Enum):
    ELIGIBLE = "Eligible"
    EXTERNAL_DEPENDENT = "ExternalDependent"
    NOT_FULLY_CONNECTED = "NotFullyConnected"
    NON_PROJECTIVE = "NonProjective"


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _parse_flag(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


@dataclass(frozen=True)
class HeadPattern:
    heads: tuple[Optional[int], ...]
    external: bool = False

    def __post_init__(self):
        n = len(self.heads)
        for i, h in enumerate(self.heads):
            if h is not None and not (0 <= h < n and h != i):
                raise ValueError(f"invalid internal head {h} at position {i}")
        if self.external and all(h is None for h in self.heads):
            raise ValueError("external flag requires an internally attached word")

    def __str__(self) -> str:
        parts = [OUT if h is None else str(h) for h in self.heads]
        return " ".join(parts + [_flag(self.external)])

    @classmethod
    def parse(cls, text: str) -> "HeadPattern":
        *heads, flag = text.split()
        return cls(tuple(None if h == OUT else int(h) for h in heads), _parse_flag(flag))

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def head_positions(self) -> list[int]:
        """Fragment positions whose head is outside (candidate fragment heads)."""
        return [i for i, h in enumerate(self.heads) if h is None]

    @property
    def fragment_head(self) -> int:
        (head,) = self.head_positions
        return head

    def internal_arcs(self) -> list[tuple[int, int]]:
        """(head, dependent) pairs inside the fragment."""
        return [(h, d) for d, h in enumerate(self.heads) if h is not None]


@dataclass(frozen=True)
class LabelPattern:
    labels: tuple[Optional[str], ...]
    external: bool = False

    def __str__(self) -> str:
        parts = [OUT if lab is None else lab for lab in self.labels]
        return " ".join(parts + [_flag(self.external)])

    @classmethod
    def parse(cls, text: str) -> "LabelPattern":
        *labels, flag = text.split()
        return cls(tuple(None if lab == OUT else lab for lab in labels), _parse_flag(flag))


def pattern_from_heads(
    heads: Sequence[Optional[int]],
    deprels: Sequence[str],
    has_outside_dependent: Sequence[bool],
    start: int,
    n: int,
) -> tuple[HeadPattern, LabelPattern]:
    """Core of :func:`extract_pattern` on plain arrays.

    ``heads`` are 1-based (0 = root) for the whole sentence, ``start`` is a
    0-based offset, and ``has_outside_dependent[k]`` tells whether word k
    (0-based) has a dependent outside ``[start, start + n)``.
    """
    lo, hi = start + 1, start + n  # 1-based ids covered
    rel: list[Optional[int]] = []
    labels: list[Optional[str]] = []
    external = False
    for k in range(start, start + n):
        h = heads[k]
        if h is not None and lo <= h <= hi:
            rel.append(h - lo)
            labels.append(deprels[k])
            if has_outside_dependent[k]:
                external = True
        else:
            rel.append(None)
            labels.append(None)
    if rel.count(None) != 1:
        # the flag only distinguishes single-headed fragments
        external = False
    return HeadPattern(tuple(rel), external), LabelPattern(tuple(labels), external)


def extract_pattern(sentence: Sentence, start: int, n: int) -> tuple[HeadPattern, LabelPattern]:
    """Pattern realised by the gold fragment of ``n`` words beginning at 0-based ``start``."""
    if n not in (2, 3):
        raise ValueError(f"fragment size must be 2 or 3, got {n}")
    if start < 0 or start + n > len(sentence):
        raise IndexError(f"span [{start}, {start + n}) outside sentence of length {len(sentence)}")
    heads = sentence.heads()
    lo, hi = start + 1, start + n
    outside = [False] * len(heads)
    for dep_id, h in enumerate(heads, 1):
        if h and not (lo <= dep_id <= hi) and lo <= h <= hi:
            outside[h - 1] = True
    deprels = [t.deprel for t in sentence.tokens]
    return pattern_from_heads(heads, deprels, outside, start, n)


def _has_cycle(heads: Sequence[Optional[int]]) -> bool:
    for start in range(len(heads)):
        seen = set()
        node: Optional[int] = start
        while node is not None:
            if node in seen:
                return True
            seen.add(node)
            node = heads[node]
    return False


def is_projective(pattern: HeadPattern) -> bool:
    """Fragment-internal projectivity.

    An internal arc between i and j is non-projective when some word strictly
    between them has its head outside ``[min(i, j), max(i, j)]``; a head
    outside the fragment counts as outside the interval.
    """
    for h, d in pattern.internal_arcs():
        lo, hi = min(h, d), max(h, d)
        for k in range(lo + 1, hi):
            hk = pattern.heads[k]
            if hk is None or not lo <= hk <= hi:
                return False
    return True


def classify(pattern: HeadPattern) -> Eligibility:
    """First disqualifying reason, or ELIGIBLE."""
    if pattern.external:
        return Eligibility.EXTERNAL_DEPENDENT
    if len(pattern.head_positions) != 1 or _has_cycle(pattern.heads):
        return Eligibility.NOT_FULLY_CONNECTED
    if not is_projective(pattern):
        return Eligibility.NON_PROJECTIVE
    return Eligibility.ELIGIBLE


CONNECTED = "connected"
CONNECTED_EXTERNAL = "connected_external"
DISCONNECTED = "disconnected"


def enumerate_patterns(n: int, projective_only: bool = True) -> dict[str, list[HeadPattern]]:
    """All structurally valid head patterns for an n-gram, by class.

    Valid means acyclic internal arcs; with ``projective_only`` the internal
    arcs must also be projective, which is the restriction under which
    trigrams have 7 + 7 + 5 patterns. Disconnected fragments always carry
    ``external=False`` (see :func:`pattern_from_heads`).
    """
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    classes: dict[str, list[HeadPattern]] = {CONNECTED: [], CONNECTED_EXTERNAL: [], DISCONNECTED: []}
    choices = [[None] + [j for j in range(n) if j != i] for i in range(n)]
    for heads in itertools.product(*choices):
        if _has_cycle(heads):
            continue
        base = HeadPattern(heads, False)
        if projective_only and not is_projective(base):
            continue
        if len(base.head_positions) == 1:
            classes[CONNECTED].append(base)
            classes[CONNECTED_EXTERNAL].append(HeadPattern(heads, True))
        else:
            classes[DISCONNECTED].append(base)
    for members in classes.values():
        members.sort(key=str)
    return classes


def pattern_class_counts(n: int) -> Counter:
    return Counter({name: len(members) for name, members in enumerate_patterns(n).items()})
