"""Template mining over a gold treebank.

For every PoS bigram/trigram key the head patterns realised in the training
data are counted; the dominant pattern becomes a template when it is
eligible and both its head and label confidences clear the thresholds.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .conllu import Sentence, Treebank
from .patterns import Eligibility, HeadPattern, LabelPattern, classify, pattern_from_heads

log = logging.getLogger(__name__)

STORE_VERSION = "fragreuse-templates/1"
MODES = ("bag", "iterative")
PRIORITIES = ("confidence", "noun-proximity")
TAG_FIELDS = ("upos", "xpos")


class StoreError(ValueError):
    pass


@dataclass(frozen=True)
class MiningConfig:
    head_threshold: float = 83.0
    label_threshold: float = 83.0
    use_bigrams: bool = True
    use_trigrams: bool = True
    min_count: int = 1
    tag_field: str = "upos"
    mode: str = "bag"
    priority: str = "confidence"
    max_iterations: int = 200
    batch_size: int = 1

    def __post_init__(self):
        if not (self.use_bigrams or self.use_trigrams):
            raise ValueError("at least one of bigrams/trigrams must be enabled")
        for name in ("head_threshold", "label_threshold"):
            value = getattr(self, name)
            if not 0 < value <= 100:
                raise ValueError(f"{name} must be in (0, 100], got {value}")
        if self.min_count < 1:
            raise ValueError("min_count must be positive")
        if self.tag_field not in TAG_FIELDS:
            raise ValueError(f"tag_field must be one of {TAG_FIELDS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.priority not in PRIORITIES:
            raise ValueError(f"priority must be one of {PRIORITIES}")
        if self.max_iterations < 0 or self.batch_size < 1:
            raise ValueError("max_iterations must be >= 0 and batch_size >= 1")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(n for n, on in ((2, self.use_bigrams), (3, self.use_trigrams)) if on)

    @property
    def setup_name(self) -> str:
        """Compact setup label, e.g. ``M2,3_83-83``."""
        sizes = ",".join(map(str, self.sizes))
        return f"M{sizes}_{_num(self.head_threshold)}-{_num(self.label_threshold)}"

    @classmethod
    def from_setup(cls, setup: str, **overrides) -> "MiningConfig":
        """Parse ``"2,3:83-83"`` (n-gram sizes, then head-label thresholds)."""
        try:
            sizes_part, thresholds = setup.split(":")
            sizes = {int(s) for s in sizes_part.split(",") if s}
            head, label = (float(x) for x in thresholds.split("-"))
        except ValueError:
            raise ValueError(f"bad setup {setup!r}; expected e.g. '2,3:83-83'") from None
        if not sizes or not sizes <= {2, 3}:
            raise ValueError(f"bad n-gram sizes in setup {setup!r}")
        return cls(
            head_threshold=head,
            label_threshold=label,
            use_bigrams=2 in sizes,
            use_trigrams=3 in sizes,
            **overrides,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MiningConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown mining options: {sorted(unknown)}")
        return cls(**data)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else str(x)


@dataclass
class KeyCounts:
    total: int = 0
    patterns: Counter = field(default_factory=Counter)
    labeled: Counter = field(default_factory=Counter)

    def add(self, head: HeadPattern, label: LabelPattern) -> None:
        self.total += 1
        self.patterns[head] += 1
        self.labeled[head, label] += 1


@dataclass(frozen=True)
class Template:
    key: tuple[str, ...]
    head_pattern: HeadPattern
    label_pattern: LabelPattern
    head_count: int
    label_count: int
    frequency: int
    rank: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.key)

    @property
    def head_ratio(self) -> Fraction:
        return Fraction(100 * self.head_count, self.frequency)

    @property
    def label_ratio(self) -> Fraction:
        return Fraction(100 * self.label_count, self.frequency)

    @property
    def head_confidence(self) -> float:
        return float(self.head_ratio)

    @property
    def label_confidence(self) -> float:
        return float(self.label_ratio)

    @property
    def fragment_head(self) -> int:
        return self.head_pattern.fragment_head

    def to_dict(self) -> dict:
        return {
            "tags": list(self.key),
            "head_pattern": str(self.head_pattern),
            "label_pattern": str(self.label_pattern),
            "head_confidence": round(self.head_confidence, 2),
            "label_confidence": round(self.label_confidence, 2),
            "frequency": self.frequency,
            "head_count": self.head_count,
            "label_count": self.label_count,
            "rank": self.rank,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Template":
        return cls(
            key=tuple(data["tags"]),
            head_pattern=HeadPattern.parse(data["head_pattern"]),
            label_pattern=LabelPattern.parse(data["label_pattern"]),
            head_count=int(data["head_count"]),
            label_count=int(data["label_count"]),
            frequency=int(data["frequency"]),
            rank=data.get("rank"),
        )

    def __str__(self) -> str:
        return (
            f"{' '.join(self.key)} | {self.head_pattern} | {self.head_confidence:.2f}"
            f" | {self.label_pattern} | {self.label_confidence:.2f}"
        )


@dataclass(frozen=True)
class TemplateStore:
    templates: tuple[Template, ...] = ()
    config: MiningConfig = field(default_factory=MiningConfig)
    provenance: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        if self.config.mode == "bag":
            keys = [t.key for t in self.templates]
            if len(keys) != len(set(keys)):
                raise StoreError("duplicate template keys in bag-of-rules store")

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    @property
    def ordered(self) -> bool:
        return self.config.mode == "iterative"

    @property
    def tag_field(self) -> str:
        return self.config.tag_field

    def by_key(self) -> dict[tuple[str, ...], Template]:
        return {t.key: t for t in self.templates}

    def keys(self) -> set[tuple[str, ...]]:
        return {t.key for t in self.templates}

    def full_confidence_count(self) -> int:
        return sum(1 for t in self.templates if t.head_count == t.label_count == t.frequency)


def _sentence_children(heads: list) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in range(len(heads) + 1)]
    for dep_id, h in enumerate(heads, 1):
        if h is not None:
            children[h].append(dep_id)
    return children


def _count_sentence(sent: Sentence, config: MiningConfig, counts: dict) -> None:
    heads = sent.heads()
    deprels = [t.deprel for t in sent.tokens]
    tags = sent.tags(config.tag_field)
    children = _sentence_children(heads)
    length = len(heads)
    for n in config.sizes:
        for start in range(length - n + 1):
            lo, hi = start + 1, start + n
            outside = [False] * length
            for k in range(lo, hi + 1):
                outside[k - 1] = any(not lo <= c <= hi for c in children[k])
            head, label = pattern_from_heads(heads, deprels, outside, start, n)
            counts[tuple(tags[start : start + n])].add(head, label)


def countable(sent: Sentence) -> bool:
    return sent.annotated and not sent.unsupported


def count_patterns(treebank: Treebank, config: MiningConfig) -> dict[tuple[str, ...], KeyCounts]:
    """Pattern observations per tag n-gram over gold-annotated sentences."""
    counts: dict[tuple[str, ...], KeyCounts] = defaultdict(KeyCounts)
    for sent in treebank:
        if countable(sent):
            _count_sentence(sent, config, counts)
    return dict(counts)


def _dominant(counter: Counter, render) -> tuple[object, int]:
    return min(counter.items(), key=lambda kv: (-kv[1], render(kv[0])))


def template_for_key(key, kc: KeyCounts, config: MiningConfig) -> Optional[Template]:
    """The key's template if its dominant pattern is eligible and clears both thresholds."""
    if kc.total < config.min_count:
        return None
    head, head_count = _dominant(kc.patterns, str)
    if classify(head) is not Eligibility.ELIGIBLE:
        return None
    label_counts = Counter({lab: c for (h, lab), c in kc.labeled.items() if h == head})
    label, label_count = _dominant(label_counts, str)
    tmpl = Template(tuple(key), head, label, head_count, label_count, kc.total)
    if tmpl.head_ratio < Fraction(str(config.head_threshold)):
        return None
    if tmpl.label_ratio < Fraction(str(config.label_threshold)):
        return None
    return tmpl


def confidence_order(t: Template):
    return (-t.head_ratio, -t.frequency, -t.label_ratio, t.key)


def select_templates(counts: dict, config: MiningConfig) -> list[Template]:
    found = (template_for_key(key, kc, config) for key, kc in counts.items())
    return sorted((t for t in found if t is not None), key=confidence_order)


def _provenance(treebank: Treebank, source: Optional[str]) -> dict:
    prov = {"sentences": len(treebank), "words": treebank.word_count}
    if source:
        prov["source"] = source
    return prov


def mine(treebank: Treebank, config: MiningConfig, source: Optional[str] = None) -> TemplateStore:
    """Bag-of-rules template store (keys unique, sorted by confidence)."""
    if config.mode == "iterative":
        return mine_iterative(treebank, config, source)
    templates = select_templates(count_patterns(treebank, config), config)
    log.info("mined %d templates (%s)", len(templates), config.setup_name)
    return TemplateStore(tuple(templates), config, _provenance(treebank, source))


NOUN_UPOS = frozenset({"NOUN", "PROPN"})


def is_noun(tag: str, tag_field: str) -> bool:
    return tag in NOUN_UPOS if tag_field == "upos" else tag.startswith("NN")


def noun_distances(treebank: Treebank, tag_field: str) -> dict[str, float]:
    """Mean linear distance from each dependent tag to its noun head."""
    total: Counter = Counter()
    seen: Counter = Counter()
    for sent in treebank:
        if not countable(sent):
            continue
        tags = sent.tags(tag_field)
        for tok in sent.tokens:
            if tok.head and is_noun(tags[tok.head - 1], tag_field):
                total[tags[tok.id - 1]] += abs(tok.id - tok.head)
                seen[tags[tok.id - 1]] += 1
    return {tag: total[tag] / seen[tag] for tag in seen}


def _noun_score(t: Template, distances: dict, tag_field: str) -> Optional[float]:
    head = t.fragment_head
    if not is_noun(t.key[head], tag_field):
        return None
    deps = [tag for i, tag in enumerate(t.key) if i != head]
    if any(tag not in distances for tag in deps):
        return None
    return sum(distances[tag] for tag in deps) / len(deps)


def choose_batch(candidates: list[Template], config: MiningConfig, distances=None) -> list[Template]:
    if config.priority == "noun-proximity" and distances is not None:
        scored = [(s, t) for t in candidates if (s := _noun_score(t, distances, config.tag_field)) is not None]
        if scored:
            scored.sort(key=lambda st: (st[0], confidence_order(st[1])))
            return [t for _, t in scored[: config.batch_size]]
    return candidates[: config.batch_size]


def mine_iterative(
    treebank: Treebank, config: MiningConfig, source: Optional[str] = None
) -> TemplateStore:
    """Ordered templates, each mined on the treebank reduced by its predecessors."""
    from .reduce import reduce_gold

    config = replace(config, mode="iterative")
    distances = noun_distances(treebank, config.tag_field) if config.priority == "noun-proximity" else None
    working = treebank
    ordered: list[Template] = []
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        candidates = select_templates(count_patterns(working, config), config)
        if not candidates:
            break
        batch = [
            replace(t, rank=len(ordered) + i)
            for i, t in enumerate(choose_batch(candidates, config, distances))
        ]
        log.debug("iteration %d: %s", iterations, "; ".join(map(str, batch)))
        ordered.extend(batch)
        working = reduce_gold(working, TemplateStore(tuple(batch), config)).treebank
    log.info("mined %d ordered templates in %d iterations", len(ordered), iterations)
    return TemplateStore(tuple(ordered), config, _provenance(treebank, source))


def store_to_dict(store: TemplateStore) -> dict:
    return {
        "version": STORE_VERSION,
        "config": store.config.to_dict(),
        "provenance": store.provenance,
        "templates": [t.to_dict() for t in store.templates],
    }


def store_from_dict(data: dict) -> TemplateStore:
    if not isinstance(data, dict) or "version" not in data:
        raise StoreError("not a template store: missing version")
    if data["version"] != STORE_VERSION:
        raise StoreError(f"unsupported template store version {data['version']!r}; expected {STORE_VERSION!r}")
    try:
        config = MiningConfig.from_dict(data["config"])
        templates = tuple(Template.from_dict(t) for t in data["templates"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreError(f"malformed template store: {exc}") from exc
    return TemplateStore(templates, config, data.get("provenance", {}))


def save_store(store: TemplateStore, sink: Union[str, Path, IO[str]]) -> None:
    text = json.dumps(store_to_dict(store), indent=2) + "\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def load_store(source: Union[str, Path, IO[str]]) -> TemplateStore:
    try:
        if isinstance(source, (str, Path)):
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        else:
            data = json.load(source)
    except json.JSONDecodeError as exc:
        raise StoreError(f"malformed template store: {exc}") from exc
    return store_from_dict(data)


def template_table(templates: Iterable[Template]) -> str:
    rows = [("Template", "Head pattern", "Head conf", "Label pattern", "Label conf", "Freq")]
    for t in templates:
        rows.append(
            (
                " ".join(t.key),
                str(t.head_pattern),
                f"{t.head_confidence:.2f}",
                str(t.label_pattern),
                f"{t.label_confidence:.2f}",
                str(t.frequency),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
