"""CoNLL-U reading and writing.

Only basic dependencies of syntactic words are modelled. Multiword-token
range lines and empty nodes are kept as opaque column lists so that an
untouched file round-trips byte for byte.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

EMPTY = "_"


class ConlluError(ValueError):
    """Malformed CoNLL-U input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeValidationError(ValueError):
    """A gold-annotated sentence is not a single-rooted tree."""


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str = EMPTY
    upos: str = EMPTY
    xpos: str = EMPTY
    feats: str = EMPTY
    head: Optional[int] = None
    deprel: str = EMPTY
    deps: str = EMPTY
    misc: str = EMPTY

    def tag(self, field_name: str = "upos") -> str:
        return self.upos if field_name == "upos" else self.xpos

    def to_line(self) -> str:
        head = EMPTY if self.head is None else str(self.head)
        return "\t".join(
            (
                str(self.id),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                self.feats,
                head,
                self.deprel,
                self.deps,
                self.misc,
            )
        )


@dataclass(frozen=True)
class MultiwordToken:
    """A range line such as ``3-4  don't  _ ...``; ``columns`` holds fields 2-10."""

    start: int
    end: int
    columns: tuple[str, ...]

    @property
    def form(self) -> str:
        return self.columns[0]

    def to_line(self) -> str:
        return "\t".join((f"{self.start}-{self.end}",) + self.columns)


@dataclass(frozen=True)
class EmptyNode:
    """An enhanced-UD empty node ``i.k``; stored verbatim, placed after word ``after``."""

    after: int
    line: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    mwt_ranges: tuple[MultiwordToken, ...] = ()
    empty_nodes: tuple[EmptyNode, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def unsupported(self) -> bool:
        """Sentences with empty nodes bypass reduction."""
        return bool(self.empty_nodes)

    @property
    def annotated(self) -> bool:
        return bool(self.tokens) and all(t.head is not None for t in self.tokens)

    @property
    def sent_id(self) -> Optional[str]:
        for c in self.comments:
            if c.startswith("# sent_id"):
                return c.split("=", 1)[-1].strip()
        return None

    def tags(self, field_name: str = "upos") -> list[str]:
        return [t.tag(field_name) for t in self.tokens]

    def heads(self) -> list[Optional[int]]:
        return [t.head for t in self.tokens]

    def with_tokens(self, tokens: Iterable[Token], **changes) -> "Sentence":
        return replace(self, tokens=tuple(tokens), **changes)

    def lines(self) -> Iterator[str]:
        yield from self.comments
        mwt_at = {m.start: m for m in self.mwt_ranges}
        empty_after: dict[int, list[str]] = {}
        for node in self.empty_nodes:
            empty_after.setdefault(node.after, []).append(node.line)
        yield from empty_after.get(0, ())
        for tok in self.tokens:
            if tok.id in mwt_at:
                yield mwt_at[tok.id].to_line()
            yield tok.to_line()
            yield from empty_after.get(tok.id, ())


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[Sentence, ...] = ()

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, i: int) -> Sentence:
        return self.sentences[i]

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)


def tree_problem(heads: list[Optional[int]]) -> Optional[str]:
    """Describe why 1-based ``heads`` is not a single-rooted tree, or None."""
    n = len(heads)
    roots = [i + 1 for i, h in enumerate(heads) if h == 0]
    if len(roots) != 1:
        return f"{len(roots)} roots"
    for i, h in enumerate(heads, 1):
        if h is None or h < 0 or h > n:
            return f"word {i} has head {h} out of range"
        if h == i:
            return f"word {i} is its own head"
    state = [0] * (n + 1)  # 0 unseen, 1 on path, 2 reaches root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if state[node] == 1:
            return f"cycle through word {node}"
        for p in path:
            state[p] = 2
    return None


def is_tree(heads: list[Optional[int]]) -> bool:
    return tree_problem(heads) is None


def _parse_token(cols: list[str], lineno: int) -> Token:
    try:
        tid = int(cols[0])
    except ValueError:
        raise ConlluError(f"bad word id {cols[0]!r}", lineno or None) from None
    if cols[6] == EMPTY:
        head = None
    else:
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"bad head {cols[6]!r}", lineno) from None
        if head < 0:
            raise ConlluError(f"negative head {head}", lineno)
    return Token(tid, *cols[1:6], head, *cols[7:10])  # type: ignore[arg-type]


def parse_line(line: str) -> Union[Token, MultiwordToken]:
    """Parse a single word or range line outside of any sentence context."""
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 columns, found {len(cols)}")
    if "-" in cols[0]:
        lo, _, hi = cols[0].partition("-")
        return MultiwordToken(int(lo), int(hi), tuple(cols[1:]))
    return _parse_token(cols, 0)


def _build_sentence(comments, tokens, mwts, empties, first_line, validate) -> Sentence:
    for expected, tok in enumerate(tokens, 1):
        if tok.id != expected:
            raise ConlluError(
                f"word ids not consecutive (expected {expected}, got {tok.id})", first_line
            )
    sent = Sentence(tuple(tokens), tuple(comments), tuple(mwts), tuple(empties))
    if validate and sent.annotated and not sent.unsupported:
        problem = tree_problem(sent.heads())
        if problem:
            name = sent.sent_id or f"starting at line {first_line}"
            raise TreeValidationError(f"sentence {name}: {problem}")
    return sent


def iter_sentences(lines: Iterable[str], validate: bool = True) -> Iterator[Sentence]:
    comments: list[str] = []
    tokens: list[Token] = []
    mwts: list[MultiwordToken] = []
    empties: list[EmptyNode] = []
    first_line = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if comments or tokens or mwts or empties:
                yield _build_sentence(comments, tokens, mwts, empties, first_line, validate)
                comments, tokens, mwts, empties = [], [], [], []
            continue
        if not (comments or tokens or mwts or empties):
            first_line = lineno
        if line.startswith("#"):
            if tokens or mwts or empties:
                raise ConlluError("comment inside token block", lineno)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 columns, found {len(cols)}", lineno)
        ident = cols[0]
        if "-" in ident:
            lo, _, hi = ident.partition("-")
            try:
                mwts.append(MultiwordToken(int(lo), int(hi), tuple(cols[1:])))
            except ValueError:
                raise ConlluError(f"bad range id {ident!r}", lineno) from None
        elif "." in ident:
            after = ident.split(".", 1)[0]
            empties.append(EmptyNode(int(after), line))
        else:
            tokens.append(_parse_token(cols, lineno))
    if comments or tokens or mwts or empties:
        yield _build_sentence(comments, tokens, mwts, empties, first_line, validate)


Source = Union[str, Path, IO[bytes], IO[str]]


def _text_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            yield from f
        return
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    yield from io.StringIO(data)


def read_conllu(source: Source, validate: bool = True) -> Treebank:
    """Read a CoNLL-U file, path or stream.

    With ``validate`` set, fully annotated sentences must be single-rooted
    trees; partially annotated (e.g. tagged-only) input is never checked.
    """
    return Treebank(tuple(iter_sentences(_text_lines(source), validate=validate)))


def format_conllu(treebank: Treebank) -> str:
    out = []
    for sent in treebank:
        out.extend(sent.lines())
        out.append("")
    return "".join(line + "\n" for line in out)


def write_conllu(treebank: Treebank, sink: Union[str, Path, IO[bytes], IO[str]]) -> None:
    text = format_conllu(treebank)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
        return
    try:
        sink.write(text.encode("utf-8"))  # type: ignore[arg-type]
    except TypeError:
        sink.write(text)  # type: ignore[arg-type]
