"""Attachment scores, throughput timing and comparison tables."""

from __future__ import annotations

import json
import statistics
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .conllu import Treebank


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Timing:
    samples: tuple[float, ...]  # tokens/sec per timed repetition
    seconds: tuple[float, ...]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.samples)

    @property
    def std(self) -> float:
        return statistics.stdev(self.samples) if len(self.samples) > 1 else 0.0

    @property
    def mean_seconds(self) -> float:
        return statistics.fmean(self.seconds)


@dataclass(frozen=True)
class EvalReport:
    total: int
    correct_heads: int
    correct_labeled: int
    setup: str = "baseline"
    parser: Optional[str] = None
    data_set: Optional[str] = None
    word_reduction_pct: Optional[float] = None
    timing: Optional[Timing] = None
    speedup_factor: Optional[float] = None
    overhead_seconds: Optional[float] = None

    @property
    def uas_ratio(self) -> Fraction:
        return Fraction(100 * self.correct_heads, self.total) if self.total else Fraction(0)

    @property
    def las_ratio(self) -> Fraction:
        return Fraction(100 * self.correct_labeled, self.total) if self.total else Fraction(0)

    @property
    def uas(self) -> float:
        return float(self.uas_ratio)

    @property
    def las(self) -> float:
        return float(self.las_ratio)

    @property
    def tokens_per_sec(self) -> Optional[float]:
        return self.timing.mean if self.timing else None

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("timing")
        data["uas"] = round(self.uas, 2)
        data["las"] = round(self.las, 2)
        if self.timing:
            data["tokens_per_sec"] = {
                "mean": self.timing.mean,
                "std": self.timing.std,
                "samples": list(self.timing.samples),
                "parser_seconds": list(self.timing.seconds),
            }
        return data


def score(system: Treebank, gold: Treebank, **fields) -> EvalReport:
    """UAS/LAS over all syntactic words, punctuation included."""
    if len(system) != len(gold):
        raise AlignmentError(f"system has {len(system)} sentences, gold has {len(gold)}")
    total = heads = labeled = 0
    for idx, (s, g) in enumerate(zip(system, gold)):
        name = g.sent_id or f"#{idx}"
        if len(s) != len(g):
            raise AlignmentError(f"sentence {name}: {len(s)} words vs {len(g)} in gold")
        for st, gt in zip(s.tokens, g.tokens):
            if st.form != gt.form:
                raise AlignmentError(f"sentence {name}, word {gt.id}: {st.form!r} vs gold {gt.form!r}")
            total += 1
            if st.head == gt.head:
                heads += 1
                if st.deprel == gt.deprel:
                    labeled += 1
    return EvalReport(total, heads, labeled, **fields)


def benchmark(
    parse: Callable[[Treebank], tuple[Treebank, float]],
    treebank: Treebank,
    repetitions: int = 5,
    token_count: Optional[int] = None,
    warmup: bool = True,
) -> tuple[Treebank, Timing]:
    """Time ``parse`` (which reports its own parser-phase seconds) over several runs.

    ``token_count`` is the throughput numerator; for reduced input pass the
    original word count so the run is credited for every word it analysed.
    """
    if repetitions < 2:
        raise ValueError("benchmark needs at least 2 repetitions")
    tokens = treebank.word_count if token_count is None else token_count
    if warmup:
        parse(treebank)
    seconds = []
    result = treebank
    for _ in range(repetitions):
        result, elapsed = parse(treebank)
        seconds.append(max(elapsed, 1e-9))
    return result, Timing(tuple(tokens / s for s in seconds), tuple(seconds))


def with_speedup(report: EvalReport, baseline: EvalReport) -> EvalReport:
    if not (report.timing and baseline.timing):
        return report
    return replace(report, speedup_factor=report.timing.mean / baseline.timing.mean)


def _fmt_pct(x: Optional[float], digits: int) -> str:
    return "NA" if x is None else f"{x:.{digits}f}"


COLUMNS = ("Setup", "UAS (%)", "LAS (%)", "Word Reduction (%)", "Tokens/Sec", "Speed-up Factor")


def _row(r: EvalReport) -> list[str]:
    tps = "NA" if r.timing is None else f"{r.timing.mean:.0f} ± {r.timing.std:.0f}"
    speed = "NA" if r.speedup_factor is None else f"{r.speedup_factor:.2f}x"
    return [
        r.setup,
        f"{r.uas:.2f}",
        f"{r.las:.2f}",
        _fmt_pct(r.word_reduction_pct, 1),
        tps,
        speed,
    ]


def render_tables(reports: Sequence[EvalReport]) -> str:
    """Plain-text table; within each parser/data-set group rows run from least to most reduction."""
    grouped = any(r.parser or r.data_set for r in reports)
    header = (["Parser", "Data Set"] if grouped else []) + list(COLUMNS)
    groups: dict = {}
    for r in reports:
        groups.setdefault((r.parser, r.data_set), []).append(r)
    rows = [header]
    for (parser, data_set), members in groups.items():
        members = sorted(members, key=lambda r: -1.0 if r.word_reduction_pct is None else r.word_reduction_pct)
        for r in members:
            prefix = [parser or "", data_set or ""] if grouped else []
            rows.append(prefix + _row(r))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def reports_json(reports: Iterable[EvalReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
