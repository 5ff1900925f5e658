"""End-to-end experiment: mine, reduce, train, parse, reattach, score, time."""

from __future__ import annotations

import logging
import shlex
import subprocess
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from .conllu import Treebank, write_conllu
from .evaluation import EvalReport, benchmark, score, with_speedup
from .mining import MiningConfig, TemplateStore, mine, save_store
from .parsing.baseline import BaselineModel, parse_baseline, train_baseline
from .parsing.external import BridgeError, ExternalParserSpec, run_external
from .reattach import reattach
from .reduce import reduce_gold, reduce_input, write_records

log = logging.getLogger(__name__)

ParseFn = Callable[[Treebank], tuple[Treebank, float]]
THROUGHPUT_BASES = ("original", "reduced")


class BuiltinParser:
    name = "builtin arc-eager"

    def __init__(self, epochs: int = 10, seed: int = 0, tag_field: str = "upos"):
        self.epochs = epochs
        self.seed = seed
        self.tag_field = tag_field

    def train(self, treebank: Treebank, workdir: Optional[Path] = None) -> ParseFn:
        model = train_baseline(treebank, epochs=self.epochs, seed=self.seed, tag_field=self.tag_field)
        if workdir is not None:
            model.save(workdir / "model.json")
        return lambda tb: parse_baseline(model, tb)


class ExternalParser:
    """External command; optionally retrained per setup with ``train_command``.

    ``train_command`` receives ``{input}`` (training CoNLL-U) and ``{model}``
    (where to write the model); without it every run uses ``spec.model``.
    """

    name = "external"

    def __init__(self, spec: ExternalParserSpec, train_command: Optional[str] = None, name: Optional[str] = None):
        self.spec = spec
        self.train_command = train_command
        if name:
            self.name = name

    def train(self, treebank: Treebank, workdir: Optional[Path] = None) -> ParseFn:
        spec = self.spec
        if self.train_command:
            if workdir is None:
                raise BridgeError("external training needs a working directory")
            train_path = workdir / "train.input.conllu"
            model_path = workdir / "external.model"
            write_conllu(treebank, train_path)
            argv = [p.format(input=train_path, model=model_path) for p in shlex.split(self.train_command)]
            proc = subprocess.run(argv, capture_output=True, text=True, cwd=spec.workdir)
            if proc.returncode != 0:
                raise BridgeError(f"training command exited with status {proc.returncode}", proc.stderr)
            spec = replace(spec, model=str(model_path))
        return lambda tb: run_external(spec, tb)


@dataclass
class ExperimentResult:
    reports: list[EvalReport] = field(default_factory=list)
    stores: dict[str, TemplateStore] = field(default_factory=dict)


def setup_dirname(config: MiningConfig) -> str:
    return config.setup_name.replace(",", "")


def _evaluate(
    parse: ParseFn,
    data: Treebank,
    store: Optional[TemplateStore],
    repetitions: int,
    basis: str,
    workdir: Optional[Path],
    stem: str,
    **fields,
) -> EvalReport:
    if store is None:
        parsed, timing = benchmark(parse, data, repetitions)
        if workdir is not None:
            write_conllu(parsed, workdir / f"{stem}.parsed.conllu")
        return score(parsed, data, timing=timing, **fields)

    t0 = time.perf_counter()
    reduced = reduce_input(data, store)
    overhead = time.perf_counter() - t0
    numerator = data.word_count if basis == "original" else reduced.treebank.word_count
    parsed, timing = benchmark(parse, reduced.treebank, repetitions, token_count=numerator)
    t0 = time.perf_counter()
    restored = reattach(parsed, reduced.records)
    overhead += time.perf_counter() - t0
    if workdir is not None:
        write_conllu(reduced.treebank, workdir / f"{stem}.reduced.conllu")
        write_records(reduced.records, workdir / f"{stem}.records.json", store.tag_field)
        write_conllu(parsed, workdir / f"{stem}.reduced.parsed.conllu")
        write_conllu(restored, workdir / f"{stem}.parsed.conllu")
    return score(
        restored,
        data,
        timing=timing,
        word_reduction_pct=reduced.reduction_pct,
        overhead_seconds=overhead,
        **fields,
    )


def run_experiment(
    train: Treebank,
    datasets: dict[str, Treebank],
    configs: Sequence[MiningConfig],
    parser,
    repetitions: int = 5,
    basis: str = "original",
    out_dir: Optional[Path] = None,
    strict_gold: bool = False,
) -> ExperimentResult:
    """Baseline plus one reduced run per mining config, on every data set.

    Every intermediate artifact is written under ``out_dir`` when given.
    """
    if basis not in THROUGHPUT_BASES:
        raise ValueError(f"throughput basis must be one of {THROUGHPUT_BASES}")
    result = ExperimentResult()

    def workdir(name: str) -> Optional[Path]:
        if out_dir is None:
            return None
        path = Path(out_dir) / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    base_dir = workdir("baseline")
    log.info("training %s on the full training set", parser.name)
    base_parse = parser.train(train, base_dir)
    baselines = {}
    for name, data in datasets.items():
        report = _evaluate(base_parse, data, None, repetitions, basis, base_dir, name, parser=parser.name, data_set=name)
        baselines[name] = report
        result.reports.append(report)

    for config in configs:
        setup = config.setup_name
        wd = workdir(setup_dirname(config))
        store = mine(train, config)
        result.stores[setup] = store
        log.info("%s: %d templates", setup, len(store))
        reduced_train = reduce_gold(train, store, strict=strict_gold)
        if wd is not None:
            save_store(store, wd / "templates.json")
            write_conllu(reduced_train.treebank, wd / "train.reduced.conllu")
            write_records(reduced_train.records, wd / "train.records.json", store.tag_field)
        parse = parser.train(reduced_train.treebank, wd)
        for name, data in datasets.items():
            report = _evaluate(parse, data, store, repetitions, basis, wd, name, setup=setup, parser=parser.name, data_set=name)
            result.reports.append(with_speedup(report, baselines[name]))
    return result
