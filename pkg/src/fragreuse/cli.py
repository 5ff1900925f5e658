"""Command-line interface.

Every sub-command reads and writes plain files so the pipeline can be run
step by step. Options may also come from a JSON config file (``--config``
or the ``FRAGREUSE_CONFIG`` environment variable); flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .conllu import ConlluError, TreeValidationError, read_conllu, write_conllu
from .evaluation import AlignmentError, EvalReport, benchmark, render_tables, reports_json, score, with_speedup
from .mining import MiningConfig, StoreError, load_store, mine, save_store, template_table
from .parsing.baseline import BaselineModel, TrainingError, parse_baseline, train_baseline
from .parsing.external import BridgeError, ExternalParserSpec, run_external
from .patterns import enumerate_patterns
from .pipeline import BuiltinParser, ExternalParser, run_experiment
from .reattach import ReattachError, reattach
from .reduce import ReductionError, read_records, reduce_gold, reduce_input, write_records
from .synthetic import toy_treebank

log = logging.getLogger("fragreuse")

CONFIG_ENV = "FRAGREUSE_CONFIG"
EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

PIPELINE_ERRORS = (
    ConlluError,
    TreeValidationError,
    StoreError,
    ReductionError,
    ReattachError,
    BridgeError,
    AlignmentError,
    TrainingError,
    OSError,
    ValueError,
)


def _mining_args(p: argparse.ArgumentParser, multiple_setups: bool = False) -> None:
    g = p.add_argument_group("template mining")
    g.add_argument("--bigrams", action="store_true", default=None, help="use bigram templates")
    g.add_argument("--trigrams", action="store_true", default=None, help="use trigram templates")
    g.add_argument("--head-threshold", type=float, default=83.0)
    g.add_argument("--label-threshold", type=float, default=83.0)
    if multiple_setups:
        g.add_argument("--setup", action="append", default=None, metavar="SIZES:H-L",
                       help="setup shorthand such as 2,3:83-83 (repeatable; overrides the options above)")
    else:
        g.add_argument("--setup", default=None, metavar="SIZES:H-L",
                       help="setup shorthand such as 2,3:83-83 (overrides sizes and thresholds)")
    g.add_argument("--min-count", type=int, default=1)
    g.add_argument("--tag-field", choices=("upos", "xpos"), default="upos")
    g.add_argument("--mode", choices=("bag", "iterative"), default="bag")
    g.add_argument("--priority", choices=("confidence", "noun-proximity"), default="confidence")
    g.add_argument("--max-iterations", type=int, default=200)
    g.add_argument("--batch-size", type=int, default=1)


def _parser_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("parser")
    g.add_argument("--external-command", default=None,
                   help="external parser command with {input}, {output} and {model} placeholders")
    g.add_argument("--external-model", default=None, help="model path substituted for {model}")
    g.add_argument("--external-train-command", default=None,
                   help="command with {input} and {model} that trains the external parser")
    g.add_argument("--timeout", type=float, default=None, help="external parser timeout in seconds")
    g.add_argument("--epochs", type=int, default=10, help="built-in parser training epochs")
    g.add_argument("--seed", type=int, default=0)


def _mining_config(args, setup: Optional[str] = None) -> MiningConfig:
    extra = dict(
        min_count=args.min_count,
        tag_field=args.tag_field,
        mode=args.mode,
        priority=args.priority,
        max_iterations=args.max_iterations,
        batch_size=args.batch_size,
    )
    if setup:
        return MiningConfig.from_setup(setup, **extra)
    bigrams, trigrams = args.bigrams, args.trigrams
    if not bigrams and not trigrams:
        bigrams = trigrams = True
    return MiningConfig(
        head_threshold=args.head_threshold,
        label_threshold=args.label_threshold,
        use_bigrams=bool(bigrams),
        use_trigrams=bool(trigrams),
        **extra,
    )


def _external_spec(args) -> ExternalParserSpec:
    return ExternalParserSpec(args.external_command, model=args.external_model, timeout=args.timeout)


def cmd_mine(args) -> int:
    train = read_conllu(args.train)
    config = _mining_config(args, args.setup)
    store = mine(train, config, source=str(args.train))
    save_store(store, args.out)
    print(f"{config.setup_name}: {len(store)} templates, "
          f"{store.full_confidence_count()} with 100% head and label confidence -> {args.out}")
    if args.show_templates:
        print(template_table(store.templates))
    return EXIT_OK


def cmd_reduce(args) -> int:
    store = load_store(args.store)
    data = read_conllu(args.input)
    if args.gold:
        reduced = reduce_gold(data, store, strict=args.strict_gold)
    else:
        reduced = reduce_input(data, store)
    write_conllu(reduced.treebank, args.out)
    sidecar = args.sidecar or _default_sidecar(args.out)
    write_records(reduced.records, sidecar, store.tag_field)
    print(f"removed {reduced.removed_words} of {reduced.original_words} words "
          f"({reduced.reduction_pct:.1f}%) -> {args.out}, {sidecar}")
    return EXIT_OK


def _default_sidecar(out: str) -> str:
    return str(Path(out).with_suffix("")) + ".records.json"


def cmd_train(args) -> int:
    train = read_conllu(args.train)
    model = train_baseline(train, epochs=args.epochs, seed=args.seed, tag_field=args.tag_field)
    model.save(args.model)
    print(f"trained arc-eager model ({len(model.feature_index)} features) -> {args.model}")
    return EXIT_OK


def _parse_fn(args):
    if args.external_command:
        spec = _external_spec(args)
        return lambda tb: run_external(spec, tb)
    if not args.model:
        raise ValueError("either --model (built-in parser) or --external-command is required")
    model = BaselineModel.load(args.model)
    return lambda tb: parse_baseline(model, tb)


def cmd_parse(args) -> int:
    data = read_conllu(args.input, validate=False)
    parsed, seconds = _parse_fn(args)(data)
    write_conllu(parsed, args.out)
    print(f"parsed {data.word_count} words in {seconds:.3f}s -> {args.out}")
    return EXIT_OK


def cmd_reattach(args) -> int:
    parsed = read_conllu(args.input, validate=False)
    records = read_records(args.sidecar)
    restored = reattach(parsed, records)
    write_conllu(restored, args.out)
    print(f"restored {restored.word_count} words -> {args.out}")
    return EXIT_OK


def _emit_reports(reports: Sequence[EvalReport], json_path: Optional[str], table_path: Optional[str] = None) -> None:
    table = render_tables(reports)
    print(table)
    if table_path:
        Path(table_path).write_text(table + "\n", encoding="utf-8")
    if json_path:
        Path(json_path).write_text(reports_json(reports) + "\n", encoding="utf-8")


def cmd_eval(args) -> int:
    system = read_conllu(args.system, validate=False)
    gold = read_conllu(args.gold)
    report = score(system, gold, setup=args.setup_name or "system", word_reduction_pct=args.reduction)
    _emit_reports([report], args.json)
    return EXIT_OK


def cmd_bench(args) -> int:
    """Time a baseline parse of the full input against parses of reduced inputs."""
    gold = read_conllu(args.gold)
    parse = _parse_fn(args)
    base_parsed, base_timing = benchmark(parse, gold, args.repetitions)
    base = score(base_parsed, gold, timing=base_timing)
    reports = [base]
    reduced_parse = parse
    if args.reduced_model and not args.external_command:
        reduced_model = BaselineModel.load(args.reduced_model)
        reduced_parse = lambda tb: parse_baseline(reduced_model, tb)  # noqa: E731
    for store_path in args.store or ():
        store = load_store(store_path)
        reduced = reduce_input(gold, store)
        numerator = gold.word_count if args.throughput_basis == "original" else reduced.treebank.word_count
        parsed, timing = benchmark(reduced_parse, reduced.treebank, args.repetitions, token_count=numerator)
        restored = reattach(parsed, reduced.records)
        report = score(restored, gold, setup=store.config.setup_name, timing=timing,
                       word_reduction_pct=reduced.reduction_pct)
        reports.append(with_speedup(report, base))
    _emit_reports(reports, args.json)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    train = read_conllu(args.train)
    datasets = {"dev": read_conllu(args.dev)}
    if args.test:
        datasets["test"] = read_conllu(args.test)
    setups = args.setup or [None]
    configs = [_mining_config(args, s) for s in setups]
    if args.external_command:
        parser = ExternalParser(_external_spec(args), args.external_train_command)
    else:
        parser = BuiltinParser(epochs=args.epochs, seed=args.seed, tag_field=configs[0].tag_field)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(
        train, datasets, configs, parser,
        repetitions=args.repetitions, basis=args.throughput_basis, out_dir=out, strict_gold=args.strict_gold,
    )
    _emit_reports(result.reports, str(out / "report.json"), str(out / "report.txt"))
    return EXIT_OK


def cmd_patterns(args) -> int:
    classes = enumerate_patterns(args.n)
    total = sum(len(v) for v in classes.values())
    print(f"{total} head patterns for n={args.n}")
    for name, members in classes.items():
        print(f"{name} ({len(members)}): " + ", ".join(f'"{p}"' for p in members))
    return EXIT_OK


def cmd_synth(args) -> int:
    write_conllu(toy_treebank(args.sentences, seed=args.seed, prefix=args.prefix), args.out)
    print(f"wrote {args.sentences} toy sentences -> {args.out}")
    return EXIT_OK


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="fragreuse", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=os.environ.get(CONFIG_ENV), help=f"JSON config file (env {CONFIG_ENV})")
    common.add_argument("--show-config", action="store_true", help="print the effective options and exit")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["mine"] = sub.add_parser("mine", parents=[common], help="mine templates from a gold treebank")
    p.add_argument("--train", required=True)
    p.add_argument("--out", default="templates.json")
    p.add_argument("--show-templates", action="store_true")
    _mining_args(p)
    p.set_defaults(func=cmd_mine)

    p = subs["reduce"] = sub.add_parser("reduce", parents=[common], help="collapse matched n-grams")
    p.add_argument("--store", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar", default=None, help="reduction record file (default: <out>.records.json)")
    p.add_argument("--gold", action="store_true", help="reduce a gold training set, keeping trees well-formed")
    p.add_argument("--strict-gold", action="store_true",
                   help="with --gold, skip matches whose gold structure disagrees with the template")
    p.set_defaults(func=cmd_reduce)

    p = subs["train"] = sub.add_parser("train", parents=[common], help="train the built-in parser")
    p.add_argument("--train", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tag-field", choices=("upos", "xpos"), default="upos")
    p.set_defaults(func=cmd_train)

    p = subs["parse"] = sub.add_parser("parse", parents=[common], help="parse a CoNLL-U file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None, help="built-in parser model")
    _parser_args(p)
    p.set_defaults(func=cmd_parse)

    p = subs["reattach"] = sub.add_parser("reattach", parents=[common], help="restore removed fragments")
    p.add_argument("--in", dest="input", required=True, help="parse of the reduced input")
    p.add_argument("--sidecar", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reattach)

    p = subs["eval"] = sub.add_parser("eval", parents=[common], help="UAS/LAS against gold")
    p.add_argument("--system", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--setup-name", default=None)
    p.add_argument("--reduction", type=float, default=None, help="word reduction to show in the table")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_eval)

    p = subs["bench"] = sub.add_parser("bench", parents=[common], help="time full vs reduced parsing")
    p.add_argument("--gold", required=True)
    p.add_argument("--model", default=None, help="built-in model for the full input")
    p.add_argument("--reduced-model", default=None, help="built-in model for reduced input")
    p.add_argument("--store", action="append", default=None)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--throughput-basis", choices=("original", "reduced"), default="original")
    p.add_argument("--json", default=None)
    _parser_args(p)
    p.set_defaults(func=cmd_bench)

    p = subs["pipeline"] = sub.add_parser("pipeline", parents=[common], help="run the whole experiment")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--out-dir", default="fragreuse-run")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--throughput-basis", choices=("original", "reduced"), default="original")
    p.add_argument("--strict-gold", action="store_true")
    _mining_args(p, multiple_setups=True)
    _parser_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = subs["patterns"] = sub.add_parser("patterns", parents=[common], help="list the head-pattern space")
    p.add_argument("-n", type=int, choices=(2, 3), default=3)
    p.set_defaults(func=cmd_patterns)

    p = subs["synth"] = sub.add_parser("synth", parents=[common], help="write a toy treebank")
    p.add_argument("--out", required=True)
    p.add_argument("--sentences", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="toy")
    p.set_defaults(func=cmd_synth)
    return parser, subs


def _apply_config_file(argv: Sequence[str], parser, subs) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=os.environ.get(CONFIG_ENV))
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    data = json.loads(Path(known.config).read_text(encoding="utf-8"))
    command = next((a for a in rest if a in subs), None)
    if command is None:
        return
    values = {k: v for k, v in data.items() if not isinstance(v, dict)}
    values.update(data.get(command, {}))
    sub = subs[command]
    dests = {a.dest for a in sub._actions}
    values = {k.replace("-", "_"): v for k, v in values.items()}
    sub.set_defaults(**{k: v for k, v in values.items() if k in dests})
    for action in sub._actions:
        if action.required and action.dest in values:
            action.required = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config_file(argv, parser, subs)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"fragreuse: cannot read config file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.show_config:
        shown = {k: v for k, v in vars(args).items() if k not in ("func", "show_config")}
        print(json.dumps(shown, indent=2, sort_keys=True, default=str))
        return EXIT_OK
    try:
        return args.func(args)
    except PIPELINE_ERRORS as exc:
        module = type(exc).__module__.rsplit(".", 1)[-1]
        if module == "builtins":
            module = args.command
        print(f"fragreuse {args.command} [{module}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
