"""Reuse of frequent dependency-tree fragments to shrink parser input."""

from .conllu import Sentence, Token, Treebank, read_conllu, write_conllu
from .evaluation import EvalReport, render_tables, score
from .mining import MiningConfig, Template, TemplateStore, count_patterns, load_store, mine, mine_iterative, save_store
from .patterns import Eligibility, HeadPattern, LabelPattern, classify, enumerate_patterns, extract_pattern
from .reattach import reattach
from .reduce import ReducedTreebank, ReductionRecord, find_matches, reduce_gold, reduce_input

__version__ = "0.1.0"

__all__ = [
    "Eligibility",
    "EvalReport",
    "HeadPattern",
    "LabelPattern",
    "MiningConfig",
    "ReducedTreebank",
    "ReductionRecord",
    "Sentence",
    "Template",
    "TemplateStore",
    "Token",
    "Treebank",
    "classify",
    "count_patterns",
    "enumerate_patterns",
    "extract_pattern",
    "find_matches",
    "load_store",
    "mine",
    "mine_iterative",
    "read_conllu",
    "reattach",
    "reduce_gold",
    "reduce_input",
    "render_tables",
    "save_store",
    "score",
    "write_conllu",
]
