from gridminer.mining.sequences import (
    Pattern,
    SupportTable,
    gsp_step,
    hoeffding_epsilon,
    is_subsequence,
    local_support,
    mine_frequent,
    mine_frequent_prob,
)
from gridminer.mining.tree import Leaf, Split, best_split, build_tree, gini, render

__all__ = [
    "Leaf",
    "Pattern",
    "Split",
    "SupportTable",
    "best_split",
    "build_tree",
    "gini",
    "gsp_step",
    "hoeffding_epsilon",
    "is_subsequence",
    "local_support",
    "mine_frequent",
    "mine_frequent_prob",
    "render",
]
