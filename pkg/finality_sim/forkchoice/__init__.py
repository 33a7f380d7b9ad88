"""
分叉选择层

- 子树权重
- GHOST 族规则与注册表
- 暴力预言机与小树枚举
"""

from .weights import WeightMap, subtree_weights, weight
from .rules import (
    ghost, lmd_ghost, hlmd_ghost, rlmd_ghost, hfc, longest_chain, block_depths,
    ForkChoiceInput, ForkChoiceRule, FORK_CHOICE_RULES, get_rule, list_rules,
)
from .oracle import (
    oracle_weights, oracle_head, view_from_parents, enumerate_trees,
    enumerate_vote_assignments, random_instance,
)

__all__ = [
    # Weights
    "WeightMap", "subtree_weights", "weight",
    # Rules
    "ghost", "lmd_ghost", "hlmd_ghost", "rlmd_ghost", "hfc", "longest_chain", "block_depths",
    "ForkChoiceInput", "ForkChoiceRule", "FORK_CHOICE_RULES", "get_rule", "list_rules",
    # Oracle
    "oracle_weights", "oracle_head", "view_from_parents", "enumerate_trees",
    "enumerate_vote_assignments", "random_instance",
]
