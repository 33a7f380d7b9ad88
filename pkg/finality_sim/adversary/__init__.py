"""
敌手层

以 (槽, 阶段) 为键的脚本化攻击：事前重组、k 重组、扣留、平衡分裂、
模棱两可与延迟控制。
"""

from .strategies import (
    PROPOSE_PHASE, VOTE_PHASE, AttackOutcome, AttackStrategy, BalancingAttack, Equivocation,
    balancing_split,
)
from .reorg import ExAnteTwoReorg, Withhold, KReorg, DelayControl
from .registry import STRATEGY_REGISTRY, make_strategy, list_strategies

__all__ = [
    # Base
    "PROPOSE_PHASE", "VOTE_PHASE", "AttackOutcome", "AttackStrategy", "balancing_split",
    # Strategies
    "BalancingAttack", "Equivocation", "ExAnteTwoReorg", "Withhold", "KReorg", "DelayControl",
    # Registry
    "STRATEGY_REGISTRY", "make_strategy", "list_strategies",
]
