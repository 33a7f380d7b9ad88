"""
攻击策略注册表
"""

from __future__ import annotations
from typing import Dict, Iterable, List, Type

from ..protocols.base import AdversaryHooks
from .reorg import DelayControl, ExAnteTwoReorg, KReorg, Withhold
from .strategies import AttackStrategy, BalancingAttack, Equivocation

STRATEGY_REGISTRY: Dict[str, Type[AttackStrategy]] = {
    "ex-ante-reorg": ExAnteTwoReorg,
    "k-reorg": KReorg,
    "withhold": Withhold,
    "balancing": BalancingAttack,
    "equivocate": Equivocation,
    "delay-control": DelayControl,
}


def make_strategy(name: str, controlled: Iterable[int] = (), slot: int = 5, k: int = 2,
                  pi: int = 1, scripted: bool = True) -> AdversaryHooks:
    """
    创建攻击策略

    Args:
        name: 策略名（"none" 表示不攻击）
        controlled: 受控验证者
        slot: 攻击槽
        k: 重组深度（ex-ante-reorg 的 k ≠ 2 时使用 k-reorg 的构造）
        pi: 异步窗口槽数
        scripted: 是否固定提议者与委员会

    Returns:
        攻击钩子

    Raises:
        ValueError: 未知的策略名
    """
    if name == "none":
        return AdversaryHooks(controlled)
    if name not in STRATEGY_REGISTRY:
        available = ", ".join(list_strategies())
        raise ValueError(f"未知的攻击策略: {name}。可用策略: {available}")
    strategy_class = STRATEGY_REGISTRY[name]
    if strategy_class is ExAnteTwoReorg and k != 2:
        strategy_class = KReorg
    return strategy_class(controlled, slot=slot, k=k, pi=pi, scripted=scripted)


def list_strategies() -> List[str]:
    return ["none"] + list(STRATEGY_REGISTRY.keys())
