"""
验证者注册表

管理验证者身份、质押与有效余额。质押以整 ETH 计，投票权重以 gwei 精度的
整数表示，使超级多数判断 3a ≥ 2T 始终是精确整数比较。
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence

from ..errors import ConfigError

GWEI_PER_ETH = 10 ** 9

# 合并时的上限与 Pectra 之后的上限
MAX_EFFECTIVE_BALANCE_MERGE = 32
MAX_EFFECTIVE_BALANCE_PECTRA = 2048


@dataclass(frozen=True)
class Validator:
    """
    验证者
    """
    id: int                 # 编号，稠密分布于 [0, n)
    stake: int              # 质押（ETH）
    honest: bool = True     # 是否诚实

    def __post_init__(self):
        if self.stake <= 0:
            raise ConfigError(f"验证者 {self.id} 的质押必须为正: {self.stake}", field="stakes")


@dataclass(frozen=True)
class EffectiveBalanceRule:
    """
    有效余额规则
    """
    max_effective_balance: int = MAX_EFFECTIVE_BALANCE_MERGE   # 单个验证者的最大投票权重（ETH）

    def __post_init__(self):
        if self.max_effective_balance <= 0:
            raise ConfigError("max_effective_balance 必须为正", field="max_effective_balance")


def effective_balance(stake: int, rule: EffectiveBalanceRule) -> int:
    """
    有效余额：min(stake, 上限)

    Args:
        stake: 质押（ETH，> 0）
        rule: 有效余额规则

    Returns:
        投票权重（ETH）
    """
    return min(stake, rule.max_effective_balance)


class ValidatorRegistry:
    """
    验证者集合（构造后只读）
    """

    def __init__(self, validators: Sequence[Validator], rule: EffectiveBalanceRule = EffectiveBalanceRule()):
        ids = [v.id for v in validators]
        if ids != list(range(len(validators))):
            raise ConfigError(f"验证者编号必须稠密且有序: {ids[:8]}...", field="n")
        self.validators: List[Validator] = list(validators)
        self.rule = rule

    @classmethod
    def from_stakes(cls, stakes: Sequence[int], adversarial: Iterable[int] = (),
                    rule: EffectiveBalanceRule = EffectiveBalanceRule()) -> ValidatorRegistry:
        """
        由质押列表构造

        Args:
            stakes: 按编号排列的质押
            adversarial: 敌手控制的编号
            rule: 有效余额规则
        """
        bad = frozenset(adversarial)
        for v in bad:
            if not 0 <= v < len(stakes):
                raise ConfigError(f"敌手编号 {v} 超出 [0, {len(stakes)})", field="adversary.ids")
        return cls([Validator(i, s, i not in bad) for i, s in enumerate(stakes)], rule)

    def __len__(self) -> int:
        return len(self.validators)

    def __getitem__(self, vid: int) -> Validator:
        return self.validators[vid]

    def __iter__(self):
        return iter(self.validators)

    @property
    def ids(self) -> List[int]:
        return [v.id for v in self.validators]

    @property
    def honest_ids(self) -> List[int]:
        return [v.id for v in self.validators if v.honest]

    @property
    def adversarial_ids(self) -> FrozenSet[int]:
        return frozenset(v.id for v in self.validators if not v.honest)

    def is_honest(self, vid: int) -> bool:
        return self.validators[vid].honest

    def effective(self, vid: int) -> int:
        """有效余额（ETH）"""
        return effective_balance(self.validators[vid].stake, self.rule)

    def effective_weights(self) -> Dict[int, int]:
        """编号 -> 有效余额（ETH）"""
        return {v.id: self.effective(v.id) for v in self.validators}

    def initial_balances(self) -> Dict[int, int]:
        """编号 -> 投票权重（gwei）"""
        return {v.id: self.effective(v.id) * GWEI_PER_ETH for v in self.validators}

    def total_effective(self) -> int:
        return sum(self.effective(v.id) for v in self.validators)
