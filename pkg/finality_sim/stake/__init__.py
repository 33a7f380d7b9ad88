"""
质押与参与度层

- 验证者、有效余额
- 睡眠模型参与度时间表
- 委员会划分与提议者选择
"""

from .registry import (
    Validator, EffectiveBalanceRule, ValidatorRegistry, effective_balance,
    GWEI_PER_ETH, MAX_EFFECTIVE_BALANCE_MERGE, MAX_EFFECTIVE_BALANCE_PECTRA,
)
from .participation import Mode, ParticipationSchedule, mode_at, offline_ranges_to_slots
from .selection import committees, select_proposer, Committee

__all__ = [
    # Registry
    "Validator", "EffectiveBalanceRule", "ValidatorRegistry", "effective_balance",
    "GWEI_PER_ETH", "MAX_EFFECTIVE_BALANCE_MERGE", "MAX_EFFECTIVE_BALANCE_PECTRA",
    # Participation
    "Mode", "ParticipationSchedule", "mode_at", "offline_ranges_to_slots",
    # Selection
    "committees", "select_proposer", "Committee",
]
