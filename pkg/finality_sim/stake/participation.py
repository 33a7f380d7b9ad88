"""
睡眠模型参与度

每个验证者在每个槽处于 awake / offline / dreamy 之一。离线后在第 t 个槽醒来的
验证者在 t 槽内是 dreamy（只收集消息，不投票），在该槽的合并阶段后恢复 awake。
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Mapping

from ..errors import ConfigError
from ..sim.clock import NEVER, Ticks
from .registry import Validator, ValidatorRegistry


class Mode(Enum):
    """参与模式"""
    AWAKE = "awake"      # 正常参与
    OFFLINE = "offline"  # 不发出任何消息
    DREAMY = "dreamy"    # 刚醒来，等待合并阶段


@dataclass
class ParticipationSchedule:
    """
    参与度时间表
    """
    offline_slots: Mapping[int, FrozenSet[int]] = field(default_factory=dict)  # 验证者 -> 离线槽集合
    always_offline: FrozenSet[int] = frozenset()   # 整个运行期间离线的验证者
    gat_slot: Ticks = NEVER                        # 此槽起所有诚实验证者都在线

    def validate(self, registry: ValidatorRegistry) -> None:
        """
        校验时间表

        Raises:
            ConfigError: 编号越界、敌手被排离线、或 GAT 之后仍有离线安排
        """
        n = len(registry)
        for vid in list(self.offline_slots) + list(self.always_offline):
            if not 0 <= vid < n:
                raise ConfigError(f"离线编号 {vid} 超出 [0, {n})", field="offline")
            if not registry.is_honest(vid):
                raise ConfigError(f"敌手验证者 {vid} 始终在线，不能排为离线", field="offline")
        if self.gat_slot != NEVER:
            if self.always_offline:
                raise ConfigError("设定了 GAT 时不能有永久离线的验证者", field="gat")
            for vid, slots in self.offline_slots.items():
                late = [s for s in slots if s >= self.gat_slot - 1]
                if late:
                    raise ConfigError(f"验证者 {vid} 在 GAT 之后仍未醒来: 槽 {min(late)}", field="offline")

    def is_offline(self, vid: int, slot: int) -> bool:
        if slot < 0:
            return False
        return vid in self.always_offline or slot in self.offline_slots.get(vid, frozenset())


def mode_at(v: Validator, slot: int, sched: ParticipationSchedule) -> Mode:
    """
    验证者在某槽的参与模式

    Args:
        v: 验证者
        slot: 槽号（≥ 0）
        sched: 参与度时间表

    Returns:
        Mode.AWAKE / Mode.OFFLINE / Mode.DREAMY
    """
    if not v.honest:
        return Mode.AWAKE
    if slot >= sched.gat_slot:
        return Mode.AWAKE
    if sched.is_offline(v.id, slot):
        return Mode.OFFLINE
    if sched.is_offline(v.id, slot - 1):
        return Mode.DREAMY
    return Mode.AWAKE


def offline_ranges_to_slots(ranges: Mapping[int, range]) -> Dict[int, FrozenSet[int]]:
    """把 {编号: range} 转成时间表使用的槽集合"""
    return {vid: frozenset(r) for vid, r in ranges.items()}
