"""
模拟时钟

时间以 Δ 为单位计数（tick）。每个槽包含 phases_per_slot 个阶段，
第 t 个槽从 tick = phases_per_slot × t 开始。
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Union

# 永不到来的时刻（GST/GAT = ∞）
NEVER = math.inf

Ticks = Union[int, float]

SLOTS_PER_EPOCH = 32


@dataclass(frozen=True, order=True)
class SimTime:
    """
    模拟时刻
    """
    ticks: int              # 自创世以来的 Δ 数
    phases_per_slot: int    # 每槽阶段数（3 或 4）

    def __post_init__(self):
        if self.ticks < 0:
            raise ValueError(f"ticks 不能为负: {self.ticks}")
        if self.phases_per_slot not in (3, 4):
            raise ValueError(f"phases_per_slot 必须为 3 或 4: {self.phases_per_slot}")

    @property
    def slot(self) -> int:
        return self.ticks // self.phases_per_slot

    @property
    def phase_offset(self) -> int:
        return self.ticks % self.phases_per_slot

    @classmethod
    def at(cls, slot: int, phase: int, phases_per_slot: int) -> SimTime:
        return cls(phases_per_slot * slot + phase, phases_per_slot)

    def __str__(self) -> str:
        return f"t={self.ticks} (slot {self.slot}, phase {self.phase_offset})"


def slot_start(slot: int, phases_per_slot: int) -> int:
    """槽起始 tick"""
    return slot * phases_per_slot


def epoch_of(slot: int, slots_per_epoch: int = SLOTS_PER_EPOCH) -> int:
    return slot // slots_per_epoch


def first_slot_at_or_after(ticks: Ticks, phases_per_slot: int) -> Ticks:
    """时刻 ticks 之后（含）开始的第一个槽"""
    if ticks == NEVER:
        return NEVER
    return -(-int(ticks) // phases_per_slot)
