"""
模拟核心层

提供确定性的离散事件内核：
- 以 Δ 为单位的时钟
- 部分同步网络与延迟策略
- 事件调度器
- splitmix64 随机数
- 轨迹记录格式
"""

from .clock import SimTime, NEVER, SLOTS_PER_EPOCH, slot_start, epoch_of, first_slot_at_or_after
from .network import (
    NetworkConfig, Envelope, deliver_bound, schedule,
    DelayPolicy, HonestDelay, MaxDelay, PerRecipientDelay, HONEST_DELAY,
)
from .scheduler import Scheduler, Event, Priority
from .rng import SplitMix64, sub_seed, fnv1a64, mix64
from .trace import (
    TraceRecord, SIMULATOR, PAYLOAD_KEYS, format_trace, write_trace, parse_trace, iter_trace, load_trace,
)

__all__ = [
    # Clock
    "SimTime", "NEVER", "SLOTS_PER_EPOCH", "slot_start", "epoch_of", "first_slot_at_or_after",
    # Network
    "NetworkConfig", "Envelope", "deliver_bound", "schedule",
    "DelayPolicy", "HonestDelay", "MaxDelay", "PerRecipientDelay", "HONEST_DELAY",
    # Scheduler
    "Scheduler", "Event", "Priority",
    # RNG
    "SplitMix64", "sub_seed", "fnv1a64", "mix64",
    # Trace
    "TraceRecord", "SIMULATOR", "PAYLOAD_KEYS", "format_trace", "write_trace", "parse_trace",
    "iter_trace", "load_trace",
]
