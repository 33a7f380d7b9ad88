"""
离散事件调度器

事件按 (时刻, 优先级, 发送者, 插入序号) 全序处理，保证同一配置与种子
产生逐字节相同的轨迹。
"""

from __future__ import annotations
import heapq
import itertools
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, List, Optional, Tuple

from ..errors import StalledSimulationError

logger = logging.getLogger(__name__)


class Priority(IntEnum):
    """同一 tick 内的事件优先级（小者先处理）"""
    DELIVERY = 0    # 消息投递
    HOUSEKEEPING = 1  # 模拟器级事务（槽边界、纪元处理）
    ADVERSARY = 2   # 攻击脚本
    PHASE = 3       # 协议阶段处理器


@dataclass(order=True)
class Event:
    """
    调度事件
    """
    time: int
    priority: int
    sender: int
    seq: int
    action: Callable[..., Any] = field(compare=False)
    args: Tuple[Any, ...] = field(compare=False, default=())


class Scheduler:
    """
    单线程事件循环
    """

    def __init__(self, has_pending_work: Optional[Callable[[], bool]] = None):
        """
        Args:
            has_pending_work: 队列耗尽时若仍返回 True，则视为停滞
        """
        self._queue: List[Event] = []
        self._counter = itertools.count()
        self.now = 0
        self.processed = 0
        self._has_pending_work = has_pending_work

    def __len__(self) -> int:
        return len(self._queue)

    def at(self, time: int, priority: int, sender: int,
           action: Callable[..., Any], *args: Any) -> Event:
        """
        在指定时刻排入事件

        Raises:
            ValueError: 时刻早于当前时钟
        """
        if time < self.now:
            raise ValueError(f"不能在过去排期: {time} < {self.now}")
        event = Event(time, int(priority), sender, next(self._counter), action, args)
        heapq.heappush(self._queue, event)
        return event

    def run_until(self, end: int) -> int:
        """
        处理所有早于 end 的事件

        Returns:
            本次处理的事件数

        Raises:
            StalledSimulationError: 队列在 end 之前耗尽但仍有待调度的参与者
        """
        count = 0
        while self._queue and self._queue[0].time < end:
            event = heapq.heappop(self._queue)
            self.now = event.time
            event.action(*event.args)
            count += 1
        self.processed += count
        if not self._queue and self._has_pending_work is not None and self._has_pending_work():
            raise StalledSimulationError(f"事件队列在 tick {self.now} 耗尽，结束时刻为 {end}")
        logger.debug("运行至 tick %d，处理 %d 个事件", end, count)
        return count
