"""
部分同步网络模型

消息在 max(发送时刻, GST) + Δ 之前必达；之前的任意时刻由延迟策略决定。
消息只会被延迟，从不丢失。
"""

from __future__ import annotations
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Mapping, Tuple

from ..errors import ConfigError, DeliveryBoundError
from .clock import NEVER, Ticks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkConfig:
    """
    网络参数
    """
    delta: int = 1          # Δ（固定为 1 个 tick）
    gst: Ticks = 0          # 全局稳定时间
    gat: Ticks = NEVER      # 全局唤醒时间

    def __post_init__(self):
        if self.delta < 1:
            raise ConfigError(f"delta 必须 ≥ 1: {self.delta}", field="delta")
        if self.gst < 0:
            raise ConfigError(f"gst 必须 ≥ 0: {self.gst}", field="gst")
        if self.gat < 0:
            raise ConfigError(f"gat 必须 ≥ 0: {self.gat}", field="gat")


@dataclass(frozen=True)
class Envelope:
    """
    网络信封
    """
    payload: Any                                            # 消息内容
    sender: int                                             # 发送者
    sent_at: int                                            # 发送 tick
    deliver_at: Mapping[int, int] = field(default_factory=dict)  # 接收者 -> 投递 tick
    undelivered: Tuple[int, ...] = ()                       # GST=∞ 时永不投递的接收者


def deliver_bound(sent_at: int, gst: Ticks, delta: int) -> Ticks:
    """
    最迟投递时刻：Δ + max(sent_at, GST)

    Args:
        sent_at: 发送 tick
        gst: 全局稳定时间（可为 ∞）
        delta: Δ

    Returns:
        投递上界（GST=∞ 时为 ∞）
    """
    return delta + max(sent_at, gst)


class DelayPolicy(ABC):
    """延迟策略基类"""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def delivery_ticks(self, envelope: Envelope, recipients: Iterable[int],
                       network: NetworkConfig) -> Dict[int, Ticks]:
        """
        为每个接收者选择投递时刻

        Returns:
            接收者 -> 投递 tick（∞ 表示永不投递）
        """
        pass


class HonestDelay(DelayPolicy):
    """诚实默认：sent + Δ"""

    @property
    def name(self) -> str:
        return "honest"

    def delivery_ticks(self, envelope, recipients, network):
        return {r: envelope.sent_at + network.delta for r in recipients}


class MaxDelay(DelayPolicy):
    """拖到上界才投递（用于异步窗口）"""

    @property
    def name(self) -> str:
        return "max"

    def delivery_ticks(self, envelope, recipients, network):
        bound = deliver_bound(envelope.sent_at, network.gst, network.delta)
        return {r: bound for r in recipients}


class PerRecipientDelay(DelayPolicy):
    """按接收者给出的显式延迟（相对发送时刻）"""

    def __init__(self, delays: Mapping[int, int], default: int = 1):
        self.delays = dict(delays)
        self.default = default

    @property
    def name(self) -> str:
        return "per-recipient"

    def delivery_ticks(self, envelope, recipients, network):
        return {r: envelope.sent_at + self.delays.get(r, self.default) for r in recipients}


HONEST_DELAY = HonestDelay()


def schedule(env: Envelope, policy: DelayPolicy, network: NetworkConfig,
             recipients: Iterable[int]) -> Envelope:
    """
    按策略计算投递时刻并校验上界

    Args:
        env: 尚未排期的信封
        policy: 延迟策略
        network: 网络参数
        recipients: 接收者集合

    Returns:
        填好 deliver_at 的新信封

    Raises:
        DeliveryBoundError: 策略给出的时刻超过上界或不晚于发送时刻
    """
    recipients = sorted(recipients)
    bound = deliver_bound(env.sent_at, network.gst, network.delta)
    chosen = policy.delivery_ticks(env, recipients, network)
    deliver_at: Dict[int, int] = {}
    never = []
    for r in recipients:
        at = chosen[r]
        if at > bound:
            raise DeliveryBoundError(
                f"策略 {policy.name} 对接收者 {r} 给出 {at}，超过上界 {bound} (发送于 {env.sent_at})"
            )
        if at <= env.sent_at:
            raise DeliveryBoundError(f"投递时刻 {at} 不晚于发送时刻 {env.sent_at}")
        if at == NEVER:
            never.append(r)
        else:
            deliver_at[r] = int(at)
    if never:
        logger.debug("发送者 %d 的消息对 %d 个接收者永不投递", env.sender, len(never))
    return replace(env, deliver_at=deliver_at, undelivered=tuple(never))
