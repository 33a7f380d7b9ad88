"""
不活跃泄漏

连续 trigger 个纪元未最终确定后，每个纪元开始时把上一纪元未证明的验证者
剩余余额扣去 rate 比例（向下取整，不低于 0），直到在线余额重新超过 2/3。
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeakConfig:
    """
    泄漏参数
    """
    trigger: int = 4                    # 触发所需的未最终确定纪元数
    rate: Fraction = Fraction(1, 10)    # 每纪元扣除的剩余余额比例

    def __post_init__(self):
        if self.trigger < 1:
            raise ConfigError("leak.trigger 必须 ≥ 1", field="leak.trigger")
        if not 0 < self.rate < 1:
            raise ConfigError("leak.rate 必须在 (0, 1) 内", field="leak.rate")


def inactivity_leak(balances: Mapping[int, int], inactive: Iterable[int],
                    epochs_without_finality: int,
                    config: LeakConfig = LeakConfig()) -> Dict[int, int]:
    """
    执行一个纪元的泄漏

    Args:
        balances: 验证者 -> 余额（gwei）
        inactive: 上一纪元未证明的验证者
        epochs_without_finality: 连续未最终确定的纪元数
        config: 泄漏参数

    Returns:
        新的余额表
    """
    result = dict(balances)
    if epochs_without_finality < config.trigger:
        return result
    num, den = config.rate.numerator, config.rate.denominator
    drained = 0
    for vid in sorted(set(inactive)):
        b = result.get(vid, 0)
        cut = b * num // den
        result[vid] = max(0, b - cut)
        drained += cut
    logger.debug("泄漏: %d 个纪元未最终确定，扣除 %d gwei", epochs_without_finality, drained)
    return result


@dataclass
class RecoveryPrediction:
    """
    闭式恢复预测
    """
    drains_needed: int          # 恢复超级多数所需的泄漏次数 k*
    first_finalizing_epoch: int # 预测的首个最终确定处理纪元

    def __str__(self) -> str:
        return f"k*={self.drains_needed}, 首次最终确定于纪元 {self.first_finalizing_epoch}"


def recovery_curve(online_fraction: float, rate: float, epochs: int) -> np.ndarray:
    """k 次泄漏后剩余总余额（占初始总余额的比例）"""
    k = np.arange(epochs)
    return online_fraction + (1.0 - online_fraction) * (1.0 - rate) ** k


def predict_recovery(online_fraction: float, rate: float = 0.1, trigger: int = 4,
                     horizon: int = 1000) -> Optional[RecoveryPrediction]:
    """
    第一个满足 online > 2/3·(online + (1-online)(1-r)^k) 的 k

    Args:
        online_fraction: 在线余额比例
        rate: 泄漏比例
        trigger: 触发纪元数
        horizon: 搜索上限

    Returns:
        RecoveryPrediction；online 为 0 时返回 None
    """
    if online_fraction <= 0:
        return None
    remaining = recovery_curve(online_fraction, rate, horizon)
    ok = online_fraction > (2.0 / 3.0) * remaining
    if not ok.any():
        return None
    k_star = int(np.argmax(ok))
    return RecoveryPrediction(drains_needed=k_star, first_finalizing_epoch=trigger + k_star)
