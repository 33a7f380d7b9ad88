"""
运行摘要

SummaryReport 只由轨迹计算，保存下来的轨迹可以离线重算出同样的报告。
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..sim.trace import TraceRecord
from .detectors import (
    TraceIndex, check_ledger_prefix, check_security, growth_intervals, reorg_depth,
    time_to_finality,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatencyStats:
    """
    最终确定延迟（槽）的分布
    """
    count: int = 0
    mean: Optional[float] = None
    minimum: Optional[int] = None
    maximum: Optional[int] = None
    p50: Optional[float] = None
    p95: Optional[float] = None

    @classmethod
    def from_values(cls, values: Sequence[int]) -> "LatencyStats":
        if not values:
            return cls()
        arr = np.asarray(sorted(values), dtype=np.int64)
        return cls(
            count=int(arr.size),
            mean=float(arr.mean()),
            minimum=int(arr.min()),
            maximum=int(arr.max()),
            p50=float(np.percentile(arr, 50)),
            p95=float(np.percentile(arr, 95)),
        )

    def label(self) -> str:
        if not self.count:
            return "-"
        return (f"n={self.count} mean={self.mean:.2f} min={self.minimum} max={self.maximum} "
                f"p50={self.p50:.2f} p95={self.p95:.2f}")

    def items(self, prefix: str) -> List[Tuple[str, str]]:
        if not self.count:
            return [(f"{prefix}.count", "0")]
        return [
            (f"{prefix}.count", str(self.count)),
            (f"{prefix}.mean", f"{self.mean:.2f}"),
            (f"{prefix}.min", str(self.minimum)),
            (f"{prefix}.max", str(self.maximum)),
            (f"{prefix}.p50", f"{self.p50:.2f}"),
            (f"{prefix}.p95", f"{self.p95:.2f}"),
        ]


@dataclass(frozen=True)
class AttackSummary:
    strategy: str
    success: bool
    depth: int
    orphaned: str


@dataclass
class SummaryReport:
    """
    运行摘要
    """
    slots: int                                                  # 最后一个槽
    n: int                                                      # 验证者数
    finalized: int                                              # 最终确定的公开区块数
    latency: LatencyStats                                       # 全部诚实验证者
    per_validator: Dict[int, LatencyStats] = field(default_factory=dict)
    max_reorg_depth: int = 0
    safe: bool = True
    witness: str = "-"                                          # 冲突的最终确定区块对
    growth_ok: bool = True
    growth_checked: int = 0
    growth_failures: int = 0
    stalled_windows: int = 0
    slashable: List[int] = field(default_factory=list)
    slashable_fraction: Fraction = Fraction(0)
    ledger_violations: List[str] = field(default_factory=list)
    attacks: List[AttackSummary] = field(default_factory=list)

    @property
    def attack(self) -> Optional[AttackSummary]:
        return self.attacks[-1] if self.attacks else None

    def to_lines(self) -> List[str]:
        """`key=value` 行，键顺序固定"""
        items: List[Tuple[str, str]] = [
            ("slots", str(self.slots)),
            ("n", str(self.n)),
            ("finalized", str(self.finalized)),
        ]
        items += self.latency.items("ttf")
        for v in sorted(self.per_validator):
            items += self.per_validator[v].items(f"ttf.{v}")
        items += [
            ("reorg_depth", str(self.max_reorg_depth)),
            ("safe", _flag(self.safe)),
            ("witness", self.witness),
            ("growth", _flag(self.growth_ok)),
            ("growth.checked", str(self.growth_checked)),
            ("growth.failures", str(self.growth_failures)),
            ("stalled", str(self.stalled_windows)),
            ("slashable", ",".join(map(str, self.slashable)) or "-"),
            ("slashable_fraction", str(self.slashable_fraction)),
            ("ledger_violations", str(len(self.ledger_violations))),
        ]
        for i, a in enumerate(self.attacks):
            items += [
                (f"attack.{i}.strategy", a.strategy),
                (f"attack.{i}.success", _flag(a.success)),
                (f"attack.{i}.depth", str(a.depth)),
                (f"attack.{i}.orphaned", a.orphaned),
            ]
        return [f"{k}={v}" for k, v in items]

    def format_result(self, per_validator: bool = False) -> str:
        lines = [
            "=" * 60,
            "运行摘要",
            "=" * 60,
            f"槽数: {self.slots}    验证者: {self.n}",
            f"最终确定区块: {self.finalized}",
            f"最终确定延迟（槽）: {self.latency.label()}",
        ]
        if per_validator:
            for v in sorted(self.per_validator):
                lines.append(f"  验证者 {v:>3}: {self.per_validator[v].label()}")
        lines += [
            f"最大重组深度: {self.max_reorg_depth}",
            f"安全性: {'✓ 兼容' if self.safe else '✗ 冲突 ' + self.witness}",
            f"增长区间: {'✓' if self.growth_ok else '✗'} "
            f"（检查 {self.growth_checked}，失败 {self.growth_failures}，停滞 {self.stalled_windows}）",
            f"可罚没: {','.join(map(str, self.slashable)) or '-'} ({float(self.slashable_fraction):.2%})",
            f"账本前缀违规: {len(self.ledger_violations)}",
        ]
        for a in self.attacks:
            lines.append(f"攻击 {a.strategy}: {'成功' if a.success else '失败'}，"
                         f"深度 {a.depth}，孤立 {a.orphaned}")
        lines.append("=" * 60)
        return "\n".join(lines)


def _flag(value: bool) -> str:
    return "1" if value else "0"


# ============================================================================
# 便捷函数
# ============================================================================

def report_from_trace(trace: Sequence[TraceRecord], window: int = 4) -> SummaryReport:
    """
    由轨迹计算摘要

    Args:
        trace: 轨迹记录
        window: 增长区间窗口长度 ℓ

    Returns:
        SummaryReport

    Raises:
        TraceFormatError: 轨迹缺少 scenario 记录
    """
    idx = TraceIndex(trace)
    ttf = time_to_finality(idx)
    per_validator = {
        v: LatencyStats.from_values(list(time_to_finality(idx, v).values()))
        for v in idx.honest
    }
    verdict = check_security(idx)
    growth = growth_intervals(idx, window)
    attacks = [
        AttackSummary(r.get("strategy", "?"), r.get("success") == "1",
                      r.get_int("depth", 0), r.get("orphaned", "-"))
        for r in idx.attacks
    ]
    report = SummaryReport(
        slots=idx.last_slot,
        n=idx.n,
        finalized=len(ttf),
        latency=LatencyStats.from_values(list(ttf.values())),
        per_validator=per_validator,
        max_reorg_depth=reorg_depth(idx),
        safe=verdict.safe,
        witness=verdict.format_witness(),
        growth_ok=growth.ok,
        growth_checked=growth.checked,
        growth_failures=len(growth.failures),
        stalled_windows=len(growth.stalled),
        slashable=verdict.slashable,
        slashable_fraction=verdict.slashable_fraction,
        ledger_violations=check_ledger_prefix(idx),
        attacks=attacks,
    )
    logger.debug("摘要: %d 个最终确定区块，重组深度 %d", report.finalized, report.max_reorg_depth)
    return report


def latency_of(trace: Sequence[TraceRecord], digest: int) -> Optional[int]:
    """单个区块的最终确定延迟（未最终确定时为 None）"""
    return time_to_finality(trace).get(digest)

