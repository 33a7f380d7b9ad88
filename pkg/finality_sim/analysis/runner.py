"""
场景运行
"""

from __future__ import annotations
import hashlib
import logging
from dataclasses import dataclass
from typing import List, Optional, TextIO

from ..adversary.strategies import AttackOutcome
from ..ffg.audit import AuditReport
from ..protocols.simulation import Simulation
from ..sim.trace import TraceRecord, format_trace, write_trace
from .config import ScenarioConfig
from .report import SummaryReport, report_from_trace

logger = logging.getLogger(__name__)


def trace_digest(trace: List[TraceRecord]) -> str:
    """轨迹文本的 SHA-256"""
    return hashlib.sha256(format_trace(trace).encode("utf-8")).hexdigest()


@dataclass
class RunResult:
    """
    一次场景运行的结果
    """
    config: ScenarioConfig
    trace: List[TraceRecord]
    report: SummaryReport
    outcome: Optional[AttackOutcome]        # 没有攻击时为 None
    audit: AuditReport

    @property
    def digest(self) -> str:
        return trace_digest(self.trace)

    def format_result(self) -> str:
        cfg = self.config
        lines = [
            "=" * 60,
            f"场景: {cfg.protocol} n={cfg.n} η={cfg.eta} 槽 1..{cfg.slots} 种子 {cfg.seed}",
            f"轨迹: {len(self.trace)} 条记录，摘要 {self.digest[:16]}",
            "=" * 60,
            self.report.format_result(),
        ]
        if self.outcome is not None:
            lines.append(self.outcome.format_result())
        if self.audit.safety_violated:
            lines.append(self.audit.format_result())
        return "\n".join(lines)


def build_simulation(config: ScenarioConfig) -> Simulation:
    """
    由配置构造模拟

    Raises:
        ConfigError: 配置非法
        ScriptError: 攻击脚本前置条件不满足
    """
    config.validate()
    return Simulation(
        config.engine_params(), config.registry(),
        participation=config.participation(), network=config.network(),
        seed=config.seed, slots=config.slots, adversary=config.strategy(),
    )


def run_scenario(config: ScenarioConfig, seed: Optional[int] = None,
                 out: Optional[TextIO] = None, window: int = 4) -> RunResult:
    """
    运行场景并计算摘要

    Args:
        config: 场景配置
        seed: 覆盖配置中的种子
        out: 写入轨迹的文本流
        window: 增长区间窗口长度 ℓ

    Returns:
        RunResult

    Raises:
        ConfigError: 配置非法（指出字段）
        ScriptError: 攻击脚本前置条件不满足
    """
    if seed is not None:
        config = config.with_seed(seed)
    sim = build_simulation(config)
    logger.info("运行 %s: n=%d, %d 个槽, 种子 %d", config.protocol, config.n, config.slots, config.seed)
    trace = sim.run()
    if out is not None:
        write_trace(trace, out)
    report = report_from_trace(trace, window)
    outcome = getattr(sim.adversary, "outcome", None)
    return RunResult(config, trace, report, outcome, sim.audit())
