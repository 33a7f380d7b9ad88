"""
配置、运行与轨迹分析

- config：`key = value` 场景配置
- detectors：增长区间、安全性、重组深度、最终确定延迟、轨迹比对
- report：只由轨迹计算的运行摘要
- runner / suite：单次场景与内置攻击套件
"""

from .config import ScenarioConfig, LineLexer, parse_config, load_config, parse_range
from .detectors import (
    TraceIndex, Confirmation, GrowthReport, SecurityVerdict, ReorgEvent, TraceDiff,
    growth_intervals, check_security, check_ledger_prefix, reorg_events, reorg_depth,
    canonical_chain, orphaned_blocks, time_to_finality, compare_traces,
)
from .report import LatencyStats, AttackSummary, SummaryReport, report_from_trace, latency_of
from .runner import RunResult, build_simulation, run_scenario, trace_digest
from .suite import SuiteCase, CaseResult, SuiteReport, builtin_cases, run_suite

__all__ = [
    # Config
    "ScenarioConfig", "LineLexer", "parse_config", "load_config", "parse_range",
    # Detectors
    "TraceIndex", "Confirmation", "GrowthReport", "SecurityVerdict", "ReorgEvent", "TraceDiff",
    "growth_intervals", "check_security", "check_ledger_prefix", "reorg_events", "reorg_depth",
    "canonical_chain", "orphaned_blocks", "time_to_finality", "compare_traces",
    # Report
    "LatencyStats", "AttackSummary", "SummaryReport", "report_from_trace", "latency_of",
    # Running
    "RunResult", "build_simulation", "run_scenario", "trace_digest",
    "SuiteCase", "CaseResult", "SuiteReport", "builtin_cases", "run_suite",
]
