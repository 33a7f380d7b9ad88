"""
finality_sim - 以太坊风格共识协议的确定性离散事件模拟器

覆盖内容：
- pBFT 参考实现（经典最终确定基线）
- Gasper-lite、Goldfish、RLMD-GHOST(η)、SSF、3SF 协议引擎
- 敌手脚本（事前重组、k 重组、平衡、模棱两可、延迟控制）
- 只读轨迹的分析（增长区间、安全性、重组深度、最终确定延迟）
"""

__version__ = "0.1.0"

from .errors import SimulationError, ConfigError, ScriptError, TraceFormatError
from .analysis.config import ScenarioConfig, parse_config, load_config
from .analysis.runner import RunResult, run_scenario

__all__ = [
    "SimulationError", "ConfigError", "ScriptError", "TraceFormatError",
    "ScenarioConfig", "parse_config", "load_config",
    "RunResult", "run_scenario",
]
