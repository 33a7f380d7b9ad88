"""
异常层次

模拟器所有可预期的失败都派生自 SimulationError，CLI 据此映射退出码。
"""

from __future__ import annotations
from typing import Optional


class SimulationError(Exception):
    """模拟器异常基类"""
    pass


class ConfigError(SimulationError):
    """场景配置错误（指出出错的字段与行号）"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"字段 '{field}'")
        if line is not None:
            where.append(f"第 {line} 行")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class DeliveryBoundError(SimulationError):
    """延迟策略超出部分同步投递上界"""
    pass


class QueryError(SimulationError):
    """对视图中不存在的区块进行查询"""
    pass


class MalformedLinkError(SimulationError):
    """FFG 链接端点冲突或高度不递增"""
    pass


class ScriptError(SimulationError):
    """攻击脚本前置条件不满足"""
    pass


class LedgerInvariantError(SimulationError):
    """LOG_fin 不是 LOG_da 的前缀"""
    pass


class StalledSimulationError(SimulationError):
    """事件队列在结束时间之前被耗尽"""
    pass


class TraceFormatError(SimulationError):
    """无法解析的轨迹行"""
    pass
