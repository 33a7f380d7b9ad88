"""
场景配置

平面 UTF-8 文本，每行一个 `key = value`，`#` 之后为注释。
列表用逗号分隔，区间写作 `a..b`（闭区间），无穷写作 `inf`。

支持的键：
    protocol              gasper-lite | goldfish | rlmd | lmd-vm | ssf | 3sf   （必填）
    n                     验证者数                                             （必填）
    eta                   投票过期窗口（整数或 inf）
    stake                 默认质押（ETH）
    stakes                按编号的质押列表
    max_effective_balance 有效余额上限（ETH）
    gst / gat             全局稳定 / 唤醒时间（tick，可为 inf）
    slots                 运行的槽数
    seed                  64 位种子
    checkpoint_spacing    纪元长度 H
    leak.trigger          触发泄漏的未最终确定纪元数
    leak.rate             每纪元泄漏比例（如 0.1 或 1/10）
    offline               整个运行期间离线的验证者
    offline.<id>          该验证者离线的槽区间
    adversary             攻击策略名
    adversary.ids         敌手控制的验证者
    attack.slot / attack.k / attack.pi / attack.scripted
    ssf.fallback_target   SSF 快速确认失败时投向最近一次快速确认的区块

示例：
    protocol = gasper-lite
    n = 64
    adversary = ex-ante-reorg
    adversary.ids = 0, 1
"""

from __future__ import annotations
import dataclasses
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from ..adversary.registry import list_strategies, make_strategy
from ..chain.votes import Eta
from ..errors import ConfigError
from ..ffg.leak import LeakConfig
from ..protocols.base import AdversaryHooks, EngineParams, ProtocolKind
from ..sim.clock import NEVER, SLOTS_PER_EPOCH, Ticks, first_slot_at_or_after
from ..sim.network import NetworkConfig
from ..stake.participation import ParticipationSchedule
from ..stake.registry import MAX_EFFECTIVE_BALANCE_MERGE, EffectiveBalanceRule, ValidatorRegistry

logger = logging.getLogger(__name__)

MAX_SEED = (1 << 64) - 1

_KEY_PATTERN = re.compile(r"^[a-z_][a-z0-9_]*(\.[a-z0-9_]+)?$")


# ============================================================================
# 值转换
# ============================================================================

def _text(value: str) -> str:
    return value


def _int(value: str) -> int:
    return int(value, 0)


def _eta(value: str) -> Eta:
    return math.inf if value == "inf" else _int(value)


def _ticks(value: str) -> Ticks:
    return NEVER if value == "inf" else _int(value)


def _bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"不是布尔值: {value}")


def _fraction(value: str) -> Fraction:
    return Fraction(value)


def _int_list(value: str) -> List[int]:
    items = [v.strip() for v in value.split(",")]
    if any(not v for v in items):
        raise ValueError(f"列表中有空项: {value}")
    return [_int(v) for v in items]


def parse_range(value: str) -> Tuple[int, int]:
    """
    `a..b` 闭区间（单个整数视为 a..a）

    Raises:
        ValueError: 格式错误或 a > b
    """
    low, sep, high = value.partition("..")
    first = _int(low.strip())
    last = _int(high.strip()) if sep else first
    if first > last:
        raise ValueError(f"区间下界大于上界: {value}")
    return first, last


# 键 -> (字段名, 转换函数)
KEYS: Dict[str, Tuple[str, Callable[[str], object]]] = {
    "protocol": ("protocol", _text),
    "eta": ("eta", _eta),
    "n": ("n", _int),
    "stake": ("stake", _int),
    "stakes": ("stakes", _int_list),
    "max_effective_balance": ("max_effective_balance", _int),
    "gst": ("gst", _ticks),
    "gat": ("gat", _ticks),
    "slots": ("slots", _int),
    "seed": ("seed", _int),
    "checkpoint_spacing": ("checkpoint_spacing", _int),
    "leak.trigger": ("leak_trigger", _int),
    "leak.rate": ("leak_rate", _fraction),
    "offline": ("offline", _int_list),
    "adversary": ("adversary", _text),
    "adversary.ids": ("adversary_ids", _int_list),
    "attack.slot": ("attack_slot", _int),
    "attack.k": ("attack_k", _int),
    "attack.pi": ("attack_pi", _int),
    "attack.scripted": ("attack_scripted", _bool),
    "ssf.fallback_target": ("fallback_target", _bool),
}

REQUIRED_KEYS = ("protocol", "n")


@dataclass
class ScenarioConfig:
    """
    场景配置
    """
    protocol: str = "goldfish"
    n: int = 4
    eta: Eta = 1
    stake: int = 32
    stakes: Optional[List[int]] = None
    max_effective_balance: int = MAX_EFFECTIVE_BALANCE_MERGE
    gst: Ticks = 0
    gat: Ticks = NEVER
    slots: int = 10
    seed: int = 0
    checkpoint_spacing: int = SLOTS_PER_EPOCH
    leak_trigger: int = 4
    leak_rate: Fraction = Fraction(1, 10)
    offline: List[int] = field(default_factory=list)
    offline_ranges: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    adversary: str = "none"
    adversary_ids: List[int] = field(default_factory=list)
    attack_slot: int = 5
    attack_k: int = 2
    attack_pi: int = 1
    attack_scripted: bool = True
    fallback_target: bool = False

    @property
    def kind(self) -> ProtocolKind:
        return ProtocolKind.parse(self.protocol)

    def stake_list(self) -> List[int]:
        return list(self.stakes) if self.stakes is not None else [self.stake] * self.n

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)

    def validate(self) -> None:
        """
        校验配置

        Raises:
            ConfigError: 指出出错的字段
        """
        kind = self.kind
        if not (self.eta == math.inf or (isinstance(self.eta, int) and self.eta >= 1)):
            raise ConfigError(f"eta 必须是 ≥ 1 的整数或 inf: {self.eta}", field="eta")
        if self.n < 1:
            raise ConfigError(f"n 必须为正: {self.n}", field="n")
        if self.stakes is not None and len(self.stakes) != self.n:
            raise ConfigError(f"stakes 有 {len(self.stakes)} 项，n = {self.n}", field="stakes")
        if any(s <= 0 for s in self.stake_list()):
            raise ConfigError("质押必须为正", field="stakes" if self.stakes is not None else "stake")
        if self.slots < 1:
            raise ConfigError(f"slots 必须 ≥ 1: {self.slots}", field="slots")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed 必须是 64 位无符号整数: {self.seed}", field="seed")
        if self.checkpoint_spacing < 1:
            raise ConfigError("checkpoint_spacing 必须 ≥ 1", field="checkpoint_spacing")
        if kind is ProtocolKind.GASPER_LITE and self.n < self.checkpoint_spacing:
            raise ConfigError(
                f"gasper-lite 需要 n ≥ {self.checkpoint_spacing} 以划分委员会: {self.n}", field="n")
        for name, value in (("gst", self.gst), ("gat", self.gat)):
            if value < 0:
                raise ConfigError(f"{name} 必须 ≥ 0: {value}", field=name)
        for vid in self.offline:
            self._check_id(vid, "offline")
        for vid, (first, _) in self.offline_ranges.items():
            self._check_id(vid, f"offline.{vid}")
            if first < 0:
                raise ConfigError(f"离线区间不能从负槽开始: {first}", field=f"offline.{vid}")
        for vid in self.adversary_ids:
            self._check_id(vid, "adversary.ids")
        if self.adversary not in list_strategies():
            raise ConfigError(
                f"未知攻击策略 '{self.adversary}'，可选: {', '.join(list_strategies())}", field="adversary")
        self.leak_config()
        EffectiveBalanceRule(self.max_effective_balance)

    def _check_id(self, vid: int, key: str) -> None:
        if not 0 <= vid < self.n:
            raise ConfigError(f"验证者编号 {vid} 超出 [0, {self.n})", field=key)

    # ------------------------------------------------------------------
    # 构造模拟组件
    # ------------------------------------------------------------------

    def leak_config(self) -> LeakConfig:
        return LeakConfig(trigger=self.leak_trigger, rate=self.leak_rate)

    def engine_params(self) -> EngineParams:
        return EngineParams(
            kind=self.kind, eta=self.eta, checkpoint_spacing=self.checkpoint_spacing,
            fallback_target=self.fallback_target, leak=self.leak_config(),
        )

    def registry(self) -> ValidatorRegistry:
        return ValidatorRegistry.from_stakes(
            self.stake_list(), adversarial=self.adversary_ids,
            rule=EffectiveBalanceRule(self.max_effective_balance),
        )

    def participation(self) -> ParticipationSchedule:
        pps = self.kind.phases_per_slot
        return ParticipationSchedule(
            offline_slots={vid: frozenset(range(a, b + 1)) for vid, (a, b) in self.offline_ranges.items()},
            always_offline=frozenset(self.offline),
            gat_slot=first_slot_at_or_after(self.gat, pps),
        )

    def network(self) -> NetworkConfig:
        return NetworkConfig(gst=self.gst, gat=self.gat)

    def strategy(self) -> AdversaryHooks:
        """
        Raises:
            ConfigError: 策略名未知
        """
        try:
            return make_strategy(
                self.adversary, controlled=self.adversary_ids, slot=self.attack_slot,
                k=self.attack_k, pi=self.attack_pi, scripted=self.attack_scripted,
            )
        except ValueError as e:
            raise ConfigError(str(e), field="adversary") from e


# ============================================================================
# 解析
# ============================================================================

class LineLexer:
    """单行词法分析：去掉注释，切出 key 与 value"""

    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.text = text.split("#", 1)[0].strip()

    def is_blank(self) -> bool:
        return not self.text

    def split(self) -> Tuple[str, str]:
        """
        Returns:
            (key, value)

        Raises:
            ConfigError: 缺少 '='、键名非法或值为空
        """
        key, sep, value = self.text.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"期望 'key = value'，得到 '{self.text}'", line=self.lineno)
        if not _KEY_PATTERN.match(key):
            raise ConfigError(f"非法键名 '{key}'", line=self.lineno)
        if not value:
            raise ConfigError("值为空", field=key, line=self.lineno)
        return key, value


def parse_config(text: str) -> ScenarioConfig:
    """
    解析配置文本并校验

    Args:
        text: 配置文本

    Returns:
        ScenarioConfig

    Raises:
        ConfigError: 语法错误、未知键、重复键、缺少必填键或校验失败
    """
    config = ScenarioConfig()
    seen: Dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        lexer = LineLexer(line, lineno)
        if lexer.is_blank():
            continue
        key, value = lexer.split()
        if key in seen:
            raise ConfigError(f"重复的键（首次出现在第 {seen[key]} 行）", field=key, line=lineno)
        seen[key] = lineno
        try:
            if key.startswith("offline."):
                vid = _int(key.split(".", 1)[1])
                config.offline_ranges[vid] = parse_range(value)
                continue
            if key not in KEYS:
                raise ConfigError(f"未知的键 '{key}'", field=key, line=lineno)
            attr, convert = KEYS[key]
            setattr(config, attr, convert(value))
        except ValueError as e:
            raise ConfigError(f"无法解析 '{value}': {e}", field=key, line=lineno) from None
    for key in REQUIRED_KEYS:
        if key not in seen:
            raise ConfigError("缺少必填键", field=key)
    config.validate()
    logger.debug("配置: %s, n=%d, %d 个槽", config.protocol, config.n, config.slots)
    return config


def load_config(path: str) -> ScenarioConfig:
    """
    读取并解析配置文件

    Raises:
        ConfigError: 文件不可读或内容非法
    """
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
    return parse_config(text)
