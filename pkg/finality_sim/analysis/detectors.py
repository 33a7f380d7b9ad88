"""
轨迹检测器

全部检测器只读轨迹：区块树由 propose 记录重建，验证者集合与权重取自
scenario 记录，因此可以对保存下来的轨迹离线重算。

- growth_intervals：同步窗口内诚实验证者的确认链是否增长
- check_security：所有最终确定区块两两兼容
- reorg_depth：诚实验证者链头切换时放弃的最大区块数
- time_to_finality：每个区块从提出到最终确定的槽数
- compare_traces：逐条比对两条轨迹
- check_ledger_prefix：LOG_fin 是 LOG_da 的前缀（3SF 另查 chConf）
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from ..chain.block import (
    GENESIS, Block, chain_of, common_ancestor, fmt_digest, height, is_ancestor,
)
from ..errors import TraceFormatError
from ..sim.clock import NEVER, first_slot_at_or_after
from ..sim.trace import SIMULATOR, TraceRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Confirmation:
    """
    一条 confirm 记录
    """
    slot: int
    tick: int
    da: int
    da_len: int
    fin: int
    fin_len: int
    conf: Optional[int] = None


class TraceIndex:
    """
    轨迹索引
    """

    def __init__(self, trace: Sequence[TraceRecord]):
        """
        Raises:
            TraceFormatError: 缺少 scenario 记录
        """
        self.trace = list(trace)
        scenario = next((r for r in self.trace if r.kind == "scenario"), None)
        if scenario is None:
            raise TraceFormatError("轨迹缺少 scenario 记录")
        self.n = scenario.get_int("n")
        self.phases = scenario.get_int("phases")
        self.gst = _parse_ticks(scenario.get("gst", "0"))
        self.gat = _parse_ticks(scenario.get("gat", "inf"))
        adversarial = scenario.get("adversarial", "-")
        self.adversarial: FrozenSet[int] = frozenset(
            () if adversarial == "-" else (int(v) for v in adversarial.split(",")))
        self.weights: List[int] = [int(w) for w in scenario.get("weights", "").split(",") if w]
        self.total = scenario.get_int("total", sum(self.weights))

        self.blocks: Dict[int, Block] = {GENESIS.digest: GENESIS}
        self.private: Set[int] = set()
        self.confirms: Dict[int, List[Confirmation]] = {}
        self.head_changes: List[TraceRecord] = []
        self.finalizations: List[TraceRecord] = []
        self.slashes: List[TraceRecord] = []
        self.attacks: List[TraceRecord] = []
        self.last_slot = 0
        for r in self.trace:
            if r.kind == "slot":
                self.last_slot = max(self.last_slot, r.slot)
            elif r.kind == "propose":
                digest = r.get_digest("block")
                self.blocks[digest] = Block(digest, r.get_digest("parent"), r.slot, r.actor)
                if r.get("private") == "1":
                    self.private.add(digest)
            elif r.kind == "confirm":
                conf = r.get_digest("conf")
                self.confirms.setdefault(r.actor, []).append(Confirmation(
                    r.slot, r.tick, r.get_digest("da"), r.get_int("da_len"),
                    r.get_digest("fin"), r.get_int("fin_len"), conf,
                ))
            elif r.kind == "head-change":
                self.head_changes.append(r)
            elif r.kind == "finalize":
                self.finalizations.append(r)
            elif r.kind == "slash":
                self.slashes.append(r)
            elif r.kind == "attack":
                self.attacks.append(r)

    @property
    def honest(self) -> List[int]:
        return [v for v in range(self.n) if v not in self.adversarial]

    def is_honest(self, actor: int) -> bool:
        return actor != SIMULATOR and 0 <= actor < self.n and actor not in self.adversarial

    @property
    def first_synchronous_slot(self):
        return first_slot_at_or_after(self.gst, self.phases)

    def confirmed_at(self, validator: int, slot: int) -> Optional[Confirmation]:
        """验证者在 slot 结束时最后一次确认"""
        found = None
        for c in self.confirms.get(validator, ()):
            if c.slot > slot:
                break
            found = c
        return found

    def confirmed_in(self, validator: int, slot: int) -> Optional[Confirmation]:
        """验证者在 slot 内的最后一次确认（该槽没有确认时为 None）"""
        found = None
        for c in self.confirms.get(validator, ()):
            if c.slot == slot:
                found = c
            elif c.slot > slot:
                break
        return found


def _parse_ticks(value: str):
    return NEVER if value == "inf" else int(value)


TraceLike = Union[TraceIndex, Sequence[TraceRecord]]


def _index(trace: TraceLike) -> TraceIndex:
    return trace if isinstance(trace, TraceIndex) else TraceIndex(trace)


# ============================================================================
# 增长区间
# ============================================================================

@dataclass
class GrowthReport:
    """
    增长区间检查结果
    """
    window: int                                                     # ℓ
    checked: int = 0                                                # 检查过的 (验证者, 窗口) 数
    failures: List[Tuple[int, int, int]] = field(default_factory=list)  # (验证者, 起始槽, 结束槽)
    stalled: List[Tuple[int, int]] = field(default_factory=list)    # 没有任何诚实确认的窗口

    @property
    def ok(self) -> bool:
        """同步窗口内在线的诚实验证者都有增长"""
        return not self.failures

    @property
    def live(self) -> bool:
        return self.ok and not self.stalled


def growth_intervals(trace: TraceLike, window: int = 4) -> GrowthReport:
    """
    检查每个完全同步、长度为 ℓ 的窗口 [a, a+ℓ-1] 是否为增长区间

    只检查在 a-1 与 a+ℓ-1 都有确认的诚实验证者；没有任何诚实验证者确认的窗口
    记为停滞（活性损失，不算违规）。

    Args:
        trace: 轨迹或索引
        window: 窗口长度 ℓ（≥ 1）

    Returns:
        GrowthReport

    Raises:
        ValueError: window < 1
    """
    if window < 1:
        raise ValueError(f"窗口长度必须 ≥ 1: {window}")
    idx = _index(trace)
    report = GrowthReport(window=window)
    start = idx.first_synchronous_slot
    if start == NEVER:
        return report
    first = max(int(start), 1)
    for a in range(first, idx.last_slot - window + 2):
        b = a + window - 1
        awake_any = False
        for v in idx.honest:
            before = idx.confirmed_in(v, a - 1)
            after = idx.confirmed_in(v, b)
            if after is not None:
                awake_any = True
            if before is None or after is None:
                continue
            report.checked += 1
            if after.da_len <= before.da_len:
                report.failures.append((v, a, b))
        if not awake_any:
            report.stalled.append((a, b))
    if report.failures:
        logger.info("%d 个同步窗口没有增长", len(report.failures))
    return report


# ============================================================================
# 安全性
# ============================================================================

@dataclass
class SecurityVerdict:
    """
    安全性检查结果
    """
    safe: bool
    finalized: int = 0                              # 检查过的最终确定区块数
    witness: Optional[Tuple[int, int]] = None       # 冲突的最终确定区块对
    slashable: List[int] = field(default_factory=list)
    slashable_fraction: Fraction = Fraction(0)

    def format_witness(self) -> str:
        if self.witness is None:
            return "-"
        a, b = self.witness
        return f"{fmt_digest(a)},{fmt_digest(b)}"


def check_security(trace: TraceLike) -> SecurityVerdict:
    """
    所有验证者在所有时刻最终确定的区块必须两两兼容（祖先关系）

    Returns:
        SecurityVerdict（不安全时给出见证对）
    """
    idx = _index(trace)
    finalized: Set[int] = {r.get_digest("block") for r in idx.finalizations}
    for confirms in idx.confirms.values():
        finalized.update(c.fin for c in confirms)
    known = sorted((d for d in finalized if d in idx.blocks),
                   key=lambda d: (height(idx.blocks, d), d))
    witness = None
    for lower, upper in zip(known, known[1:]):
        if not is_ancestor(idx.blocks, lower, upper):
            witness = (lower, upper)
            logger.warning("最终确定冲突: %s / %s", fmt_digest(lower), fmt_digest(upper))
            break
    slashable = sorted({r.actor for r in idx.slashes})
    weight = sum(idx.weights[v] for v in slashable if v < len(idx.weights))
    fraction = Fraction(weight, idx.total) if idx.total else Fraction(0)
    return SecurityVerdict(witness is None, len(known), witness, slashable, fraction)


def check_ledger_prefix(trace: TraceLike) -> List[str]:
    """
    每条诚实 confirm 记录中 LOG_fin 必须是 LOG_da 的前缀，chConf 必须是 chAva 的前缀

    Returns:
        违规描述
    """
    idx = _index(trace)
    violations = []
    for v in idx.honest:
        for c in idx.confirms.get(v, ()):
            if c.fin not in idx.blocks or c.da not in idx.blocks:
                violations.append(f"验证者 {v} 槽 {c.slot}: 账本区块不在轨迹中")
                continue
            if not is_ancestor(idx.blocks, c.fin, c.da):
                violations.append(f"验证者 {v} 槽 {c.slot}: LOG_fin 不是 LOG_da 的前缀")
            if c.conf is not None and not is_ancestor(idx.blocks, c.conf, c.da):
                violations.append(f"验证者 {v} 槽 {c.slot}: chConf 不是 chAva 的前缀")
    return violations


# ============================================================================
# 重组
# ============================================================================

@dataclass(frozen=True)
class ReorgEvent:
    """
    一次离开原链的链头切换
    """
    validator: int
    slot: int
    old: int
    new: int
    depth: int


def reorg_events(trace: TraceLike) -> List[ReorgEvent]:
    """诚实验证者的链头切换中旧链头不是新链头祖先的那些"""
    idx = _index(trace)
    events = []
    for r in idx.head_changes:
        if not idx.is_honest(r.actor):
            continue
        old, new = r.get_digest("old"), r.get_digest("new")
        if old not in idx.blocks or new not in idx.blocks:
            continue
        fork = common_ancestor(idx.blocks, old, new)
        depth = height(idx.blocks, old) - height(idx.blocks, fork)
        if depth > 0:
            events.append(ReorgEvent(r.actor, r.slot, old, new, depth))
    return events


def reorg_depth(trace: TraceLike) -> int:
    """诚实验证者链头切换时放弃的最大区块数（没有重组时为 0）"""
    return max((e.depth for e in reorg_events(trace)), default=0)


def canonical_chain(trace: TraceLike, validator: int, slot: int) -> List[int]:
    """验证者在 slot 结束时的 LOG_da（创世块开始）"""
    idx = _index(trace)
    c = idx.confirmed_at(validator, slot)
    if c is None:
        return [GENESIS.digest]
    return chain_of(idx.blocks, c.da)


def orphaned_blocks(trace: TraceLike, before_slot: int) -> List[int]:
    """
    before_slot 之前所有诚实验证者共同确认、运行结束时不在任何诚实验证者确认链上的区块

    Returns:
        按槽排序的区块摘要
    """
    idx = _index(trace)
    shared: Optional[Set[int]] = None
    for v in idx.honest:
        if idx.confirmed_at(v, before_slot - 1) is None:
            continue
        chain = set(canonical_chain(idx, v, before_slot - 1))
        shared = chain if shared is None else shared & chain
    final: Set[int] = set()
    for v in idx.honest:
        if idx.confirmed_in(v, idx.last_slot) is not None:
            final.update(canonical_chain(idx, v, idx.last_slot))
    lost = [d for d in (shared or ()) if d not in final]
    return sorted(lost, key=lambda d: (idx.blocks[d].slot, d))


# ============================================================================
# 最终确定延迟
# ============================================================================

def time_to_finality(trace: TraceLike, validator: Optional[int] = None) -> Dict[int, int]:
    """
    每个公开区块从提出到最终确定的槽数

    区块在某个诚实验证者（或指定验证者）最终确定它本身或其后代时即视为最终确定。

    Returns:
        区块摘要 -> 槽数
    """
    idx = _index(trace)
    done: Dict[int, int] = {}
    for r in idx.finalizations:
        if validator is not None and r.actor != validator:
            continue
        if validator is None and not idx.is_honest(r.actor):
            continue
        digest = r.get_digest("block")
        if digest not in idx.blocks:
            continue
        for b in _ancestors(idx, digest):
            if b.digest in done:
                break
            if b.is_genesis:
                break
            done[b.digest] = r.slot - b.slot
    return {d: s for d, s in done.items() if d not in idx.private}


def _ancestors(idx: TraceIndex, digest: int) -> Iterable[Block]:
    block = idx.blocks[digest]
    while True:
        yield block
        if block.is_genesis or block.parent not in idx.blocks:
            return
        block = idx.blocks[block.parent]


# ============================================================================
# 轨迹比对
# ============================================================================

@dataclass
class TraceDiff:
    """
    轨迹比对结果
    """
    equal: bool
    index: Optional[int] = None     # 第一处不同的记录序号（从 0 开始）
    left: Optional[str] = None
    right: Optional[str] = None

    def format_result(self) -> str:
        if self.equal:
            return "轨迹相同"
        return (f"第 {self.index + 1} 条记录不同:\n"
                f"  < {self.left if self.left is not None else '(结束)'}\n"
                f"  > {self.right if self.right is not None else '(结束)'}")


def _lines(trace: Sequence[Union[TraceRecord, str]]) -> List[str]:
    return [r.to_line() if isinstance(r, TraceRecord) else r.rstrip("\n") for r in trace]


def compare_traces(a: Sequence[Union[TraceRecord, str]],
                   b: Sequence[Union[TraceRecord, str]]) -> TraceDiff:
    """
    逐条比对

    Args:
        a, b: 记录或文本行

    Returns:
        TraceDiff（不同时给出第一处分歧）
    """
    left, right = _lines(a), _lines(b)
    for i, (x, y) in enumerate(zip(left, right)):
        if x != y:
            return TraceDiff(False, i, x, y)
    if len(left) != len(right):
        i = min(len(left), len(right))
        return TraceDiff(False, i, left[i] if i < len(left) else None, right[i] if i < len(right) else None)
    return TraceDiff(True)
