"""
可追责安全性审计

若存在两个冲突的最终确定检查点，则可检测到的罚没余额必须超过总余额的 1/3。
另提供小模型枚举：两条分支 G / A1..Ad / B1..Bd 上的全部合法链接，可选加入确认。
"""

from __future__ import annotations
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from ..chain.block import GENESIS, Block, make_block
from ..chain.checkpoint import GENESIS_CHECKPOINT, Checkpoint, is_conflicting
from ..chain.votes import VoteMessage, ack_vote, ffg_vote
from ..sim.rng import SplitMix64
from .justification import (
    FinalityRule, JustificationState, Link, update_finalization, update_justification,
)
from .slashing import SlashingRecord, detect_slashing, slashable_validators

logger = logging.getLogger(__name__)


@dataclass
class AuditReport:
    """
    审计结果
    """
    conflicting: Optional[Tuple[Checkpoint, Checkpoint]]    # 冲突的最终确定检查点
    slashable: List[int]                                    # 可罚没的验证者
    slashable_stake: int                                    # 可罚没余额
    total_stake: int                                        # 总余额
    records: List[SlashingRecord] = field(default_factory=list)

    @property
    def safety_violated(self) -> bool:
        return self.conflicting is not None

    @property
    def accountable(self) -> bool:
        """冲突最终确定必然伴随超过 1/3 的可罚没余额"""
        return self.conflicting is None or 3 * self.slashable_stake > self.total_stake

    def format_result(self) -> str:
        lines = ["=" * 60, "可追责安全性审计", "=" * 60]
        if self.conflicting is None:
            lines.append("冲突的最终确定: 无")
        else:
            a, b = self.conflicting
            lines.append(f"冲突的最终确定: {a} / {b}")
        lines.append(f"可罚没验证者: {self.slashable or '-'}")
        lines.append(f"可罚没余额: {self.slashable_stake} / {self.total_stake}")
        lines.append(f"可追责: {'是' if self.accountable else '否'}")
        lines.append("=" * 60)
        return "\n".join(lines)


def find_conflicting_finalized(blocks: Mapping[int, Block],
                               finalized: Iterable[Checkpoint]) -> Optional[Tuple[Checkpoint, Checkpoint]]:
    """返回第一对冲突的最终确定检查点"""
    ordered = sorted(set(finalized))
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if is_conflicting(blocks, a, b):
                return (a, b)
    return None


def accountable_safety_audit(blocks: Mapping[int, Block], finalized: Iterable[Checkpoint],
                             votes: Iterable[VoteMessage], balances: Mapping[int, int],
                             total: int, three_sf: bool = False) -> AuditReport:
    """
    审计一次完整运行

    Args:
        blocks: 全部区块
        finalized: 所有验证者最终确定过的检查点之并
        votes: 全部投票
        balances: 验证者 -> 余额
        total: 总余额
        three_sf: 是否启用 3SF 附加罚没条件

    Returns:
        AuditReport
    """
    records = detect_slashing(votes, blocks, three_sf=three_sf)
    slashable = slashable_validators(records)
    report = AuditReport(
        conflicting=find_conflicting_finalized(blocks, finalized),
        slashable=slashable,
        slashable_stake=sum(balances.get(v, 0) for v in slashable),
        total_stake=total,
        records=records,
    )
    if report.safety_violated:
        logger.warning("发现冲突的最终确定: %s / %s", *report.conflicting)
    return report


# ============================================================================
# 小模型枚举
# ============================================================================

# 一个验证者的一次行为：投出链接，或确认某个检查点
Action = Union[Link, Checkpoint]


def small_model(depth: int = 2) -> Tuple[dict, List[Link]]:
    """
    树 G ← A1 ← … ← Ad，G ← B1 ← … ← Bd，检查点高度 0..d

    Args:
        depth: 每条分支的区块数（默认 2，即 6 条合法链接）

    Returns:
        (区块表, 同一分支上全部高度递增的链接)
    """
    blocks = {GENESIS.digest: GENESIS}
    links: List[Link] = []
    for proposer in (0, 1):
        parent = GENESIS
        branch = [GENESIS_CHECKPOINT]
        for slot in range(1, depth + 1):
            block = make_block(parent, slot, proposer)
            blocks[block.digest] = block
            branch.append(Checkpoint(slot, block.digest))
            parent = block
        links.extend(itertools.combinations(branch, 2))
    return blocks, links


def _subsets(actions: Sequence[Action]) -> List[Tuple[Action, ...]]:
    return [combo for r in range(len(actions) + 1) for combo in itertools.combinations(actions, r)]


def execution_votes(assignment: Sequence[Tuple[Action, ...]]) -> List[VoteMessage]:
    """第 i 个验证者投出 assignment[i] 中的全部链接与确认（投票槽取目标序号）"""
    votes = []
    for voter, actions in enumerate(assignment):
        for action in actions:
            if isinstance(action, Checkpoint):
                votes.append(ack_vote(voter, action.index, action))
            else:
                source, target = action
                votes.append(ffg_vote(voter, target.index, source, target))
    return votes


def evaluate_execution(blocks: Mapping[int, Block], assignment: Sequence[Tuple[Action, ...]],
                       rule: FinalityRule = FinalityRule.CASPER) -> AuditReport:
    """
    按最终确定规则审计一次等额质押的执行

    PIPELINED 规则同时启用 3sf-extra 罚没条件。
    """
    votes = execution_votes(assignment)
    balances = {v: 1 for v in range(len(assignment))}
    total = len(assignment)
    state = JustificationState(rule=rule)
    update_justification(state, balances, total, votes, blocks)
    update_finalization(state, balances, total)
    return accountable_safety_audit(blocks, state.finalized, votes, balances, total,
                                    three_sf=rule is FinalityRule.PIPELINED)


def enumerate_ffg_executions(validators: int = 4, sample: Optional[int] = None,
                             seed: int = 0, depth: int = 2,
                             acks: bool = False) -> Iterator[Tuple[Tuple[Action, ...], ...]]:
    """
    枚举每个验证者行为子集的多重集合

    Args:
        validators: 验证者数
        sample: 为 None 时穷举，否则随机抽取 sample 个（每个行为独立地以 1/2 概率出现）
        seed: 抽样种子
        depth: 小模型分支长度
        acks: 是否把对非创世检查点的确认加入可选行为
    """
    _, links = small_model(depth)
    actions: List[Action] = list(links)
    if acks:
        actions.extend(sorted({t for _, t in links}))
    if sample is None:
        yield from itertools.combinations_with_replacement(_subsets(actions), validators)
        return
    rng = SplitMix64(seed)
    for _ in range(sample):
        yield tuple(tuple(a for a in actions if rng.below(2)) for _ in range(validators))
