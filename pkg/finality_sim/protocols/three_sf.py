"""
三槽最终确定（3SF）

每槽四个阶段：
- 0 PROPOSE：以最大被证明检查点（GJ）为根的 HFC 出块
- 1 VOTE：一条组合投票，头投票指向链头，FFG 链接 GJ → (链头, t)
- 2 CONFIRM：本槽投票超级多数支持某区块时更新 chConf；chAva 取链头（若 chConf 是其前缀）否则取 chConf
- 3 MERGE：合并缓冲区并推进证明；C→C1→C2 连续超级多数链接使 C 最终确定
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import List, Optional

from ..chain.block import fmt_digest, is_ancestor
from ..chain.checkpoint import Checkpoint
from ..chain.votes import VoteMessage, combined_vote
from ..sim.trace import TraceRecord
from .base import LedgerPair, ValidatorState, extract_ledgers
from .ssf import SsfEngine, supermajority_block

logger = logging.getLogger(__name__)

PROPOSE, VOTE, CONFIRM, MERGE = 0, 1, 2, 3


class ThreeSfEngine(SsfEngine):
    """
    3SF 引擎
    """
    name = "3sf"

    def on_phase(self, slot: int, phase: int) -> None:
        if phase == PROPOSE:
            self.propose(slot)
        elif phase == VOTE:
            self.vote(slot)
        elif phase == CONFIRM:
            self.confirm(slot)
        elif phase == MERGE:
            self.merge(slot)

    def vote_for(self, vid: int, slot: int, head: int) -> VoteMessage:
        st = self.validators[vid]
        return combined_vote(vid, slot, head, st.latest_justified, Checkpoint(slot, head))

    def available_tip(self, st: ValidatorState) -> int:
        """chAva：chConf 是链头前缀时取链头，否则退回 chConf"""
        conf = st.ch_conf if st.ch_conf is not None else st.view.genesis
        if is_ancestor(st.view.blocks, conf, st.head):
            return st.head
        return conf

    def confirm(self, slot: int) -> None:
        for vid in sorted(self.validators):
            if not self.sim.is_awake(vid, slot):
                continue
            st = self.validators[vid]
            confirmed = supermajority_block(st.view, slot, self.sim.balances, self.sim.total_balance())
            if confirmed is not None:
                st.ch_conf = confirmed
                logger.debug("验证者 %d 在槽 %d 确认 %s", vid, slot, fmt_digest(confirmed))

    def ledgers(self, st: ValidatorState) -> LedgerPair:
        conf = st.ch_conf if st.ch_conf is not None else st.view.genesis
        return extract_ledgers(st.view, st.latest_finalized.block, self.available_tip(st), conf)


# ============================================================================
# 流水线检查
# ============================================================================

@dataclass
class PipelineVerdict:
    """
    槽 t 区块的三槽流水线检查结果
    """
    slot: int                               # t
    block: Optional[int]                    # B_t
    justified_at: Optional[int] = None      # (B_t, t) 首次被证明的槽
    next_justified_at: Optional[int] = None # 检查点 t+1 首次被证明的槽
    third_justified_at: Optional[int] = None  # 检查点 t+2 首次被证明的槽
    finalized_at: Optional[int] = None      # (B_t, t) 首次最终确定的槽

    @property
    def finalized_on_time(self) -> bool:
        return self.finalized_at is not None and self.finalized_at <= self.slot + 2

    @property
    def ok(self) -> bool:
        return (
            self.block is not None
            and self.justified_at is not None and self.justified_at <= self.slot + 1
            and self.next_justified_at is not None and self.next_justified_at <= self.slot + 2
            and self.third_justified_at is not None and self.third_justified_at <= self.slot + 2
            and self.finalized_on_time
        )


def three_sf_pipeline_check(trace: List[TraceRecord], t: int) -> PipelineVerdict:
    """
    检查槽 t 的区块是否按流水线在 t+2 结束前最终确定

    Args:
        trace: 完整轨迹
        t: 槽号

    Returns:
        PipelineVerdict
    """
    block = None
    for r in trace:
        if r.kind == "propose" and r.slot == t and r.get("private") is None:
            block = r.get_digest("block")
            break
    verdict = PipelineVerdict(slot=t, block=block)
    if block is None:
        return verdict
    for r in trace:
        if r.kind not in ("justify", "finalize"):
            continue
        index = r.get_int("index")
        if r.kind == "justify":
            if index == t and r.get_digest("block") == block and verdict.justified_at is None:
                verdict.justified_at = r.slot
            elif index == t + 1 and verdict.next_justified_at is None:
                verdict.next_justified_at = r.slot
            elif index == t + 2 and verdict.third_justified_at is None:
                verdict.third_justified_at = r.slot
        elif index == t and r.get_digest("block") == block and verdict.finalized_at is None:
            verdict.finalized_at = r.slot
    return verdict
