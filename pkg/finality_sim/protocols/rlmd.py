"""
提议-投票-合并协议族：RLMD-GHOST(η)、Goldfish（η=1）、LMD 视图合并（η=∞）

每槽三个阶段：
- 0 PROPOSE：提议者合并缓冲区，以 [t-η, t-1] 的投票跑 RLMD-GHOST，出块并广播自己的视图
- 1 VOTE：采纳收到的提议视图，重算链头并投头投票
- 2 CONFIRM/MERGE：合并缓冲区，用包含本槽投票的分叉选择输出确认账本

收到的区块与投票先进入缓冲区，只在合并阶段（或采纳提议时）进入视图。
"""

from __future__ import annotations
import logging

from ..chain.votes import VoteMessage, head_vote
from ..forkchoice.rules import rlmd_ghost
from ..sim.trace import SIMULATOR
from ..stake.participation import Mode
from .base import ProtocolEngine, Proposal, ValidatorState

logger = logging.getLogger(__name__)

PROPOSE, VOTE, MERGE = 0, 1, 2


class ProposeVoteMergeEngine(ProtocolEngine):
    """
    提议-投票-合并引擎基类

    子类只需给出分叉选择与阶段布局之外的差异。
    """
    name = "propose-vote-merge"

    def fork_choice(self, st: ValidatorState, slot: int) -> int:
        return rlmd_ghost(st.view, slot, self.params.window, self.sim.balances)

    def on_deliver(self, vid: int, payload: object) -> None:
        st = self.validators[vid]
        if isinstance(payload, Proposal):
            st.proposals.setdefault(payload.slot, payload)
            st.view.receive(payload.block)
        else:
            st.view.receive(payload)

    def on_phase(self, slot: int, phase: int) -> None:
        if phase == PROPOSE:
            self.propose(slot)
        elif phase == VOTE:
            self.vote(slot)
        elif phase == MERGE:
            self.merge(slot)

    # ------------------------------------------------------------------
    # 共用步骤
    # ------------------------------------------------------------------

    def merge_buffer(self, st: ValidatorState) -> int:
        moved = st.view.merge_buffer()
        if moved:
            self.sim.emit("merge", st.vid, moved=moved)
        return moved

    def build_proposal(self, vid: int, slot: int) -> Proposal:
        """合并缓冲区、跑分叉选择、出块，返回携带视图的提议"""
        st = self.validators[vid]
        self.merge_buffer(st)
        head = self.fork_choice(st, slot)
        self.set_head(st, head)
        block = self.make_proposal(vid, slot, head)
        blocks, votes = st.view.snapshot()
        return Proposal(block, blocks, votes)

    def adopt_proposal(self, st: ValidatorState, slot: int) -> None:
        proposal = st.proposals.get(slot)
        if proposal is not None:
            st.view.adopt(proposal.blocks, proposal.votes)

    def vote_for(self, vid: int, slot: int, head: int) -> VoteMessage:
        return head_vote(vid, slot, head)

    def build_vote(self, vid: int, slot: int) -> VoteMessage:
        """采纳提议视图后投票；没有收到提议时按自己的视图投票"""
        self.adopt_proposal(self.validators[vid], slot)
        return super().build_vote(vid, slot)

    def forget_proposals(self, st: ValidatorState, slot: int) -> None:
        for s in [s for s in st.proposals if s <= slot]:
            del st.proposals[s]

    # ------------------------------------------------------------------
    # 阶段
    # ------------------------------------------------------------------

    def propose(self, slot: int) -> None:
        p = self.sim.proposer(slot)
        if p is None:
            self.sim.emit("no-proposal", SIMULATOR)
            return
        if self.sim.adversary.handles_proposal(p, slot):
            return
        if not self.sim.is_awake(p, slot):
            self.sim.emit("no-proposal", p)
            return
        self.publish_proposal(self.build_proposal(p, slot))

    def vote(self, slot: int) -> None:
        for vid in sorted(self.validators):
            if not self.sim.is_awake(vid, slot):
                continue
            if self.sim.adversary.handles_vote(vid, slot):
                continue
            self.publish_vote(self.build_vote(vid, slot))

    def merge(self, slot: int) -> None:
        for vid in sorted(self.validators):
            st = self.validators[vid]
            mode = self.sim.mode(vid, slot)
            if mode is not Mode.OFFLINE:
                self.merge_buffer(st)
                if mode is Mode.AWAKE:
                    self.set_head(st, self.fork_choice(st, slot + 1))
                    self.emit_confirm(st)
            self.forget_proposals(st, slot)


class RlmdEngine(ProposeVoteMergeEngine):
    """RLMD-GHOST(η)"""
    name = "rlmd"


class GoldfishEngine(ProposeVoteMergeEngine):
    """Goldfish：只使用上一个槽的投票"""
    name = "goldfish"


class LmdViewMergeEngine(ProposeVoteMergeEngine):
    """带视图合并的 LMD-GHOST：投票不过期"""
    name = "lmd-vm"
