"""
Gasper-lite

每槽三个阶段：
- 0 PROPOSE：纪元边界先做纪元处理（泄漏、证明、最终确定），然后提议者在 HLMD 链头上出块
- 1 ATTEST：本槽委员会成员投出组合证明（GHOST 头投票 + FFG 链接 LJ → 纪元边界对）
- 2 HOUSEKEEPING：重算链头并输出账本

消息到达即合并（无缓冲阶段）。每个验证者每纪元只在自己的委员会槽投票一次。
"""

from __future__ import annotations
import logging
from typing import Set

from ..chain.checkpoint import epoch_boundary_pair
from ..chain.votes import VoteMessage, combined_vote, head_vote
from ..errors import ConfigError
from ..ffg.leak import inactivity_leak
from ..forkchoice.rules import hlmd_ghost
from ..sim.trace import SIMULATOR
from ..stake.participation import Mode
from .base import ProtocolEngine, Proposal, ValidatorState

logger = logging.getLogger(__name__)

PROPOSE, ATTEST, HOUSEKEEPING = 0, 1, 2


class GasperLiteEngine(ProtocolEngine):
    """
    Gasper-lite 引擎
    """
    name = "gasper-lite"

    def __init__(self, sim):
        super().__init__(sim)
        spacing = self.params.checkpoint_spacing
        if len(sim.registry) < spacing:
            raise ConfigError(
                f"gasper-lite 需要至少 {spacing} 个验证者以划分委员会，实际 {len(sim.registry)}",
                field="n",
            )

    def fork_choice(self, st: ValidatorState, slot: int) -> int:
        return hlmd_ghost(st.view, st.latest_justified, slot, self.sim.balances)

    def on_deliver(self, vid: int, payload: object) -> None:
        st = self.validators[vid]
        if isinstance(payload, Proposal):
            st.view.receive_now(payload.block)
        else:
            st.view.receive_now(payload)

    def on_phase(self, slot: int, phase: int) -> None:
        if phase == PROPOSE:
            self.propose(slot)
        elif phase == ATTEST:
            self.attest(slot)
        elif phase == HOUSEKEEPING:
            self.housekeeping(slot)

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

    def vote_for(self, vid: int, slot: int, head: int) -> VoteMessage:
        """
        组合证明：头投票指向 head，FFG 链接从 LJ 指向 head 所在的纪元边界对

        目标不高于源时（例如纪元 0）只投头投票。
        """
        st = self.validators[vid]
        epoch = slot // self.params.checkpoint_spacing
        source = st.latest_justified
        target = epoch_boundary_pair(st.view.blocks, head, epoch, self.params.checkpoint_spacing)
        if target.index <= source.index:
            return head_vote(vid, slot, head)
        return combined_vote(vid, slot, head, source, target)

    def attest(self, slot: int) -> None:
        for vid in sorted(self.sim.committee_at(slot)):
            if not self.sim.is_awake(vid, slot):
                continue
            if self.sim.adversary.handles_vote(vid, slot):
                continue
            self.publish_vote(self.build_vote(vid, slot))

    def housekeeping(self, slot: int) -> None:
        for vid in sorted(self.validators):
            if self.sim.mode(vid, slot) is not Mode.AWAKE:
                continue
            st = self.validators[vid]
            self.set_head(st, self.fork_choice(st, slot + 1))
            self.emit_confirm(st)

    # ------------------------------------------------------------------
    # 纪元处理
    # ------------------------------------------------------------------

    def on_epoch(self, epoch: int) -> None:
        """纪元 epoch 开始：先泄漏，再证明与最终确定"""
        if epoch < 1:
            return
        self.apply_leak(epoch)
        for vid in sorted(self.validators):
            self.process_ffg(self.validators[vid])

    def apply_leak(self, epoch: int) -> None:
        finalized_epoch = max(
            (self.validators[v].latest_finalized.index for v in self.sim.registry.honest_ids),
            default=0,
        )
        unfinalized = epoch - finalized_epoch
        config = self.params.leak
        if unfinalized < config.trigger:
            return
        attested: Set[int] = self.sim.attested.get(epoch - 1, set())
        inactive = [v for v in self.sim.registry.ids if v not in attested]
        before = self.sim.total_balance()
        self.sim.balances = inactivity_leak(self.sim.balances, inactive, unfinalized, config)
        after = self.sim.total_balance()
        self.sim.emit("leak", SIMULATOR, epoch=epoch, unfinalized=unfinalized,
                      inactive=len(inactive), drained=before - after, total=after)
        logger.info("纪元 %d: %d 个纪元未最终确定，%d 个验证者不活跃", epoch, unfinalized, len(inactive))
