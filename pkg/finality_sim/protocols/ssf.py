"""
单槽最终确定（SSF）

每槽四个阶段：
- 0 PROPOSE：以最新被证明区块为根的 HFC 出块
- 1 HEAD-VOTE：采纳提议视图，投头投票
- 2 FFG-VOTE：快速确认（本槽头投票的超级多数支持的最深区块 B），投 LJ → (B, t)；
  没有快速确认时弃权（或按 fallback_target 投向最近一次快速确认的区块）
- 3 MERGE：合并缓冲区，推进证明；看到本槽检查点 (B, t) 被证明的验证者广播对它的确认

确认在下一槽开始时送达。得到超级多数确认的 (B, t) 最终确定，因此槽 t 的区块
在槽 t+1 的第一个阶段、提议之前最终确定。确认者之后的链接源都不低于 t，
跨过 t 的链接与确认一起构成 ack-surround 罚没证据。
"""

from __future__ import annotations
import logging
from typing import Dict, Mapping, Optional, Set

from ..chain.block import is_ancestor
from ..chain.checkpoint import Checkpoint
from ..chain.view import View
from ..chain.votes import VoteKind, VoteMessage, ack_vote, ffg_vote
from ..ffg.justification import supermajority
from ..forkchoice.rules import hfc
from ..forkchoice.weights import subtree_weights
from ..stake.participation import Mode
from .base import ValidatorState
from .rlmd import ProposeVoteMergeEngine

logger = logging.getLogger(__name__)

PROPOSE, HEAD_VOTE, FFG_VOTE, MERGE = 0, 1, 2, 3


def slot_head_votes(view: View, slot: int) -> Dict[int, VoteMessage]:
    """
    视图与缓冲区中槽 slot 的头投票（模棱两可的投票者排除）

    Returns:
        投票者 -> 投票
    """
    seen: Dict[int, Set[int]] = {}
    chosen: Dict[int, VoteMessage] = {}
    candidates = list(view.votes_at(slot)) + [v for v in view.buffered_votes() if v.slot == slot]
    for vote in sorted(candidates, key=VoteMessage.sort_key):
        if not vote.has_head or vote.head not in view.blocks:
            continue
        seen.setdefault(vote.voter, set()).add(vote.head)
        chosen.setdefault(vote.voter, vote)
    return {v: vote for v, vote in chosen.items() if len(seen[v]) == 1}


def supermajority_block(view: View, slot: int, balances: Mapping[int, int],
                        total: int) -> Optional[int]:
    """
    本槽头投票中得到超级多数支持的最深区块

    Returns:
        区块摘要；没有时返回 None
    """
    votes = slot_head_votes(view, slot)
    if not votes:
        return None
    weights = subtree_weights(view, votes, balances)
    strong = [d for d, w in weights.items() if supermajority(w, total)]
    if not strong:
        return None
    return max(strong, key=lambda d: (view.heights[d], d))


class SsfEngine(ProposeVoteMergeEngine):
    """
    SSF 引擎
    """
    name = "ssf"

    def fork_choice(self, st: ValidatorState, slot: int) -> int:
        return hfc(st.view, slot, self.params.window, self.sim.balances, st.latest_justified)

    def on_phase(self, slot: int, phase: int) -> None:
        if phase == PROPOSE:
            self.settle_acks(slot)
            self.propose(slot)
        elif phase == HEAD_VOTE:
            self.vote(slot)
        elif phase == FFG_VOTE:
            self.ffg_vote(slot)
        elif phase == MERGE:
            self.merge(slot)

    def build_ffg_vote(self, vid: int, slot: int) -> Optional[VoteMessage]:
        """
        快速确认后的 FFG 投票

        Returns:
            投票；弃权时返回 None
        """
        st = self.validators[vid]
        source = st.latest_justified
        confirmed = supermajority_block(st.view, slot, self.sim.balances, self.sim.total_balance())
        target = None
        if confirmed is not None and is_ancestor(st.view.blocks, source.block, confirmed):
            st.fast_confirmed = confirmed
            target = confirmed
        elif (self.params.fallback_target and st.fast_confirmed is not None
              and is_ancestor(st.view.blocks, source.block, st.fast_confirmed)):
            target = st.fast_confirmed
        if target is None:
            logger.debug("验证者 %d 在槽 %d 没有快速确认，弃权", vid, slot)
            return None
        return ffg_vote(vid, slot, source, Checkpoint(slot, target))

    def ffg_vote(self, slot: int) -> None:
        for vid in sorted(self.validators):
            if not self.sim.is_awake(vid, slot):
                continue
            if self.sim.adversary.handles_vote(vid, slot):
                continue
            vote = self.build_ffg_vote(vid, slot)
            if vote is not None:
                self.publish_vote(vote)

    def merge(self, slot: int) -> None:
        for vid in sorted(self.validators):
            st = self.validators[vid]
            mode = self.sim.mode(vid, slot)
            if mode is not Mode.OFFLINE:
                self.merge_buffer(st)
                self.process_ffg(st)
                if mode is Mode.AWAKE:
                    self.acknowledge(st, slot)
                    self.set_head(st, self.fork_choice(st, slot + 1))
                    self.emit_confirm(st)
            self.forget_proposals(st, slot)

    def acknowledge(self, st: ValidatorState, slot: int) -> None:
        """对本槽被证明的检查点广播确认"""
        if self.sim.adversary.handles_vote(st.vid, slot):
            return
        for cp in sorted(cp for cp in st.ffg.justified if cp.index == slot):
            self.publish_vote(ack_vote(st.vid, slot, cp))

    def settle_acks(self, slot: int) -> None:
        """把上一槽送达的确认并入视图并推进最终确定"""
        for vid in sorted(self.validators):
            if self.sim.mode(vid, slot) is Mode.OFFLINE:
                continue
            st = self.validators[vid]
            if st.view.accept_buffered(VoteKind.ACK):
                self.process_ffg(st)
