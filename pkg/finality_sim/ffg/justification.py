"""
Casper FFG 证明与最终确定

说明：
- 超级多数：3·支持余额 ≥ 2·总余额（整数精确比较）
- 证明：源已被证明的超级多数链接使目标被证明，迭代到不动点
- 最终确定规则按协议族区分（CASPER / SAME_SLOT / PIPELINED）
- SAME_SLOT 另需超级多数对同槽被证明检查点的确认（ack），确认者此后不得投出跨过该高度的链接
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from ..chain.block import Block, is_ancestor
from ..chain.checkpoint import GENESIS_CHECKPOINT, Checkpoint
from ..chain.votes import VoteMessage
from ..errors import MalformedLinkError

logger = logging.getLogger(__name__)

Link = Tuple[Checkpoint, Checkpoint]


class FinalityRule(Enum):
    """最终确定规则"""
    CASPER = "casper"          # s→t 超级多数且 h(t) = h(s)+1 时 s 最终确定
    SAME_SLOT = "same-slot"    # CASPER，且得到超级多数确认的被证明检查点最终确定
    PIPELINED = "pipelined"    # C→C1→C2 连续超级多数链接时 C 最终确定


def supermajority(stake: int, total: int) -> bool:
    return 3 * stake >= 2 * total


def supermajority_link(votes: Iterable[VoteMessage], balances: Mapping[int, int],
                       total_stake: int) -> bool:
    """
    同一链接上的投票是否构成超级多数

    Raises:
        ValueError: 投票不共享同一链接
    """
    links = set()
    voters = set()
    for v in votes:
        links.add(v.link)
        voters.add(v.voter)
    if len(links) > 1:
        raise ValueError("投票必须共享同一 (source, target) 链接")
    return supermajority(sum(balances.get(v, 0) for v in voters), total_stake)


def validate_link(blocks: Mapping[int, Block], source: Checkpoint, target: Checkpoint) -> None:
    """
    检查链接格式

    Raises:
        MalformedLinkError: 高度不递增，或源区块不是目标区块的祖先
    """
    if target.height <= source.height:
        raise MalformedLinkError(f"链接 {source}→{target} 的高度不递增")
    if source.block in blocks and target.block in blocks:
        if not is_ancestor(blocks, source.block, target.block):
            raise MalformedLinkError(f"链接 {source}→{target} 的两端互相冲突")


@dataclass
class JustificationState:
    """
    证明状态
    """
    rule: FinalityRule = FinalityRule.CASPER
    justified: Set[Checkpoint] = field(default_factory=lambda: {GENESIS_CHECKPOINT})
    finalized: Set[Checkpoint] = field(default_factory=lambda: {GENESIS_CHECKPOINT})
    supporters: Dict[Link, Set[int]] = field(default_factory=dict)   # 链接 -> 投票者
    acks: Dict[Checkpoint, Set[int]] = field(default_factory=dict)      # 检查点 -> 确认者

    @property
    def latest_justified(self) -> Checkpoint:
        return max(self.justified)

    @property
    def latest_finalized(self) -> Checkpoint:
        return max(self.finalized)

    def add_vote(self, vote: VoteMessage, blocks: Optional[Mapping[int, Block]] = None) -> bool:
        """
        记录一张 FFG 投票或确认

        Returns:
            是否被接受（格式错误的链接被拒绝）
        """
        if vote.is_ack and vote.target is not None:
            self.acks.setdefault(vote.target, set()).add(vote.voter)
            return True
        if not vote.has_ffg:
            return False
        source, target = vote.link
        if blocks is not None:
            try:
                validate_link(blocks, source, target)
            except MalformedLinkError as exc:
                logger.warning("拒绝投票者 %d 的链接: %s", vote.voter, exc)
                return False
        elif target.height <= source.height:
            return False
        self.supporters.setdefault((source, target), set()).add(vote.voter)
        return True

    def link_stake(self, link: Link, balances: Mapping[int, int]) -> int:
        return sum(balances.get(v, 0) for v in self.supporters.get(link, ()))

    def supermajority_links(self, balances: Mapping[int, int], total: int) -> List[Link]:
        return sorted(link for link in self.supporters
                      if supermajority(self.link_stake(link, balances), total))

    def acknowledged(self, balances: Mapping[int, int], total: int) -> List[Checkpoint]:
        """得到超级多数确认的检查点"""
        return sorted(cp for cp, voters in self.acks.items()
                      if supermajority(sum(balances.get(v, 0) for v in voters), total))

    def copy(self) -> "JustificationState":
        return JustificationState(
            rule=self.rule,
            justified=set(self.justified),
            finalized=set(self.finalized),
            supporters={k: set(v) for k, v in self.supporters.items()},
            acks={k: set(v) for k, v in self.acks.items()},
        )


def update_justification(state: JustificationState, balances: Mapping[int, int],
                         total: int, new_votes: Iterable[VoteMessage] = (),
                         blocks: Optional[Mapping[int, Block]] = None) -> List[Checkpoint]:
    """
    记录新投票并把证明集合推进到不动点（原地修改 state）

    Args:
        state: 证明状态
        balances: 投票者 -> 余额
        total: 总余额
        new_votes: 新到达的 FFG 投票与确认
        blocks: 用于检查链接格式的区块

    Returns:
        新被证明的检查点（按检查点排序）
    """
    for vote in new_votes:
        state.add_vote(vote, blocks)
    strong = state.supermajority_links(balances, total)
    newly: List[Checkpoint] = []
    changed = True
    while changed:
        changed = False
        for source, target in strong:
            if source in state.justified and target not in state.justified:
                state.justified.add(target)
                newly.append(target)
                changed = True
    for cp in sorted(newly):
        logger.debug("检查点 %s 被证明", cp)
    return sorted(newly)


def update_finalization(state: JustificationState, balances: Mapping[int, int],
                        total: int) -> List[Checkpoint]:
    """
    按 state.rule 推进最终确定集合（原地修改 state）

    Returns:
        新最终确定的检查点
    """
    strong = [(s, t) for s, t in state.supermajority_links(balances, total)
              if s in state.justified and t in state.justified]
    candidates: Set[Checkpoint] = set()
    if state.rule in (FinalityRule.CASPER, FinalityRule.SAME_SLOT):
        candidates.update(s for s, t in strong if t.height == s.height + 1)
    if state.rule is FinalityRule.SAME_SLOT:
        candidates.update(cp for cp in state.acknowledged(balances, total) if cp in state.justified)
    if state.rule is FinalityRule.PIPELINED:
        by_source: Dict[Checkpoint, List[Checkpoint]] = {}
        for s, t in strong:
            by_source.setdefault(s, []).append(t)
        for c, firsts in by_source.items():
            for c1 in firsts:
                if c1.height != c.height + 1:
                    continue
                if any(c2.height == c1.height + 1 for c2 in by_source.get(c1, ())):
                    candidates.add(c)
    newly = sorted(candidates - state.finalized)
    state.finalized.update(newly)
    for cp in newly:
        logger.debug("检查点 %s 最终确定", cp)
    return newly
