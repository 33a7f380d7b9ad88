"""
罚没条件检测

- double：两条不同链接的目标高度相同
- surround：h(s1) < h(s2) < h(t2) < h(t1)（任一顺序）
- 3sf-extra：slot(s1) < slot(s2) 且 h(t2) < h(t1)（仅 3SF）
- ack-surround：确认了高度 h 的检查点，又投出 h(s) < h < h(t) 的链接
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping

from ..chain.block import Block
from ..chain.votes import VoteMessage
from .justification import Link

logger = logging.getLogger(__name__)


class SlashingCondition(Enum):
    """罚没条件"""
    DOUBLE = "double"
    SURROUND = "surround"
    THREE_SF_EXTRA = "3sf-extra"
    ACK_SURROUND = "ack-surround"


@dataclass(frozen=True)
class SlashingRecord:
    """
    罚没记录
    """
    validator: int                  # 被罚没的验证者
    condition: SlashingCondition    # 满足的条件
    first: VoteMessage              # 违规投票之一
    second: VoteMessage             # 违规投票之二

    def __str__(self) -> str:
        return (f"验证者 {self.validator} {self.condition.value}: "
                f"{describe_vote(self.first)} / {describe_vote(self.second)}")


def describe_vote(vote: VoteMessage) -> str:
    if vote.is_ack:
        return f"ack {vote.target}"
    return f"{vote.source}→{vote.target}"


def is_double(a: Link, b: Link) -> bool:
    return a != b and a[1].height == b[1].height


def surrounds(outer: Link, inner: Link) -> bool:
    """outer 包围 inner"""
    return outer[0].height < inner[0].height < inner[1].height < outer[1].height


def jumps_over(link: Link, height: int) -> bool:
    """链接跨过高度 height：h(s) < height < h(t)"""
    return link[0].height < height < link[1].height


def three_sf_extra(a: Link, b: Link, blocks: Mapping[int, Block]) -> bool:
    """slot(s_a) < slot(s_b) 且 h(t_b) < h(t_a)"""
    slot_a = blocks[a[0].block].slot
    slot_b = blocks[b[0].block].slot
    return slot_a < slot_b and b[1].height < a[1].height


def detect_slashing(votes: Iterable[VoteMessage], blocks: Mapping[int, Block],
                    three_sf: bool = False) -> List[SlashingRecord]:
    """
    检测全部罚没记录，每个满足的条件单独记录

    Args:
        votes: 全部投票（只考虑带 FFG 链接的投票与确认）
        blocks: 区块表（3sf-extra 需要源区块的槽号）
        three_sf: 是否启用 3SF 附加条件

    Returns:
        按 (验证者, 条件) 排序的罚没记录
    """
    by_voter: Dict[int, Dict[Link, VoteMessage]] = {}
    for v in sorted((v for v in votes if v.has_ffg), key=VoteMessage.sort_key):
        by_voter.setdefault(v.voter, {}).setdefault(v.link, v)
    acks: Dict[int, List[VoteMessage]] = {}
    for v in sorted((v for v in votes if v.is_ack and v.target is not None), key=VoteMessage.sort_key):
        acks.setdefault(v.voter, []).append(v)

    records: List[SlashingRecord] = []
    for voter in sorted(set(by_voter) | set(acks)):
        links = sorted(by_voter.get(voter, {}).items(), key=lambda kv: kv[1].sort_key())
        for i, (la, va) in enumerate(links):
            for lb, vb in links[i + 1:]:
                if is_double(la, lb):
                    records.append(SlashingRecord(voter, SlashingCondition.DOUBLE, va, vb))
                if surrounds(la, lb) or surrounds(lb, la):
                    records.append(SlashingRecord(voter, SlashingCondition.SURROUND, va, vb))
                if three_sf and (la[0].block in blocks and lb[0].block in blocks) and (
                        three_sf_extra(la, lb, blocks) or three_sf_extra(lb, la, blocks)):
                    records.append(SlashingRecord(voter, SlashingCondition.THREE_SF_EXTRA, va, vb))
        for ack in acks.get(voter, ()):
            for link, vote in links:
                if jumps_over(link, ack.target.height):
                    records.append(SlashingRecord(voter, SlashingCondition.ACK_SURROUND, ack, vote))
    for rec in records:
        logger.info("罚没: %s", rec)
    return records


def slashable_validators(records: Iterable[SlashingRecord]) -> List[int]:
    return sorted({r.validator for r in records})
