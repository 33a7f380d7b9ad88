"""
投票消息与最新投票

说明：
- 头投票：支持某区块为链头
- FFG 投票：源检查点 -> 目标检查点的链接
- 组合投票：同时携带二者（Gasper-lite 证明、3SF 投票）
- 确认：SSF 中验证者看到本槽检查点被证明后对它的确认，只有目标
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Set, Tuple, Union

from .checkpoint import Checkpoint

if TYPE_CHECKING:
    from .view import View

logger = logging.getLogger(__name__)

Eta = Union[int, float]


class VoteKind(Enum):
    """投票类型"""
    HEAD = "head"
    FFG = "ffg"
    COMBINED = "combined"
    ACK = "ack"


@dataclass(frozen=True)
class VoteMessage:
    """
    投票消息
    """
    kind: VoteKind
    voter: int                              # 投票者
    slot: int                               # 投票槽
    head: Optional[int] = None              # 头投票目标区块
    source: Optional[Checkpoint] = None     # FFG 源
    target: Optional[Checkpoint] = None     # FFG 目标

    @property
    def has_head(self) -> bool:
        return self.head is not None

    @property
    def has_ffg(self) -> bool:
        return self.source is not None and self.target is not None

    @property
    def is_ack(self) -> bool:
        return self.kind is VoteKind.ACK

    @property
    def link(self) -> Tuple[Checkpoint, Checkpoint]:
        if not self.has_ffg:
            raise ValueError("该投票不含 FFG 链接")
        return (self.source, self.target)  # type: ignore[return-value]

    def referenced_blocks(self) -> List[int]:
        """接受该投票前视图中必须已有的区块"""
        refs = []
        if self.head is not None:
            refs.append(self.head)
        if self.source is not None:
            refs.append(self.source.block)
        if self.target is not None:
            refs.append(self.target.block)
        return refs

    def sort_key(self) -> tuple:
        src = (self.source.index, self.source.block) if self.source else (-1, -1)
        tgt = (self.target.index, self.target.block) if self.target else (-1, -1)
        return (self.slot, self.voter, self.kind.value, self.head if self.head is not None else -1, src, tgt)


def head_vote(voter: int, slot: int, head: int) -> VoteMessage:
    return VoteMessage(VoteKind.HEAD, voter, slot, head=head)


def ffg_vote(voter: int, slot: int, source: Checkpoint, target: Checkpoint) -> VoteMessage:
    return VoteMessage(VoteKind.FFG, voter, slot, source=source, target=target)


def combined_vote(voter: int, slot: int, head: int,
                  source: Checkpoint, target: Checkpoint) -> VoteMessage:
    return VoteMessage(VoteKind.COMBINED, voter, slot, head=head, source=source, target=target)


def ack_vote(voter: int, slot: int, target: Checkpoint) -> VoteMessage:
    return VoteMessage(VoteKind.ACK, voter, slot, target=target)


# ============================================================================
# 最新投票
# ============================================================================

def _window_low(slot: int, eta: Eta) -> float:
    return -math.inf if eta == math.inf else slot - eta


def find_equivocations(votes: Iterable[VoteMessage]) -> Set[Tuple[int, int]]:
    """
    头投票模棱两可：同一 (投票者, 槽) 支持了不同区块

    Returns:
        {(投票者, 槽)}
    """
    heads: Dict[Tuple[int, int], Set[int]] = {}
    for v in votes:
        if v.has_head:
            heads.setdefault((v.voter, v.slot), set()).add(v.head)  # type: ignore[arg-type]
    return {key for key, targets in heads.items() if len(targets) > 1}


def latest_votes(view: "View", slot: int, eta: Eta) -> Dict[int, VoteMessage]:
    """
    每个投票者在窗口 [slot-eta, slot-1] 内最新的头投票

    窗口内任一槽有模棱两可头投票的投票者整体排除。

    Args:
        view: 验证者视图
        slot: 当前槽
        eta: 过期窗口（math.inf 表示不过期）

    Returns:
        投票者 -> 投票
    """
    low = _window_low(slot, eta)
    result: Dict[int, VoteMessage] = {}
    for voter in sorted(view.by_voter):
        per_slot = view.by_voter[voter]
        window = [s for s, vs in per_slot.items()
                  if low <= s <= slot - 1 and any(v.has_head for v in vs)]
        if not window:
            continue
        if any(len({v.head for v in per_slot[s] if v.has_head}) > 1 for s in window):
            logger.debug("投票者 %d 在槽 %d 的窗口内模棱两可，排除", voter, slot)
            continue
        latest = max(window)
        result[voter] = min((v for v in per_slot[latest] if v.has_head), key=VoteMessage.sort_key)
    return result
