"""
验证者视图

视图 = 已接受的区块 + 已接受的投票 + 缓冲区。
消息先进入缓冲区；合并时只接受祖先关系完整的消息（先区块按槽号，后投票）。
"""

from __future__ import annotations
import copy
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Set, Tuple, Union

from .block import GENESIS, Block
from .votes import VoteKind, VoteMessage

Message = Union[Block, VoteMessage]


def _key(msg: Message) -> Hashable:
    if isinstance(msg, Block):
        return ("block", msg.digest)
    return msg


class View:
    """
    单个验证者的本地视图
    """

    def __init__(self, genesis: Block = GENESIS):
        self.genesis = genesis.digest
        self.blocks: Dict[int, Block] = {genesis.digest: genesis}
        self.children: Dict[int, List[int]] = {genesis.digest: []}
        self.heights: Dict[int, int] = {genesis.digest: 0}
        self.votes: Set[VoteMessage] = set()
        self.by_voter: Dict[int, Dict[int, List[VoteMessage]]] = {}
        self.buffer: Dict[Hashable, Message] = {}

    # ------------------------------------------------------------------
    # 接受
    # ------------------------------------------------------------------

    def has_block(self, digest: int) -> bool:
        return digest in self.blocks

    def accept_block(self, block: Block) -> bool:
        """父区块已在视图中时接受区块"""
        if block.digest in self.blocks:
            return True
        if block.parent not in self.blocks:
            return False
        self.blocks[block.digest] = block
        self.children.setdefault(block.digest, [])
        self.heights[block.digest] = self.heights[block.parent] + 1
        self.children[block.parent].append(block.digest)
        return True

    def accept_vote(self, vote: VoteMessage) -> bool:
        """投票引用的区块都在视图中时接受投票"""
        if vote in self.votes:
            return True
        if any(d not in self.blocks for d in vote.referenced_blocks()):
            return False
        self.votes.add(vote)
        self.by_voter.setdefault(vote.voter, {}).setdefault(vote.slot, []).append(vote)
        return True

    def receive(self, msg: Message) -> None:
        """放入缓冲区（已接受的消息忽略）"""
        if isinstance(msg, Block) and msg.digest in self.blocks:
            return
        if isinstance(msg, VoteMessage) and msg in self.votes:
            return
        self.buffer.setdefault(_key(msg), msg)

    def receive_now(self, msg: Message) -> bool:
        """立即尝试接受，失败时进入缓冲区"""
        ok = self.accept_block(msg) if isinstance(msg, Block) else self.accept_vote(msg)
        if not ok:
            self.buffer.setdefault(_key(msg), msg)
        else:
            self._settle()
        return ok

    def merge_buffer(self) -> int:
        """
        把缓冲区中可解析的消息并入视图

        Returns:
            被接受的消息数
        """
        moved = 0
        progress = True
        while progress and self.buffer:
            progress = False
            pending_blocks = sorted((m for m in self.buffer.values() if isinstance(m, Block)),
                                    key=lambda b: (b.slot, b.digest))
            for block in pending_blocks:
                if self.accept_block(block):
                    del self.buffer[_key(block)]
                    moved += 1
                    progress = True
            pending_votes = sorted((m for m in self.buffer.values() if isinstance(m, VoteMessage)),
                                   key=VoteMessage.sort_key)
            for vote in pending_votes:
                if self.accept_vote(vote):
                    del self.buffer[_key(vote)]
                    moved += 1
                    progress = True
        return moved

    def accept_buffered(self, kind: VoteKind) -> int:
        """
        只把缓冲区中某一类投票并入视图，其余消息留在缓冲区

        Returns:
            被接受的投票数
        """
        moved = 0
        pending = sorted((m for m in self.buffer.values()
                          if isinstance(m, VoteMessage) and m.kind is kind),
                         key=VoteMessage.sort_key)
        for vote in pending:
            if self.accept_vote(vote):
                del self.buffer[_key(vote)]
                moved += 1
        return moved

    def _settle(self) -> None:
        """接受新消息后，缓冲区中可能有依赖它的消息"""
        if self.buffer:
            self.merge_buffer()

    def adopt(self, blocks: Iterable[Block], votes: Iterable[VoteMessage]) -> int:
        """
        采纳提议者的视图（并集）

        Returns:
            新接受的消息数
        """
        before = len(self.blocks) + len(self.votes)
        fresh_blocks = [b for b in blocks if b.digest not in self.blocks]
        fresh_votes = [v for v in votes if v not in self.votes]
        for block in sorted(fresh_blocks, key=lambda b: (b.slot, b.digest)):
            if not self.accept_block(block):
                self.buffer.setdefault(_key(block), block)
        for vote in sorted(fresh_votes, key=VoteMessage.sort_key):
            if not self.accept_vote(vote):
                self.buffer.setdefault(_key(vote), vote)
        for key in [k for k, m in self.buffer.items()
                    if (isinstance(m, Block) and m.digest in self.blocks)
                    or (isinstance(m, VoteMessage) and m in self.votes)]:
            del self.buffer[key]
        return len(self.blocks) + len(self.votes) - before

    # ------------------------------------------------------------------
    # 查询
    # ------------------------------------------------------------------

    def snapshot(self) -> Tuple[FrozenSet[Block], FrozenSet[VoteMessage]]:
        return frozenset(self.blocks.values()), frozenset(self.votes)

    def buffered_votes(self) -> Iterator[VoteMessage]:
        return (m for m in self.buffer.values() if isinstance(m, VoteMessage))

    def votes_at(self, slot: int) -> List[VoteMessage]:
        """某槽的全部已接受投票"""
        found = []
        for per_slot in self.by_voter.values():
            found.extend(per_slot.get(slot, ()))
        return found

    def ffg_votes(self) -> List[VoteMessage]:
        return [v for v in self.votes if v.has_ffg]

    def copy(self) -> "View":
        return copy.deepcopy(self)

    def __repr__(self) -> str:
        return f"View(blocks={len(self.blocks)}, votes={len(self.votes)}, buffered={len(self.buffer)})"


# ============================================================================
# 便捷函数
# ============================================================================

def merge(view: View) -> View:
    """返回合并缓冲区后的新视图，原视图不变"""
    merged = view.copy()
    merged.merge_buffer()
    return merged


def adopt_proposal_view(view: View, proposed: View) -> View:
    """返回采纳提议视图后的新视图，原视图不变"""
    adopted = view.copy()
    blocks, votes = proposed.snapshot()
    adopted.adopt(blocks, votes)
    return adopted
