"""
区块与区块树

区块摘要为 (父摘要 ‖ 槽 ‖ 提议者) 规范编码上的 64 位 FNV-1a，
既确定又可比较，用于 GHOST 的“最大摘要”平局规则。
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional

from ..errors import QueryError
from ..sim.rng import MASK64, fnv1a64

GENESIS_PROPOSER = -1


def block_digest(parent: int, slot: int, proposer: int) -> int:
    """区块摘要"""
    encoded = (
        (parent & MASK64).to_bytes(8, "big")
        + (slot & MASK64).to_bytes(8, "big")
        + (proposer & MASK64).to_bytes(8, "big")
    )
    return fnv1a64(encoded)


def fmt_digest(digest: int) -> str:
    """16 位小写十六进制"""
    return f"{digest:016x}"


@dataclass(frozen=True)
class Block:
    """
    区块
    """
    digest: int     # 64 位摘要
    parent: int     # 父区块摘要（创世块指向自身）
    slot: int       # 提议槽
    proposer: int   # 提议者编号

    @property
    def is_genesis(self) -> bool:
        return self.parent == self.digest

    def __str__(self) -> str:
        return f"Block({fmt_digest(self.digest)[:8]}@{self.slot})"


def _make_genesis() -> Block:
    digest = block_digest(0, 0, GENESIS_PROPOSER)
    return Block(digest=digest, parent=digest, slot=0, proposer=GENESIS_PROPOSER)


GENESIS = _make_genesis()


def make_block(parent: Block, slot: int, proposer: int) -> Block:
    """
    在 parent 之上构造新区块

    Raises:
        ValueError: 槽号不大于父区块的槽号
    """
    if slot <= parent.slot:
        raise ValueError(f"子区块槽号 {slot} 必须大于父区块槽号 {parent.slot}")
    return Block(block_digest(parent.digest, slot, proposer), parent.digest, slot, proposer)


# ============================================================================
# 祖先关系
# ============================================================================

def iter_ancestors(blocks: Mapping[int, Block], digest: int) -> Iterator[Block]:
    """从 digest 自身开始向创世块回溯"""
    if digest not in blocks:
        raise QueryError(f"未知区块 {fmt_digest(digest)}")
    block = blocks[digest]
    while True:
        yield block
        if block.is_genesis:
            return
        if block.parent not in blocks:
            raise QueryError(f"区块 {fmt_digest(block.digest)} 的父区块不在视图中")
        block = blocks[block.parent]


def chain_of(blocks: Mapping[int, Block], digest: int) -> List[int]:
    """创世块到 digest 的摘要序列"""
    chain = [b.digest for b in iter_ancestors(blocks, digest)]
    chain.reverse()
    return chain


def height(blocks: Mapping[int, Block], digest: int) -> int:
    """到创世块的边数"""
    return sum(1 for _ in iter_ancestors(blocks, digest)) - 1


def is_ancestor(blocks: Mapping[int, Block], ancestor: int, descendant: int) -> bool:
    """ancestor 是否为 descendant 的祖先（含相等）"""
    if ancestor not in blocks:
        raise QueryError(f"未知区块 {fmt_digest(ancestor)}")
    target_slot = blocks[ancestor].slot
    for block in iter_ancestors(blocks, descendant):
        if block.digest == ancestor:
            return True
        if block.slot < target_slot:
            return False
    return False


def common_ancestor(blocks: Mapping[int, Block], a: int, b: int) -> int:
    """最近公共祖先"""
    seen = {blk.digest for blk in iter_ancestors(blocks, a)}
    for blk in iter_ancestors(blocks, b):
        if blk.digest in seen:
            return blk.digest
    raise QueryError("两个区块没有公共祖先")


class BlockStore:
    """
    全局区块登记（摘要 -> 区块）

    所有验证者视图中的区块都来自这里；分析模块也据此重建区块树。
    """

    def __init__(self, genesis: Block = GENESIS):
        self.genesis = genesis
        self.blocks: Dict[int, Block] = {genesis.digest: genesis}

    def add(self, block: Block) -> Block:
        self.blocks.setdefault(block.digest, block)
        return self.blocks[block.digest]

    def get(self, digest: int) -> Optional[Block]:
        return self.blocks.get(digest)

    def __contains__(self, digest: int) -> bool:
        return digest in self.blocks

    def __getitem__(self, digest: int) -> Block:
        try:
            return self.blocks[digest]
        except KeyError:
            raise QueryError(f"未知区块 {fmt_digest(digest)}") from None
