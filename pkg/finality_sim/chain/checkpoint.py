"""
检查点与纪元边界对

检查点是 (区块, 序号)：Gasper-lite 中序号为纪元号，SSF/3SF 中为槽号。
检查点高度即其序号。
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Mapping

from ..errors import QueryError
from ..sim.clock import SLOTS_PER_EPOCH
from .block import GENESIS, Block, fmt_digest, is_ancestor, iter_ancestors


@dataclass(frozen=True, order=True)
class Checkpoint:
    """
    检查点
    """
    index: int      # 纪元号或槽号（即高度）
    block: int      # 区块摘要

    @property
    def height(self) -> int:
        return self.index

    def __str__(self) -> str:
        return f"({fmt_digest(self.block)[:8]}, {self.index})"


GENESIS_CHECKPOINT = Checkpoint(0, GENESIS.digest)


def epoch_boundary_pair(blocks: Mapping[int, Block], tip: int, epoch: int,
                        spacing: int = SLOTS_PER_EPOCH) -> Checkpoint:
    """
    纪元边界对 (B, j)：B 为 tip 的祖先中槽号 ≤ spacing·j 的最高区块

    Args:
        blocks: 视图中的区块
        tip: 链尖摘要
        epoch: 纪元号 j
        spacing: 检查点间距 H

    Returns:
        检查点 (B, j)
    """
    limit = spacing * epoch
    for block in iter_ancestors(blocks, tip):
        if block.slot <= limit:
            return Checkpoint(epoch, block.digest)
    raise QueryError("链上不存在满足条件的祖先")  # 创世块槽号为 0，不会到达


def is_conflicting(blocks: Mapping[int, Block], a: Checkpoint, b: Checkpoint) -> bool:
    """
    两个检查点是否位于不同分支

    Raises:
        QueryError: 任一区块不在视图中
    """
    for cp in (a, b):
        if cp.block not in blocks:
            raise QueryError(f"检查点 {cp} 的区块不在视图中")
    return not (is_ancestor(blocks, a.block, b.block) or is_ancestor(blocks, b.block, a.block))
