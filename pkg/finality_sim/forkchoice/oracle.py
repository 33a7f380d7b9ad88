"""
暴力分叉选择预言机

逐个区块沿祖先链朴素重算子树权重，用于在穷举的小树与随机实例上
对照 GHOST 族规则。
"""

from __future__ import annotations
import itertools
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from ..chain.block import GENESIS, Block, is_ancestor, make_block
from ..chain.view import View
from ..chain.votes import VoteMessage, head_vote
from ..errors import QueryError
from ..sim.rng import SplitMix64


def oracle_weights(view: View, votes: Mapping[int, VoteMessage],
                   balances: Mapping[int, int]) -> Dict[int, int]:
    """每个区块独立重算：指向其后代（含自身）的投票余额之和"""
    result = {}
    for digest in view.blocks:
        total = 0
        for voter, vote in votes.items():
            if vote.head in view.blocks and is_ancestor(view.blocks, digest, vote.head):
                total += balances.get(voter, 0)
        result[digest] = total
    return result


def oracle_head(view: View, root: int, votes: Mapping[int, VoteMessage],
                balances: Mapping[int, int]) -> int:
    """
    朴素 GHOST：每一步都重新计算全部权重

    Raises:
        QueryError: root 不在视图中
    """
    if root not in view.blocks:
        raise QueryError(f"根区块 {root:016x} 不在视图中")
    head = root
    while True:
        kids = [d for d, b in view.blocks.items() if b.parent == head and not b.is_genesis]
        if not kids:
            return head
        weights = oracle_weights(view, votes, balances)
        head = max(kids, key=lambda c: (weights[c], c))


# ============================================================================
# 实例生成
# ============================================================================

def view_from_parents(parents: Sequence[int]) -> Tuple[View, List[int]]:
    """
    按父索引数组建树：第 i 个区块（i ≥ 1）的父区块是第 parents[i-1] 个，第 0 个为创世块

    Returns:
        (视图, 按索引排列的摘要)
    """
    view = View()
    digests = [GENESIS.digest]
    blocks: List[Block] = [GENESIS]
    for i, p in enumerate(parents, start=1):
        block = make_block(blocks[p], slot=i, proposer=i)
        blocks.append(block)
        digests.append(block.digest)
        view.accept_block(block)
    return view, digests


def enumerate_trees(max_blocks: int) -> Iterator[Tuple[View, List[int]]]:
    """枚举区块数（含创世块）不超过 max_blocks 的所有递增标号树"""
    for size in range(1, max_blocks + 1):
        choices = [range(i) for i in range(1, size)]
        for parents in itertools.product(*choices):
            yield view_from_parents(parents)


def enumerate_vote_assignments(digests: Sequence[int], voters: int,
                               slot: int = 0) -> Iterator[Dict[int, VoteMessage]]:
    """每个投票者选一个区块或弃权，枚举全部组合"""
    options: List[Optional[int]] = [None] + list(digests)
    for pick in itertools.product(options, repeat=voters):
        yield {v: head_vote(v, slot, d) for v, d in enumerate(pick) if d is not None}


def random_instance(seed: int, blocks: int, voters: int,
                    max_stake: int = 64) -> Tuple[View, Dict[int, VoteMessage], Dict[int, int]]:
    """随机树、随机最新投票、随机余额"""
    rng = SplitMix64(seed)
    parents = [rng.below(i) for i in range(1, blocks)]
    view, digests = view_from_parents(parents)
    votes = {}
    for v in range(voters):
        if rng.below(4):
            votes[v] = head_vote(v, 0, digests[rng.below(len(digests))])
    balances = {v: rng.between(1, max_stake) for v in range(voters)}
    return view, votes, balances
