"""
子树权重

一次自底向上的遍历得到整个 WeightMap：先把每张最新投票的余额记到其目标区块，
再按槽号从大到小把每个区块的权重累加到父区块。
"""

from __future__ import annotations
from typing import Dict, Mapping

from ..chain.view import View
from ..chain.votes import VoteMessage
from ..errors import QueryError

WeightMap = Dict[int, int]


def subtree_weights(view: View, votes: Mapping[int, VoteMessage],
                    balances: Mapping[int, int]) -> WeightMap:
    """
    计算视图中每个区块的累计子树权重

    Args:
        view: 验证者视图
        votes: 投票者 -> 最新头投票
        balances: 投票者 -> 权重

    Returns:
        区块摘要 -> 权重
    """
    weights: WeightMap = {d: 0 for d in view.blocks}
    for voter, vote in votes.items():
        if vote.head in weights:
            weights[vote.head] += balances.get(voter, 0)
    order = sorted(view.blocks.values(), key=lambda b: (b.slot, b.digest), reverse=True)
    for block in order:
        if not block.is_genesis:
            weights[block.parent] += weights[block.digest]
    return weights


def weight(view: View, block: int, votes: Mapping[int, VoteMessage],
           balances: Mapping[int, int]) -> int:
    """
    单个区块的权重：最新投票指向该区块或其后代的投票者余额之和

    Raises:
        QueryError: 区块不在视图中
    """
    if block not in view.blocks:
        raise QueryError(f"区块 {block:016x} 不在视图中")
    return subtree_weights(view, votes, balances)[block]
