"""
GHOST 族分叉选择规则

规则：
1. ghost：从给定根贪心下降，选子树权重最大的子区块，平局取较大摘要
2. lmd：根为创世块，投票不过期
3. hlmd：根为最新被证明检查点的区块（只考虑其后代）
4. rlmd：根为创世块，只用 [slot-eta, slot-1] 内的投票
5. hfc：rlmd 式投票窗口，根为最新被证明检查点的区块
6. longest：最深叶子，平局取较大摘要
"""

from __future__ import annotations
import logging
import math
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from ..chain.checkpoint import Checkpoint
from ..chain.view import View
from ..chain.votes import Eta, VoteMessage, latest_votes
from ..errors import QueryError
from .weights import subtree_weights

logger = logging.getLogger(__name__)


def ghost(view: View, root: int, votes: Mapping[int, VoteMessage],
          balances: Mapping[int, int]) -> int:
    """
    从 root 贪心下降到叶子

    Args:
        view: 验证者视图
        root: 根区块摘要
        votes: 投票者 -> 最新头投票
        balances: 投票者 -> 权重

    Returns:
        叶子区块摘要

    Raises:
        QueryError: root 不在视图中
    """
    if root not in view.blocks:
        raise QueryError(f"根区块 {root:016x} 不在视图中")
    weights = subtree_weights(view, votes, balances)
    head = root
    while view.children.get(head):
        head = max(view.children[head], key=lambda c: (weights[c], c))
    return head


def lmd_ghost(view: View, slot: int, balances: Mapping[int, int]) -> int:
    return ghost(view, view.genesis, latest_votes(view, slot, math.inf), balances)


def hlmd_ghost(view: View, justified: Checkpoint, slot: int,
               balances: Mapping[int, int]) -> int:
    """以最新被证明检查点的区块为根；与之冲突的分支不会被返回"""
    root = justified.block if justified.block in view.blocks else view.genesis
    return ghost(view, root, latest_votes(view, slot, math.inf), balances)


def rlmd_ghost(view: View, slot: int, eta: Eta, balances: Mapping[int, int]) -> int:
    return ghost(view, view.genesis, latest_votes(view, slot, eta), balances)


def hfc(view: View, slot: int, eta: Eta, balances: Mapping[int, int],
        justified: Optional[Checkpoint] = None) -> int:
    """混合分叉选择：从最新被证明区块出发的 rlmd"""
    root = view.genesis
    if justified is not None and justified.block in view.blocks:
        root = justified.block
    return ghost(view, root, latest_votes(view, slot, eta), balances)


def block_depths(view: View) -> Dict[int, int]:
    """广度优先得到每个区块到创世块的深度"""
    depths = {view.genesis: 0}
    queue = deque([view.genesis])
    while queue:
        d = queue.popleft()
        for c in view.children.get(d, ()):
            depths[c] = depths[d] + 1
            queue.append(c)
    return depths


def longest_chain(view: View) -> int:
    depths = block_depths(view)
    return max(depths, key=lambda d: (depths[d], d))


# ============================================================================
# 规则注册表
# ============================================================================

@dataclass
class ForkChoiceInput:
    """
    分叉选择的输入
    """
    view: View
    slot: int
    balances: Mapping[int, int] = field(default_factory=dict)
    eta: Eta = math.inf
    justified: Optional[Checkpoint] = None


class ForkChoiceRule(ABC):
    """
    分叉选择规则基类
    """

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        pass

    @abstractmethod
    def head(self, ctx: ForkChoiceInput) -> int:
        """返回链头摘要"""
        pass


class LmdRule(ForkChoiceRule):
    name = "lmd"
    description = "LMD-GHOST（投票不过期，根为创世块）"

    def head(self, ctx: ForkChoiceInput) -> int:
        return lmd_ghost(ctx.view, ctx.slot, ctx.balances)


class GhostRule(LmdRule):
    name = "ghost"
    description = "GHOST（所有最新投票，根为创世块）"


class HlmdRule(ForkChoiceRule):
    name = "hlmd"
    description = "HLMD-GHOST（根为最新被证明检查点）"

    def head(self, ctx: ForkChoiceInput) -> int:
        if ctx.justified is None:
            return lmd_ghost(ctx.view, ctx.slot, ctx.balances)
        return hlmd_ghost(ctx.view, ctx.justified, ctx.slot, ctx.balances)


class RlmdRule(ForkChoiceRule):
    name = "rlmd"
    description = "RLMD-GHOST(η)（只用最近 η 个槽的投票）"

    def head(self, ctx: ForkChoiceInput) -> int:
        return rlmd_ghost(ctx.view, ctx.slot, ctx.eta, ctx.balances)


class HfcRule(ForkChoiceRule):
    name = "hfc"
    description = "混合分叉选择（最新被证明区块 + η 窗口）"

    def head(self, ctx: ForkChoiceInput) -> int:
        return hfc(ctx.view, ctx.slot, ctx.eta, ctx.balances, ctx.justified)


class LongestChainRule(ForkChoiceRule):
    name = "longest"
    description = "最长链（基线）"

    def head(self, ctx: ForkChoiceInput) -> int:
        return longest_chain(ctx.view)


FORK_CHOICE_RULES: Dict[str, ForkChoiceRule] = {
    rule.name: rule for rule in (
        GhostRule(), LmdRule(), HlmdRule(), RlmdRule(), HfcRule(), LongestChainRule(),
    )
}


def get_rule(name: str) -> ForkChoiceRule:
    """
    按名称获取规则

    Raises:
        ValueError: 未知规则
    """
    try:
        return FORK_CHOICE_RULES[name]
    except KeyError:
        raise ValueError(f"未知分叉选择规则: {name}，可选: {', '.join(list_rules())}") from None


def list_rules() -> List[str]:
    return list(FORK_CHOICE_RULES.keys())
