"""
区块树层

- 区块、摘要、祖先关系
- 检查点
- 投票与最新投票
- 验证者视图（缓冲、合并、采纳）
"""

from .block import (
    Block, BlockStore, GENESIS, GENESIS_PROPOSER, block_digest, make_block, fmt_digest,
    iter_ancestors, chain_of, height, is_ancestor, common_ancestor,
)
from .checkpoint import Checkpoint, GENESIS_CHECKPOINT, epoch_boundary_pair, is_conflicting
from .votes import (
    VoteKind, VoteMessage, head_vote, ffg_vote, combined_vote, ack_vote,
    latest_votes, find_equivocations,
)
from .view import View, merge, adopt_proposal_view

__all__ = [
    # Block
    "Block", "BlockStore", "GENESIS", "GENESIS_PROPOSER", "block_digest", "make_block",
    "fmt_digest", "iter_ancestors", "chain_of", "height", "is_ancestor", "common_ancestor",
    # Checkpoint
    "Checkpoint", "GENESIS_CHECKPOINT", "epoch_boundary_pair", "is_conflicting",
    # Votes
    "VoteKind", "VoteMessage", "head_vote", "ffg_vote", "combined_vote", "ack_vote",
    "latest_votes", "find_equivocations",
    # View
    "View", "merge", "adopt_proposal_view",
]
