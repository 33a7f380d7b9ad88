"""
重组攻击

- ExAnteTwoReorg：四步走的事前 2 重组（扣留 → 平衡分裂 → 发布潜伏投票 → 下一个提议者接在被扣留区块上）
- Withhold：扣留区块与投票 k 个槽后一并发布
- KReorg：带脚本委员会的 k 重组，2k−1 个受控验证者恰好足够
- DelayControl：π 个槽的异步窗口配合提前两个槽扣留的兄弟区块
"""

from __future__ import annotations
import logging
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..chain.block import chain_of, fmt_digest, is_ancestor
from ..errors import ScriptError
from ..sim.clock import slot_start
from ..sim.network import DelayPolicy, MaxDelay, NetworkConfig
from .strategies import PROPOSE_PHASE, VOTE_PHASE, AttackOutcome, AttackStrategy, BalancingAttack

logger = logging.getLogger(__name__)

MAX_DELAY = MaxDelay()


class ExAnteTwoReorg(BalancingAttack):
    """
    事前 2 重组

    记 n+1 为攻击槽：
    1. n+1 的受控提议者私下出块 A，受控委员会成员私下投给 A
    2. n+2 投票截止前一刻把 A 与扣留的投票交给一半委员会，其余只在投票后收到 A；
       第二个受控验证者私下投给 A
    3. n+3 开始时发布全部扣留投票，A 分支变重
    4. n+4 的提议者接在 A 上，n+2、n+3 的区块被孤立
    """
    name = "ex-ante-reorg"

    def plan(self) -> None:
        super().plan()
        s = self.slot
        self.vote_window = (s, s + 2)
        for t in (s + 1, s + 2, s + 3):
            self.excluded[t] = self.controlled
        self.at(s + 1, VOTE_PHASE, self.second_vote)
        self.at(s + 2, PROPOSE_PHASE, self.release_withheld)

    def scripted_committees(self) -> Dict[int, Tuple[int, ...]]:
        s = self.slot
        honest = self.honest_pool(6, s + 1)
        plan = {s: (self.order[0],) + self.order[2:]}
        second = tuple(honest[:3])
        if len(self.order) > 1:
            second += (self.order[1],)
        plan[s + 1] = second
        plan[s + 2] = tuple(honest[3:6])
        return plan

    def split_release(self) -> None:
        super().split_release()
        if self.scripted and self.early:
            self.excluded[self.slot + 2] = self.controlled | frozenset(self.early)

    def second_vote(self) -> None:
        if self.block is None or len(self.order) < 2:
            return
        a1 = self.order[1]
        if a1 in self.voters_at(self.slot + 1):
            self.vote_privately(a1, self.slot + 1, self.block.digest)

    def release_withheld(self) -> None:
        logger.info("%s: 发布 %d 张潜伏投票", self.name, len(self.withheld))
        self.release(self.withheld)

    def evaluate(self) -> AttackOutcome:
        s = self.slot
        note = ""
        if self.block is not None:
            blocks = self.sim.store.blocks
            successors = [b for b in blocks.values()
                          if b.slot == s + 3 and self.sim.registry.is_honest(b.proposer)]
            if successors:
                extends = all(is_ancestor(blocks, self.block.digest, b.digest) for b in successors)
                note = f"槽 {s + 3} 的区块{'接在' if extends else '没有接在'}被扣留区块上"
        return self.reorg_outcome(s + 1, s + 2, needed=2, note=note)


class Withhold(AttackStrategy):
    """
    扣留：攻击槽的区块与投票扣留 k 个槽，在槽 s+k 的投票截止前一刻发布给全体
    """
    name = "withhold"

    def plan(self) -> None:
        s, k = self.slot, self.k
        if self.scripted:
            self.forced[s] = self.leader
        self.taken_proposals.add((self.leader, s))
        self.vote_window = (s, s + k)
        self.at(s, PROPOSE_PHASE, self.withhold_block)
        self.at(s, VOTE_PHASE, self.withhold_votes)
        self.at(s + k, PROPOSE_PHASE, self.release_all)

    def release_all(self) -> None:
        if self.block is None:
            return
        logger.info("%s: 槽 %d 发布被扣留的区块 %s", self.name, self.slot + self.k,
                    fmt_digest(self.block.digest))
        self.release([self.block] + self.withheld)

    def evaluate(self) -> AttackOutcome:
        return self.reorg_outcome(self.slot + 1, self.slot + self.k, needed=1)


class KReorg(Withhold):
    """
    k 重组

    脚本委员会：攻击槽由全部受控验证者组成；s+1 有两个满额诚实验证者
    （k ≥ 2 时再加一个较轻的诚实验证者），s+2..s+k 各两个满额诚实验证者。
    被扣留分支的权重为 32a，诚实分支为 64(k−1)+16，a ≥ 2k−1 时攻击成功。
    """
    name = "k-reorg"

    def plan(self) -> None:
        super().plan()
        s, k = self.slot, self.k
        for t in range(s + 1, s + k + 2):
            self.excluded[t] = self.controlled
        if self.scripted and self.uses_committees:
            self.committee_plan.update(self.scripted_committees())

    def roles(self) -> Tuple[List[int], Optional[int]]:
        """
        (满额诚实验证者, 较轻的诚实验证者)

        Raises:
            ScriptError: 人数不足，或 k ≥ 2 时没有较轻的诚实验证者
        """
        registry = self.sim.registry
        pool = self.honest_pool(2 * self.k, self.slot + 1)
        top = max(registry.effective(v) for v in pool)
        heavy = [v for v in pool if registry.effective(v) == top]
        light = None
        if self.k >= 2:
            lighter = [v for v in pool if registry.effective(v) < top]
            if not lighter:
                raise ScriptError(f"{self.name}: k ≥ 2 需要一个有效余额低于 {top} ETH 的诚实验证者")
            light = min(lighter, key=lambda v: (registry.effective(v), v))
        if len(heavy) < 2 * self.k:
            raise ScriptError(f"{self.name}: 需要 {2 * self.k} 个满额诚实验证者，只有 {len(heavy)} 个")
        return heavy, light

    def scripted_committees(self) -> Dict[int, Tuple[int, ...]]:
        s = self.slot
        heavy, light = self.roles()
        plan = {s: self.order, s + 1: tuple(heavy[:2]) + ((light,) if light is not None else ())}
        for j in range(2, self.k + 1):
            plan[s + j] = tuple(heavy[2 * j - 2:2 * j])
        return plan

    def evaluate(self) -> AttackOutcome:
        return self.reorg_outcome(self.slot + 1, self.slot + self.k, needed=self.k)


class DelayControl(AttackStrategy):
    """
    延迟控制

    记 t 为攻击槽：
    - t−2 的受控提议者私下出块 A，受控验证者在 t−2、t−1 弃权
    - 从 t 开始的 π 个槽内（GST 之前）诚实消息被拖到投递上界，受控验证者公开投给 A
    - t 开始时发布 A

    投票窗口 η ≤ π 时诚实投票全部过期，少数受控投票即可重组；η = π+2 时不受影响。
    """
    name = "delay-control"
    min_slot = 3

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.snapshot: List[int] = []
        self.window_start = 0
        self.gst = 0

    def attach(self, sim) -> None:
        super().attach(sim)
        if self.inert:
            return
        self.window_start = slot_start(self.slot, sim.pps)
        self.gst = slot_start(self.slot + self.pi, sim.pps)
        sim.network = NetworkConfig(delta=sim.network.delta, gst=self.gst, gat=sim.network.gat)
        logger.info("%s: 异步窗口 tick [%d, %d)", self.name, self.window_start, self.gst)

    def resolve_slot(self) -> int:
        self.leader = self.order[0]
        return self.slot

    def plan(self) -> None:
        t, pi = self.slot, self.pi
        self.forced[t - 2] = self.leader
        self.taken_proposals.add((self.leader, t - 2))
        for u in range(t - 1, t + pi + 1):
            self.excluded[u] = self.controlled
        self.vote_window = (t - 2, t + pi - 1)
        self.at(t - 2, PROPOSE_PHASE, self.withhold_block, t - 2)
        self.at(t, PROPOSE_PHASE, self.open_window)
        for u in range(t, t + pi):
            self.at(u, VOTE_PHASE, self.public_votes, u)

    def common_canonical(self) -> List[int]:
        """全部在线诚实验证者链头上共有的区块"""
        blocks = self.sim.store.blocks
        shared: Optional[FrozenSet[int]] = None
        for v in self.sim.registry.honest_ids:
            if not self.sim.is_awake(v, self.slot):
                continue
            chain = frozenset(chain_of(blocks, self.engine.validators[v].head))
            shared = chain if shared is None else shared & chain
        return sorted(shared or (), key=lambda d: (blocks[d].slot, d))

    def open_window(self) -> None:
        self.snapshot = self.common_canonical()
        if self.block is not None:
            self.release([self.block])

    def public_votes(self, slot: int) -> None:
        if self.block is None:
            return
        for c in self.order:
            if c in self.voters_at(slot):
                self.vote_publicly(c, slot, self.block.digest)

    def delay_policy(self, sender: int, payload: object, sent_at: int) -> Optional[DelayPolicy]:
        if self.inert or sender in self.controlled or sender < 0:
            return None
        if self.window_start <= sent_at < self.gst:
            return MAX_DELAY
        return None

    def evaluate(self) -> AttackOutcome:
        t = self.slot
        blocks = self.sim.store.blocks
        heads = self.final_heads()
        lost = [d for d in self.snapshot
                if not any(is_ancestor(blocks, d, h) for h in heads)]
        orphaned = self.orphaned_between(t - 1, t + self.pi)
        return AttackOutcome(
            self.name, t, bool(lost), self.abandoned_depth(orphaned), tuple(orphaned),
            note=f"窗口开始时的共同链上有 {len(lost)} 个区块被放弃",
        )
