"""
攻击策略基础

攻击脚本是以 (槽, 阶段) 为键的事件驱动状态机：plan() 在接入模拟器时登记
每个 (槽, 阶段) 要执行的动作，以及强制提议者、排除提议者、脚本委员会与
接管的投票窗口。同一脚本因此可以跑在每槽 3 个或 4 个阶段的协议上。

脚本以外的时间里，受控验证者按诚实规则行事。
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from ..chain.block import Block, common_ancestor, fmt_digest, height, is_ancestor
from ..chain.checkpoint import Checkpoint
from ..chain.votes import VoteMessage, combined_vote, find_equivocations, head_vote
from ..errors import ConfigError, ScriptError
from ..protocols.base import AdversaryHooks, ProtocolKind
from ..sim.trace import SIMULATOR
from ..stake.selection import select_proposer

logger = logging.getLogger(__name__)

# 所有协议的第 0 个阶段都是出块，第 1 个阶段都是投票
PROPOSE_PHASE, VOTE_PHASE = 0, 1

Action = Callable[[], None]


@dataclass
class AttackOutcome:
    """
    攻击结果
    """
    strategy: str                       # 策略名
    slot: int                           # 实际攻击槽
    success: bool                       # 是否达成目标
    depth: int = 0                      # 被放弃分支的最大深度
    orphaned: Tuple[int, ...] = ()      # 被孤立的诚实区块
    note: str = ""                      # 附加说明

    @property
    def orphaned_label(self) -> str:
        return ",".join(fmt_digest(d) for d in self.orphaned) or "-"

    def format_result(self) -> str:
        lines = [
            "=" * 60,
            f"攻击: {self.strategy} (槽 {self.slot})",
            "=" * 60,
            f"成功: {'是' if self.success else '否'}",
            f"重组深度: {self.depth}",
            f"孤立区块: {self.orphaned_label}",
        ]
        if self.note:
            lines.append(f"说明: {self.note}")
        lines.append("=" * 60)
        return "\n".join(lines)


def balancing_split(members: Iterable[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    把委员会按编号分成两半：前 ⌊c/2⌋ 个提前看到被扣留的区块，其余的晚看到

    Args:
        members: 委员会中的诚实成员

    Returns:
        (提前组, 延后组)
    """
    ordered = sorted(members)
    cut = len(ordered) // 2
    return tuple(ordered[:cut]), tuple(ordered[cut:])


class AttackStrategy(AdversaryHooks):
    """
    脚本化攻击的基类

    子类实现 plan()，在其中填写 forced / excluded / committee_plan /
    taken_proposals / vote_window，并用 at() 登记动作。
    """
    name = "attack"
    min_slot = 1                # 攻击槽下限
    needs_proposer = True       # 是否需要受控的提议者

    def __init__(self, controlled: Iterable[int] = (), slot: int = 5, k: int = 2,
                 pi: int = 1, scripted: bool = True):
        """
        Args:
            controlled: 受控验证者
            slot: 攻击槽（非脚本模式下为搜索起点）
            k: 重组深度
            pi: 异步窗口的槽数
            scripted: 是否固定提议者与委员会

        Raises:
            ConfigError: 参数越界
        """
        super().__init__(controlled)
        if slot < self.min_slot:
            raise ConfigError(f"{self.name} 的攻击槽必须 ≥ {self.min_slot}: {slot}", field="attack.slot")
        if k < 1:
            raise ConfigError(f"attack.k 必须 ≥ 1: {k}", field="attack.k")
        if pi < 1:
            raise ConfigError(f"attack.pi 必须 ≥ 1: {pi}", field="attack.pi")
        self.slot = slot
        self.k = k
        self.pi = pi
        self.scripted = scripted
        self.order: Tuple[int, ...] = tuple(sorted(self.controlled))
        self.leader: Optional[int] = None
        self.block: Optional[Block] = None
        self.withheld: List[VoteMessage] = []
        self.outcome: Optional[AttackOutcome] = None

        self.forced: Dict[int, int] = {}
        self.excluded: Dict[int, FrozenSet[int]] = {}
        self.committee_plan: Dict[int, Tuple[int, ...]] = {}
        self.taken_proposals: Set[Tuple[int, int]] = set()
        self.vote_window: Tuple[int, int] = (1, 0)
        self.actions: Dict[Tuple[int, int], List[Tuple[Action, tuple]]] = {}

    @property
    def inert(self) -> bool:
        """没有受控验证者时脚本什么也不做"""
        return not self.order

    @property
    def engine(self):
        return self.sim.engine

    @property
    def uses_committees(self) -> bool:
        return self.sim.params.kind is ProtocolKind.GASPER_LITE

    # ------------------------------------------------------------------
    # 接入
    # ------------------------------------------------------------------

    def attach(self, sim) -> None:
        """
        Raises:
            ConfigError: 受控验证者未在注册表中标为敌手，或攻击槽超出运行范围
            ScriptError: 非脚本模式下找不到受控提议者
        """
        super().attach(sim)
        unknown = sorted(v for v in self.controlled if v not in sim.registry.adversarial_ids)
        if unknown:
            raise ConfigError(f"受控验证者 {unknown} 未被标为敌手", field="adversary.ids")
        if self.slot > sim.slots:
            raise ConfigError(f"攻击槽 {self.slot} 超出运行的 {sim.slots} 个槽", field="attack.slot")
        if self.inert:
            logger.info("%s: 没有受控验证者，脚本不执行", self.name)
            return
        if self.needs_proposer:
            self.slot = self.resolve_slot()
        self.plan()
        if self.uses_committees and self.committee_plan:
            logger.debug("%s: 脚本委员会 %s", self.name, self.committee_plan)

    def resolve_slot(self) -> int:
        """
        确定攻击槽与受控提议者

        脚本模式直接使用配置的槽并由编号最小的受控验证者出块；
        否则从配置的槽起寻找第一个抽中受控验证者的槽。
        """
        if self.scripted:
            self.leader = self.order[0]
            return self.slot
        registry = self.sim.registry
        for s in range(self.slot, self.sim.slots + 1):
            eligible = {v: registry.effective(v) for v in registry.ids if self.sim.is_awake(v, s)}
            drawn = select_proposer(s, eligible, self.sim.seed)
            if drawn in self.controlled:
                self.leader = drawn
                logger.info("%s: 槽 %d 的提议者 %d 受控，发起攻击", self.name, s, drawn)
                return s
        raise ScriptError(f"{self.name}: 槽 {self.slot}..{self.sim.slots} 中没有受控的提议者")

    def plan(self) -> None:
        """登记动作与钩子数据"""
        pass

    def at(self, slot: int, phase: int, action: Action, *args) -> None:
        self.actions.setdefault((slot, phase), []).append((action, args))

    # ------------------------------------------------------------------
    # 钩子
    # ------------------------------------------------------------------

    def on_tick(self, slot: int, phase: int) -> None:
        for action, args in self.actions.get((slot, phase), ()):
            action(*args)

    def proposer_override(self, slot: int) -> Optional[int]:
        return self.forced.get(slot)

    def excluded_proposers(self, slot: int) -> FrozenSet[int]:
        return self.excluded.get(slot, frozenset())

    def committee_overrides(self, epoch: int):
        spacing = self.sim.params.checkpoint_spacing
        chosen = {s % spacing: members for s, members in self.committee_plan.items()
                  if s // spacing == epoch}
        return chosen or None

    def handles_proposal(self, vid: int, slot: int) -> bool:
        return (vid, slot) in self.taken_proposals

    def handles_vote(self, vid: int, slot: int) -> bool:
        low, high = self.vote_window
        return vid in self.controlled and low <= slot <= high

    # ------------------------------------------------------------------
    # 角色
    # ------------------------------------------------------------------

    def voters_at(self, slot: int) -> List[int]:
        """该槽有投票资格的验证者（Gasper-lite 为委员会，其余协议为全体）"""
        if self.uses_committees:
            return sorted(self.sim.committee_at(slot))
        return list(self.sim.registry.ids)

    def honest_voters_at(self, slot: int) -> List[int]:
        registry = self.sim.registry
        return [v for v in self.voters_at(slot)
                if registry.is_honest(v) and self.sim.is_awake(v, slot)]

    def honest_pool(self, count: int, slot: int) -> List[int]:
        """
        Raises:
            ScriptError: 诚实验证者不足
        """
        pool = [v for v in self.sim.registry.honest_ids if self.sim.is_awake(v, slot)]
        if len(pool) < count:
            raise ScriptError(f"{self.name}: 脚本需要 {count} 个在线诚实验证者，只有 {len(pool)} 个")
        return pool

    # ------------------------------------------------------------------
    # 动作
    # ------------------------------------------------------------------

    def coalition_accept(self, msg) -> None:
        """受控验证者之间立即共享消息"""
        for c in self.order:
            self.engine.validators[c].view.receive_now(msg)

    def propose_privately(self, vid: int, slot: int) -> Block:
        proposal = self.engine.build_proposal(vid, slot)
        self.engine.publish_proposal(proposal, private=True)
        self.coalition_accept(proposal.block)
        logger.info("%s: 验证者 %d 在槽 %d 私下出块 %s", self.name, vid, slot,
                    fmt_digest(proposal.block.digest))
        return proposal.block

    def vote_privately(self, vid: int, slot: int, head: int) -> VoteMessage:
        vote = self.engine.vote_for(vid, slot, head)
        self.engine.publish_vote(vote, private=True)
        self.coalition_accept(vote)
        self.withheld.append(vote)
        return vote

    def vote_publicly(self, vid: int, slot: int, head: int) -> VoteMessage:
        vote = self.engine.vote_for(vid, slot, head)
        self.engine.publish_vote(vote)
        return vote

    def release(self, payloads: Sequence[object], recipients: Optional[Iterable[int]] = None) -> None:
        """
        发布被扣留的消息

        Args:
            payloads: 区块或投票
            recipients: 接收者（默认除发送者外的全体）
        """
        chosen = None if recipients is None else sorted(set(recipients))
        for payload in payloads:
            sender = payload.voter if isinstance(payload, VoteMessage) else payload.proposer
            targets = None if chosen is None else [r for r in chosen if r != sender]
            if targets is not None and not targets:
                continue
            self.sim.broadcast(sender, payload, recipients=targets)

    def withhold_block(self, slot: Optional[int] = None) -> None:
        self.block = self.propose_privately(self.leader, self.slot if slot is None else slot)

    def withhold_votes(self) -> None:
        """攻击槽中有投票资格的受控验证者私下投给被扣留的区块"""
        if self.block is None:
            return
        for c in self.order:
            if c in self.voters_at(self.slot):
                self.vote_privately(c, self.slot, self.block.digest)

    # ------------------------------------------------------------------
    # 结果
    # ------------------------------------------------------------------

    def final_heads(self) -> List[int]:
        """运行结束时在线的诚实验证者的链头"""
        last = self.sim.slots
        return sorted({self.engine.validators[v].head for v in self.sim.registry.honest_ids
                       if self.sim.is_awake(v, last)})

    def orphaned_between(self, first: int, last: int) -> List[int]:
        """槽 [first, last] 中诚实提议、且不是任何最终链头祖先的区块"""
        blocks = self.sim.store.blocks
        heads = self.final_heads()
        if not heads:
            return []
        found = []
        for b in sorted(blocks.values(), key=lambda b: (b.slot, b.digest)):
            if b.is_genesis or not first <= b.slot <= last:
                continue
            if not self.sim.registry.is_honest(b.proposer):
                continue
            if not any(is_ancestor(blocks, b.digest, h) for h in heads):
                found.append(b.digest)
        return found

    def abandoned_depth(self, orphaned: Sequence[int]) -> int:
        """被孤立区块离开最终链的最大高度差"""
        blocks = self.sim.store.blocks
        heads = self.final_heads()
        depth = 0
        for d in orphaned:
            fork = max(height(blocks, common_ancestor(blocks, d, h)) for h in heads)
            depth = max(depth, height(blocks, d) - fork)
        return depth

    def reorg_outcome(self, first: int, last: int, needed: int, note: str = "") -> AttackOutcome:
        orphaned = self.orphaned_between(first, last)
        depth = self.abandoned_depth(orphaned)
        return AttackOutcome(self.name, self.slot, depth >= needed, depth, tuple(orphaned), note)

    def evaluate(self) -> AttackOutcome:
        return AttackOutcome(self.name, self.slot, False)

    def finish(self) -> None:
        if self.inert:
            outcome = AttackOutcome(self.name, self.slot, False, note="没有受控验证者")
        else:
            outcome = self.evaluate()
        self.outcome = outcome
        self.sim.emit("attack", SIMULATOR, strategy=outcome.strategy, success=outcome.success,
                      depth=outcome.depth, orphaned=outcome.orphaned_label)
        logger.info("%s: %s，深度 %d", self.name, "成功" if outcome.success else "失败", outcome.depth)


# ============================================================================
# 平衡攻击
# ============================================================================

class BalancingAttack(AttackStrategy):
    """
    平衡攻击：扣留槽 s 的区块及其投票，在槽 s+1 的投票之前只交给一半委员会，
    使 s+1 的诚实投票分裂在两个分支上
    """
    name = "balancing"

    def __init__(self, controlled: Iterable[int] = (), slot: int = 5, k: int = 2,
                 pi: int = 1, scripted: bool = True, release_phase: int = PROPOSE_PHASE):
        """
        Args:
            release_phase: 槽 s+1 中向提前组发布的阶段；不早于投票阶段时不再分组
        """
        super().__init__(controlled, slot=slot, k=k, pi=pi, scripted=scripted)
        self.release_phase = release_phase
        self.early: Tuple[int, ...] = ()

    def plan(self) -> None:
        s = self.slot
        if self.scripted:
            self.forced[s] = self.leader
        self.taken_proposals.add((self.leader, s))
        self.excluded[s + 1] = self.controlled
        self.vote_window = (s, s + 1)
        if self.scripted and self.uses_committees:
            self.committee_plan.update(self.scripted_committees())
        self.at(s, PROPOSE_PHASE, self.withhold_block)
        self.at(s, VOTE_PHASE, self.withhold_votes)
        self.at(s + 1, self.release_phase, self.split_release)
        if self.release_phase < VOTE_PHASE:
            self.at(s + 1, VOTE_PHASE, self.release_block_to_rest)

    def scripted_committees(self) -> Dict[int, Tuple[int, ...]]:
        honest = self.honest_pool(4, self.slot + 1)
        return {self.slot: self.order, self.slot + 1: tuple(honest[:4])}

    def split_release(self) -> None:
        """提前组收到区块与扣留的投票；发布晚于投票阶段时全体同时收到"""
        if self.block is None:
            return
        payloads = [self.block] + self.withheld
        if self.release_phase >= VOTE_PHASE:
            self.release(payloads)
            return
        self.early, _ = balancing_split(self.honest_voters_at(self.slot + 1))
        logger.info("%s: 槽 %d 提前组 %s", self.name, self.slot + 1, list(self.early))
        self.release(payloads, self.early)

    def release_block_to_rest(self) -> None:
        """投票截止前一刻之后，其余验证者只收到区块"""
        if self.block is None:
            return
        rest = [v for v in self.sim.registry.ids if v not in self.early and v not in self.controlled]
        self.release([self.block], rest)

    def evaluate(self) -> AttackOutcome:
        s = self.slot
        if self.block is None:
            return AttackOutcome(self.name, s, False, note="区块未被提出")
        blocks = self.sim.store.blocks
        votes = [v for v in self.sim.sent_votes()
                 if v.slot == s + 1 and v.has_head and self.sim.registry.is_honest(v.voter)]
        towards = {v.voter for v in votes if is_ancestor(blocks, self.block.digest, v.head)}
        away = {v.voter for v in votes} - towards
        orphaned = self.orphaned_between(s + 1, s + 1)
        return AttackOutcome(
            self.name, s, bool(towards) and bool(away), self.abandoned_depth(orphaned), tuple(orphaned),
            note=f"槽 {s + 1} 的诚实投票: 被扣留分支 {len(towards)}，其他分支 {len(away)}",
        )


# ============================================================================
# 模棱两可
# ============================================================================

class Equivocation(AttackStrategy):
    """
    模棱两可：受控验证者在攻击槽同时投给链头与其父区块

    协议带 FFG 且目标序号高于源时两票都是组合投票，目标高度相同，触发 double 罚没。
    """
    name = "equivocate"
    needs_proposer = False

    def __init__(self, controlled: Iterable[int] = (), slot: int = 5, k: int = 2,
                 pi: int = 1, scripted: bool = True):
        super().__init__(controlled, slot=slot, k=k, pi=pi, scripted=scripted)
        self.equivocators: List[int] = []

    def plan(self) -> None:
        self.vote_window = (self.slot, self.slot)
        self.at(self.slot, VOTE_PHASE, self.equivocate_all)

    def conflicting_votes(self, vid: int, slot: int) -> Optional[Tuple[VoteMessage, VoteMessage]]:
        """
        两张冲突的投票；链头为创世块时返回 None
        """
        engine = self.engine
        head = engine.build_vote(vid, slot).head
        if head is None:
            return None
        parent = self.sim.store[head].parent
        if parent == head:
            logger.warning("%s: 验证者 %d 的链头是创世块，无法模棱两可", self.name, vid)
            return None
        st = engine.validators[vid]
        if engine.kind.has_ffg:
            spacing = self.sim.params.checkpoint_spacing
            index = slot // spacing if engine.kind is ProtocolKind.GASPER_LITE else slot
            source = st.latest_justified
            if index > source.index and is_ancestor(st.view.blocks, source.block, parent):
                return (combined_vote(vid, slot, head, source, Checkpoint(index, head)),
                        combined_vote(vid, slot, parent, source, Checkpoint(index, parent)))
        return head_vote(vid, slot, head), head_vote(vid, slot, parent)

    def equivocate_all(self) -> None:
        for c in self.order:
            if c not in self.voters_at(self.slot):
                continue
            pair = self.conflicting_votes(c, self.slot)
            if pair is None:
                continue
            for vote in pair:
                self.engine.publish_vote(vote)
            self.equivocators.append(c)
            logger.info("%s: 验证者 %d 在槽 %d 投出冲突投票", self.name, c, self.slot)

    def evaluate(self) -> AttackOutcome:
        flagged = {v for v, s in find_equivocations(self.sim.sent_votes()) if s == self.slot}
        success = bool(self.equivocators) and all(c in flagged for c in self.equivocators)
        orphaned = self.orphaned_between(self.slot, self.slot)
        return AttackOutcome(
            self.name, self.slot, success, self.abandoned_depth(orphaned), tuple(orphaned),
            note=f"被标记的验证者: {sorted(flagged) or '-'}",
        )
