"""
场景模拟

Simulation 把调度器、网络、验证者集合、参与度、攻击脚本与协议引擎组装在一起：
- 每个槽边界（HOUSEKEEPING）输出 slot 记录，纪元边界调用引擎的纪元处理
- 每个阶段 tick 先运行攻击脚本（ADVERSARY），再运行协议阶段处理器（PHASE）
- 同一 tick 的消息投递（DELIVERY）先于以上所有事件
"""

from __future__ import annotations
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Type

from ..chain.block import Block, BlockStore, fmt_digest
from ..chain.checkpoint import Checkpoint
from ..chain.votes import VoteMessage
from ..ffg.audit import AuditReport, accountable_safety_audit
from ..sim.clock import epoch_of, slot_start
from ..sim.network import HONEST_DELAY, DelayPolicy, Envelope, NetworkConfig, schedule
from ..sim.scheduler import Priority, Scheduler
from ..sim.trace import SIMULATOR, TraceRecord
from ..stake.participation import Mode, ParticipationSchedule, mode_at
from ..stake.registry import ValidatorRegistry
from ..stake.selection import Committee, committees, select_proposer
from .base import AdversaryHooks, EngineParams, ProtocolEngine, ProtocolKind, Proposal
from .gasper import GasperLiteEngine
from .rlmd import GoldfishEngine, LmdViewMergeEngine, RlmdEngine
from .ssf import SsfEngine
from .three_sf import ThreeSfEngine

logger = logging.getLogger(__name__)


PROTOCOL_REGISTRY: Dict[ProtocolKind, Type[ProtocolEngine]] = {
    ProtocolKind.GASPER_LITE: GasperLiteEngine,
    ProtocolKind.GOLDFISH: GoldfishEngine,
    ProtocolKind.RLMD: RlmdEngine,
    ProtocolKind.LMD_VM: LmdViewMergeEngine,
    ProtocolKind.SSF: SsfEngine,
    ProtocolKind.THREE_SF: ThreeSfEngine,
}


def make_engine(kind: ProtocolKind, sim: "Simulation") -> ProtocolEngine:
    """
    创建协议引擎

    Raises:
        ValueError: 未注册的协议
    """
    if kind not in PROTOCOL_REGISTRY:
        available = ", ".join(k.value for k in PROTOCOL_REGISTRY)
        raise ValueError(f"未知的协议: {kind}。可用协议: {available}")
    return PROTOCOL_REGISTRY[kind](sim)


def list_protocols() -> List[str]:
    return [k.value for k in PROTOCOL_REGISTRY]


def item_label(payload: object) -> str:
    """deliver 记录中的消息标签"""
    if isinstance(payload, Proposal):
        return f"proposal:{fmt_digest(payload.block.digest)}"
    if isinstance(payload, Block):
        return f"block:{fmt_digest(payload.digest)}"
    if isinstance(payload, VoteMessage):
        head = fmt_digest(payload.head) if payload.head is not None else "-"
        return f"vote:{payload.voter}:{payload.slot}:{head}"
    return type(payload).__name__.lower()


class Simulation:
    """
    单次场景运行
    """

    def __init__(self, params: EngineParams, registry: ValidatorRegistry,
                 participation: Optional[ParticipationSchedule] = None,
                 network: Optional[NetworkConfig] = None,
                 seed: int = 0, slots: int = 10,
                 adversary: Optional[AdversaryHooks] = None):
        """
        Args:
            params: 引擎参数
            registry: 验证者集合
            participation: 参与度时间表
            network: 网络参数
            seed: 场景种子
            slots: 运行的槽数（槽 1..slots）
            adversary: 攻击脚本
        """
        self.params = params
        self.registry = registry
        self.participation = participation or ParticipationSchedule()
        self.participation.validate(registry)
        self.network = network or NetworkConfig()
        self.seed = seed
        self.slots = slots
        self.pps = params.kind.phases_per_slot
        self.scheduler = Scheduler(has_pending_work=self.has_pending_phases)
        self.phases_run = 0
        self.store = BlockStore()
        self.trace: List[TraceRecord] = []
        self.balances: Dict[int, int] = registry.initial_balances()
        self.attested: Dict[int, set] = {}      # 纪元 -> 有投票的验证者
        self._votes: Dict[VoteMessage, None] = {}
        self._committees: Dict[int, List[Committee]] = {}
        self.adversary = adversary or AdversaryHooks()
        self.engine = make_engine(params.kind, self)
        self.adversary.attach(self)

    # ------------------------------------------------------------------
    # 查询
    # ------------------------------------------------------------------

    @property
    def now(self) -> int:
        return self.scheduler.now

    def has_pending_phases(self) -> bool:
        """还有协议阶段没有运行"""
        return self.phases_run < self.slots * self.pps

    def total_balance(self) -> int:
        return sum(self.balances.values())

    def mode(self, vid: int, slot: int) -> Mode:
        return mode_at(self.registry[vid], slot, self.participation)

    def is_awake(self, vid: int, slot: int) -> bool:
        return self.mode(vid, slot) is Mode.AWAKE

    def committees(self, epoch: int) -> List[Committee]:
        if epoch not in self._committees:
            self._committees[epoch] = committees(
                epoch, self.registry.ids, self.seed,
                count=self.params.checkpoint_spacing,
                overrides=self.adversary.committee_overrides(epoch),
            )
        return self._committees[epoch]

    def committee_at(self, slot: int) -> Committee:
        spacing = self.params.checkpoint_spacing
        return self.committees(epoch_of(slot, spacing))[slot % spacing]

    def proposer(self, slot: int) -> Optional[int]:
        """槽 slot 的提议者（脚本可以指定或排除）"""
        forced = self.adversary.proposer_override(slot)
        if forced is not None:
            return forced
        excluded = self.adversary.excluded_proposers(slot)
        eligible = {vid: self.registry.effective(vid) for vid in self.registry.ids
                    if vid not in excluded and self.is_awake(vid, slot)}
        return select_proposer(slot, eligible, self.seed)

    def sent_votes(self) -> List[VoteMessage]:
        return list(self._votes)

    def note_vote(self, vote: VoteMessage) -> None:
        self._votes.setdefault(vote, None)
        epoch = epoch_of(vote.slot, self.params.checkpoint_spacing)
        self.attested.setdefault(epoch, set()).add(vote.voter)

    def finalized_checkpoints(self) -> List[Checkpoint]:
        found = set()
        for st in self.engine.validators.values():
            found.update(st.ffg.finalized)
        return sorted(found)

    def audit(self) -> AuditReport:
        return accountable_safety_audit(
            self.store.blocks, self.finalized_checkpoints(), self.sent_votes(),
            self.balances, self.total_balance(),
            three_sf=self.params.kind is ProtocolKind.THREE_SF,
        )

    # ------------------------------------------------------------------
    # 轨迹与网络
    # ------------------------------------------------------------------

    def emit(self, kind: str, actor: int, **payload: object) -> TraceRecord:
        tick = self.scheduler.now
        record = TraceRecord.make(tick, tick // self.pps, tick % self.pps, actor, kind, **payload)
        self.trace.append(record)
        return record

    def broadcast(self, sender: int, payload: object,
                  recipients: Optional[Iterable[int]] = None,
                  policy: Optional[DelayPolicy] = None) -> Envelope:
        """
        发送消息

        Args:
            sender: 发送者
            payload: 消息
            recipients: 接收者（默认除发送者外的全部验证者）
            policy: 延迟策略（默认由攻击脚本决定，否则为诚实延迟）

        Returns:
            排期后的信封
        """
        targeted = recipients is not None
        targets = sorted(recipients) if targeted else [v for v in self.registry.ids if v != sender]
        if policy is None:
            policy = self.adversary.delay_policy(sender, payload, self.now) or HONEST_DELAY
        env = schedule(Envelope(payload, sender, self.now), policy, self.network, targets)
        by_tick: Dict[int, List[int]] = {}
        for r, at in env.deliver_at.items():
            by_tick.setdefault(at, []).append(r)
        default_tick = self.now + self.network.delta
        for at in sorted(by_tick):
            rs = tuple(sorted(by_tick[at]))
            self.scheduler.at(at, Priority.DELIVERY, sender, self._deliver, rs, payload)
            if targeted or at != default_tick:
                self.emit("deliver", sender, item=item_label(payload),
                          to=",".join(map(str, rs)), at=at)
        if env.undelivered:
            self.emit("deliver", sender, item=item_label(payload),
                      to=",".join(map(str, env.undelivered)), at=float("inf"))
        return env

    def _deliver(self, recipients: Sequence[int], payload: object) -> None:
        for r in recipients:
            self.engine.on_deliver(r, payload)

    # ------------------------------------------------------------------
    # 运行
    # ------------------------------------------------------------------

    def _slot_boundary(self, slot: int) -> None:
        self.emit("slot", SIMULATOR)
        spacing = self.params.checkpoint_spacing
        if slot % spacing == 0:
            self.engine.on_epoch(slot // spacing)

    def _emit_scenario(self) -> None:
        weights = [self.registry.effective(v) for v in self.registry.ids]
        adversarial = sorted(self.registry.adversarial_ids)
        self.emit(
            "scenario", SIMULATOR,
            n=len(self.registry), phases=self.pps,
            gst=self.network.gst, gat=self.network.gat,
            adversarial=",".join(map(str, adversarial)) if adversarial else "-",
            total=sum(weights), weights=",".join(map(str, weights)),
        )

    def _phase(self, slot: int, phase: int) -> None:
        self.phases_run += 1
        self.engine.on_phase(slot, phase)

    def run(self) -> List[TraceRecord]:
        """
        运行槽 1..slots

        Returns:
            轨迹记录

        Raises:
            StalledSimulationError: 事件队列在全部阶段运行之前耗尽
        """
        self._emit_scenario()
        for slot in range(1, self.slots + 1):
            base = slot_start(slot, self.pps)
            self.scheduler.at(base, Priority.HOUSEKEEPING, SIMULATOR, self._slot_boundary, slot)
            for phase in range(self.pps):
                self.scheduler.at(base + phase, Priority.ADVERSARY, SIMULATOR,
                                  self.adversary.on_tick, slot, phase)
                self.scheduler.at(base + phase, Priority.PHASE, SIMULATOR,
                                  self._phase, slot, phase)
        self.scheduler.run_until(slot_start(self.slots + 1, self.pps))
        self.engine.finish()
        self.adversary.finish()
        logger.info("运行结束: %d 个槽, %d 条记录, %d 个事件",
                    self.slots, len(self.trace), self.scheduler.processed)
        return self.trace
