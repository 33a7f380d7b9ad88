"""
协议引擎基础

说明：
- ProtocolKind：协议种类、每槽阶段数、有效 η、最终确定规则
- LedgerPair：LOG_fin / LOG_da（3SF 另有 chConf / chAva），构造时检查前缀关系
- ValidatorState：单个验证者的视图、证明状态与当前链头
- AdversaryHooks：攻击脚本接入模拟器的钩子（默认全部为空操作）
- ProtocolEngine：各协议引擎的抽象基类
"""

from __future__ import annotations
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple,
)

from ..chain.block import Block, fmt_digest, is_ancestor, make_block
from ..chain.checkpoint import Checkpoint
from ..chain.view import View
from ..chain.votes import Eta, VoteMessage
from ..errors import ConfigError, LedgerInvariantError
from ..ffg.justification import (
    FinalityRule, JustificationState, update_finalization, update_justification,
)
from ..ffg.leak import LeakConfig
from ..ffg.slashing import detect_slashing
from ..sim.clock import SLOTS_PER_EPOCH
from ..sim.network import DelayPolicy

if TYPE_CHECKING:
    from .simulation import Simulation

logger = logging.getLogger(__name__)


class ProtocolKind(Enum):
    """协议种类"""
    GASPER_LITE = "gasper-lite"
    GOLDFISH = "goldfish"
    RLMD = "rlmd"
    LMD_VM = "lmd-vm"
    SSF = "ssf"
    THREE_SF = "3sf"

    @classmethod
    def parse(cls, name: str) -> "ProtocolKind":
        """
        Raises:
            ConfigError: 未知协议
        """
        for kind in cls:
            if kind.value == name:
                return kind
        choices = ", ".join(k.value for k in cls)
        raise ConfigError(f"未知协议 '{name}'，可选: {choices}", field="protocol")

    @property
    def phases_per_slot(self) -> int:
        return 4 if self in (ProtocolKind.SSF, ProtocolKind.THREE_SF) else 3

    @property
    def finality_rule(self) -> FinalityRule:
        if self is ProtocolKind.SSF:
            return FinalityRule.SAME_SLOT
        if self is ProtocolKind.THREE_SF:
            return FinalityRule.PIPELINED
        return FinalityRule.CASPER

    @property
    def has_ffg(self) -> bool:
        return self in (ProtocolKind.GASPER_LITE, ProtocolKind.SSF, ProtocolKind.THREE_SF)

    def effective_eta(self, eta: Eta) -> Eta:
        """Goldfish 固定 η=1；LMD 类固定 η=∞"""
        if self is ProtocolKind.GOLDFISH:
            return 1
        if self in (ProtocolKind.LMD_VM, ProtocolKind.GASPER_LITE):
            return math.inf
        return eta


@dataclass(frozen=True)
class EngineParams:
    """
    引擎参数
    """
    kind: ProtocolKind = ProtocolKind.GOLDFISH
    eta: Eta = 1                                    # 投票过期窗口
    checkpoint_spacing: int = SLOTS_PER_EPOCH       # H，Gasper-lite 纪元长度
    fallback_target: bool = False                   # SSF 快速确认失败时的后备目标
    leak: LeakConfig = field(default_factory=LeakConfig)

    def __post_init__(self):
        if not (self.eta == math.inf or (isinstance(self.eta, int) and self.eta >= 1)):
            raise ConfigError(f"eta 必须是 ≥ 1 的整数或 inf: {self.eta}", field="eta")
        if self.checkpoint_spacing < 1:
            raise ConfigError("checkpoint_spacing 必须 ≥ 1", field="checkpoint_spacing")

    @property
    def window(self) -> Eta:
        return self.kind.effective_eta(self.eta)


# ============================================================================
# 账本
# ============================================================================

@dataclass(frozen=True)
class LedgerPair:
    """
    双账本：LOG_fin 必须是 LOG_da 的前缀；3SF 中 chConf 必须是 chAva 的前缀
    """
    fin: int                    # LOG_fin 末端区块
    fin_len: int                # LOG_fin 长度（含创世块）
    da: int                     # LOG_da 末端区块
    da_len: int                 # LOG_da 长度
    conf: Optional[int] = None  # chConf 末端（仅 3SF）


def is_prefix(blocks: Mapping[int, Block], shorter: int, longer: int) -> bool:
    return is_ancestor(blocks, shorter, longer)


def extract_ledgers(view: View, fin_tip: int, da_tip: int,
                    conf_tip: Optional[int] = None) -> LedgerPair:
    """
    由末端区块构造账本对并检查前缀不变式

    Raises:
        LedgerInvariantError: LOG_fin 不是 LOG_da 的前缀，或 chConf 不是 chAva 的前缀
    """
    if not is_prefix(view.blocks, fin_tip, da_tip):
        raise LedgerInvariantError(
            f"LOG_fin {fmt_digest(fin_tip)} 不是 LOG_da {fmt_digest(da_tip)} 的前缀"
        )
    if conf_tip is not None and not is_prefix(view.blocks, conf_tip, da_tip):
        raise LedgerInvariantError(
            f"chConf {fmt_digest(conf_tip)} 不是 chAva {fmt_digest(da_tip)} 的前缀"
        )
    return LedgerPair(
        fin=fin_tip, fin_len=view.heights[fin_tip] + 1,
        da=da_tip, da_len=view.heights[da_tip] + 1,
        conf=conf_tip,
    )


# ============================================================================
# 消息与状态
# ============================================================================

@dataclass(frozen=True)
class Proposal:
    """
    提议：新区块及提议者合并后的视图
    """
    block: Block
    blocks: FrozenSet[Block] = frozenset()
    votes: FrozenSet[VoteMessage] = frozenset()

    @property
    def slot(self) -> int:
        return self.block.slot

    @property
    def proposer(self) -> int:
        return self.block.proposer


@dataclass
class ValidatorState:
    """
    单个验证者的本地状态
    """
    vid: int
    view: View = field(default_factory=View)
    ffg: JustificationState = field(default_factory=JustificationState)
    head: int = 0                                           # 当前分叉选择链头
    proposals: Dict[int, Proposal] = field(default_factory=dict)  # 槽 -> 收到的提议
    processed_ffg: set = field(default_factory=set)         # 已计入证明状态的投票
    ch_conf: Optional[int] = None                           # 3SF 确认链末端
    fast_confirmed: Optional[int] = None                    # SSF 最近一次快速确认的区块

    def __post_init__(self):
        if self.head == 0:
            self.head = self.view.genesis

    @property
    def latest_justified(self) -> Checkpoint:
        return self.ffg.latest_justified

    @property
    def latest_finalized(self) -> Checkpoint:
        return self.ffg.latest_finalized

    def fresh_ffg_votes(self) -> List[VoteMessage]:
        """视图中尚未计入证明状态的 FFG 投票与确认"""
        fresh = sorted((v for v in self.view.votes
                        if (v.has_ffg or v.is_ack) and v not in self.processed_ffg),
                       key=VoteMessage.sort_key)
        self.processed_ffg.update(fresh)
        return fresh


# ============================================================================
# 攻击钩子
# ============================================================================

class AdversaryHooks:
    """
    攻击脚本接入点

    模拟器在每个阶段 tick（先于诚实处理器）调用 on_tick；引擎在出块与投票前
    询问 handles_proposal / handles_vote，被接管的动作由脚本自行完成。
    """
    name = "none"

    def __init__(self, controlled: Iterable[int] = ()):
        self.controlled: FrozenSet[int] = frozenset(controlled)
        self.sim: Optional["Simulation"] = None

    def attach(self, sim: "Simulation") -> None:
        self.sim = sim

    def on_tick(self, slot: int, phase: int) -> None:
        pass

    def proposer_override(self, slot: int) -> Optional[int]:
        return None

    def excluded_proposers(self, slot: int) -> FrozenSet[int]:
        return frozenset()

    def committee_overrides(self, epoch: int) -> Optional[Mapping[int, Sequence[int]]]:
        return None

    def handles_proposal(self, vid: int, slot: int) -> bool:
        return False

    def handles_vote(self, vid: int, slot: int) -> bool:
        return False

    def delay_policy(self, sender: int, payload: object, sent_at: int) -> Optional[DelayPolicy]:
        return None

    def finish(self) -> None:
        pass


# ============================================================================
# 引擎基类
# ============================================================================

class ProtocolEngine(ABC):
    """
    协议引擎基类

    引擎持有全部验证者的本地状态，由模拟器按阶段驱动。
    """

    def __init__(self, sim: "Simulation"):
        self.sim = sim
        self.params: EngineParams = sim.params
        self.validators: Dict[int, ValidatorState] = {
            vid: ValidatorState(vid, ffg=JustificationState(rule=self.params.kind.finality_rule))
            for vid in sim.registry.ids
        }

    @property
    def kind(self) -> ProtocolKind:
        return self.params.kind

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def on_phase(self, slot: int, phase: int) -> None:
        """处理一个阶段"""
        pass

    @abstractmethod
    def on_deliver(self, vid: int, payload: object) -> None:
        """消息送达验证者 vid"""
        pass

    @abstractmethod
    def fork_choice(self, st: ValidatorState, slot: int) -> int:
        """验证者在槽 slot 的分叉选择"""
        pass

    @abstractmethod
    def vote_for(self, vid: int, slot: int, head: int) -> VoteMessage:
        """以 head 为链头构造 vid 在槽 slot 的投票"""
        pass

    def build_vote(self, vid: int, slot: int) -> VoteMessage:
        """按分叉选择投票"""
        st = self.validators[vid]
        head = self.fork_choice(st, slot)
        self.set_head(st, head)
        return self.vote_for(vid, slot, head)

    def build_proposal(self, vid: int, slot: int) -> Proposal:
        """在分叉选择的链头上出块"""
        st = self.validators[vid]
        head = self.fork_choice(st, slot)
        self.set_head(st, head)
        return Proposal(self.make_proposal(vid, slot, head))

    def on_epoch(self, epoch: int) -> None:
        """纪元开始时的处理（默认无）"""
        pass

    def ledgers(self, st: ValidatorState) -> LedgerPair:
        fin = st.latest_finalized.block if self.kind.has_ffg else st.view.genesis
        return extract_ledgers(st.view, fin, st.head)

    # ------------------------------------------------------------------
    # 共用步骤
    # ------------------------------------------------------------------

    def set_head(self, st: ValidatorState, head: int) -> None:
        """更新链头，变化时输出 head-change 记录"""
        if head != st.head:
            self.sim.emit("head-change", st.vid, old=fmt_digest(st.head), new=fmt_digest(head))
            st.head = head

    def emit_confirm(self, st: ValidatorState, ledgers: Optional[LedgerPair] = None) -> LedgerPair:
        pair = ledgers or self.ledgers(st)
        self.sim.emit(
            "confirm", st.vid,
            da=fmt_digest(pair.da), da_len=pair.da_len,
            fin=fmt_digest(pair.fin), fin_len=pair.fin_len,
            conf=fmt_digest(pair.conf) if pair.conf is not None else None,
        )
        return pair

    def process_ffg(self, st: ValidatorState) -> Tuple[List[Checkpoint], List[Checkpoint]]:
        """把视图中的新 FFG 投票计入证明状态并推进证明与最终确定"""
        balances = self.sim.balances
        total = self.sim.total_balance()
        justified = update_justification(st.ffg, balances, total, st.fresh_ffg_votes(), st.view.blocks)
        finalized = update_finalization(st.ffg, balances, total)
        for cp in justified:
            self.sim.emit("justify", st.vid, block=fmt_digest(cp.block), index=cp.index)
        for cp in finalized:
            self.sim.emit("finalize", st.vid, block=fmt_digest(cp.block), index=cp.index)
        return justified, finalized

    def make_proposal(self, vid: int, slot: int, parent: int) -> Block:
        """由 vid 在 parent 之上构造槽 slot 的区块并加入其视图，提议者的链头随即指向新块"""
        block = make_block(self.sim.store[parent], slot, vid)
        self.sim.store.add(block)
        st = self.validators[vid]
        st.view.accept_block(block)
        self.set_head(st, block.digest)
        return block

    def publish_proposal(self, proposal: Proposal, private: bool = False) -> None:
        """输出 propose 记录；非私有时广播"""
        block = proposal.block
        self.sim.emit("propose", block.proposer, block=fmt_digest(block.digest),
                      parent=fmt_digest(block.parent), private=True if private else None)
        if not private:
            self.sim.broadcast(block.proposer, proposal)

    def publish_vote(self, vote: VoteMessage, private: bool = False) -> None:
        """投票者接受自己的投票、输出记录；非私有时广播"""
        self.validators[vote.voter].view.accept_vote(vote)
        self.sim.note_vote(vote)
        self.sim.emit(
            vote_record_kind(vote), vote.voter,
            head=fmt_digest(vote.head) if vote.has_head else None,
            source=fmt_digest(vote.source.block) if vote.source else None,
            source_index=vote.source.index if vote.source else None,
            target=fmt_digest(vote.target.block) if vote.target else None,
            target_index=vote.target.index if vote.target else None,
        )
        if not private:
            self.sim.broadcast(vote.voter, vote)

    def finish(self) -> None:
        """运行结束：输出罚没记录"""
        if not self.kind.has_ffg:
            return
        records = detect_slashing(self.sim.sent_votes(), self.sim.store.blocks,
                                  three_sf=self.kind is ProtocolKind.THREE_SF)
        for rec in records:
            self.sim.emit("slash", rec.validator, condition=rec.condition.value,
                          first=link_label(rec.first), second=link_label(rec.second))


def vote_record_kind(vote: VoteMessage) -> str:
    if vote.has_head:
        return "vote"
    return "ack" if vote.is_ack else "ffg-vote"


def link_label(vote: VoteMessage) -> str:
    """链接的紧凑文本：源序号:源区块-目标序号:目标区块；确认写作 ack-目标序号:目标区块"""
    if vote.is_ack:
        return f"ack-{vote.target.index}:{fmt_digest(vote.target.block)}"
    s, t = vote.link
    return f"{s.index}:{fmt_digest(s.block)}-{t.index}:{fmt_digest(t.block)}"
