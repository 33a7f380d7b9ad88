"""
pBFT 副本

三阶段协议：
- PRE-PREPARE：主副本为请求分配 (v, s, d)，备份副本在同一 (v, s) 上只接受一个摘要
- PREPARE：接受预准备后广播；收到 2f 个来自不同备份副本的匹配 PREPARE 即 prepared
- COMMIT：prepared 后广播；收到 2f+1 个匹配 COMMIT 即本地提交，按序号顺序执行
- 任何视图中来自 2f+1 个不同副本的匹配 COMMIT 构成提交证书：落后或摘要被模棱两可的副本
  不需要自己 prepared 也能据此提交（旧视图的 COMMIT 同样保留）

视图切换（简化）：进度计时器超时后进入 v+1 并广播携带 prepared 证书的 VIEW-CHANGE；
新主副本收齐 2f+1 个后按序号重新提议视图最高的证书（空缺补空请求），随后继续处理待定请求。
收到 f+1 个更高视图的 VIEW-CHANGE 的副本直接加入。
"""

from __future__ import annotations
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Type

from ..chain.block import fmt_digest
from ..sim.rng import fnv1a64

logger = logging.getLogger(__name__)

NULL_DIGEST = 0                 # 视图切换中填补空缺序号的空请求
WATERMARK_WINDOW = 64           # 已执行前缀之后允许的序号窗口
BASE_TIMEOUT_DELTAS = 4         # 首次超时 = 4Δ，此后每次连续视图切换翻倍
EQUIVOCATION_MASK = 0xFFFF_FFFF_0000_0000


def faults_tolerated(n: int) -> int:
    """n 个副本可容忍的拜占庭副本数 f = ⌊(n-1)/3⌋"""
    return max(0, (n - 1) // 3)


def primary_of(view: int, n: int) -> int:
    return view % n


def request_digest(index: int) -> int:
    """第 index 个客户端请求的摘要（非零）"""
    return fnv1a64(f"request:{index}".encode("utf-8")) or 1


# ============================================================================
# 消息
# ============================================================================

@dataclass(frozen=True)
class Request:
    digest: int


@dataclass(frozen=True)
class PrePrepare:
    view: int
    seq: int
    digest: int
    sender: int


@dataclass(frozen=True)
class Prepare:
    view: int
    seq: int
    digest: int
    sender: int


@dataclass(frozen=True)
class Commit:
    view: int
    seq: int
    digest: int
    sender: int


@dataclass(frozen=True)
class PreparedCert:
    """prepared 证书：副本在视图 view 中为序号 seq 收集到 prepared 的摘要"""
    view: int
    seq: int
    digest: int


@dataclass(frozen=True)
class ViewChange:
    view: int                               # 目标视图
    sender: int
    prepared: Tuple[PreparedCert, ...] = ()


@dataclass(frozen=True)
class NewView:
    view: int
    sender: int
    reproposed: Tuple[PrePrepare, ...] = ()


# ============================================================================
# 日志
# ============================================================================

@dataclass
class LogEntry:
    """
    (v, s) 的日志项

    PREPARE 与 COMMIT 按摘要分桶存放，预准备到达前的消息同样保留。
    """
    digest: Optional[int] = None                               # 已接受的摘要
    prepares: Dict[int, Set[int]] = field(default_factory=dict)  # 摘要 -> 发送者
    commits: Dict[int, Set[int]] = field(default_factory=dict)
    prepared: bool = False
    committed_local: bool = False

    def prepare_count(self, digest: int) -> int:
        return len(self.prepares.get(digest, ()))

    def commit_count(self, digest: int) -> int:
        return len(self.commits.get(digest, ()))


class Transport(ABC):
    """
    副本与外界的接口：发送消息、输出轨迹、设置计时器
    """

    @abstractmethod
    def send(self, sender: int, msg: object, recipients: Optional[Sequence[int]] = None) -> None:
        """recipients 为 None 时发给除 sender 外的全部副本"""
        pass

    @abstractmethod
    def emit(self, kind: str, actor: int, **payload: object) -> None:
        pass

    @abstractmethod
    def set_timer(self, rid: int, delay: int, token: Tuple[int, int]) -> None:
        pass


@dataclass
class Outbox(Transport):
    """
    只记录不投递的传输层，单步驱动副本时使用
    """
    sent: List[Tuple[int, object, Optional[Tuple[int, ...]]]] = field(default_factory=list)
    records: List[Tuple[str, int, Dict[str, object]]] = field(default_factory=list)
    timers: List[Tuple[int, int, Tuple[int, int]]] = field(default_factory=list)

    def send(self, sender, msg, recipients=None):
        self.sent.append((sender, msg, tuple(recipients) if recipients is not None else None))

    def emit(self, kind, actor, **payload):
        self.records.append((kind, actor, payload))

    def set_timer(self, rid, delay, token):
        self.timers.append((rid, delay, token))

    def messages(self, kind: type) -> List[object]:
        return [msg for _, msg, _ in self.sent if isinstance(msg, kind)]

    def kinds(self) -> List[str]:
        return [kind for kind, _, _ in self.records]


# ============================================================================
# 副本
# ============================================================================

class Replica:
    """
    诚实 pBFT 副本
    """
    behaviour = "honest"

    def __init__(self, rid: int, n: int, transport: Transport, delta: int = 1):
        """
        Args:
            rid: 副本编号
            n: 副本总数
            transport: 传输层
            delta: 消息延迟上界（计时器以它为单位）
        """
        self.rid = rid
        self.n = n
        self.f = faults_tolerated(n)
        self.transport = transport
        self.delta = delta
        self.view = 0
        self.active = True              # 当前视图已生效（未处于视图切换中）
        self.log: Dict[Tuple[int, int], LogEntry] = {}
        self.committed: Dict[int, int] = {}     # 序号 -> 本地提交的摘要
        self.executed: List[int] = []
        self.pending: List[int] = []
        self.assigned: Set[int] = set()         # 主副本在当前视图已分配序号的摘要
        self.next_seq = 1
        self.evidence: List[PrePrepare] = []
        self.view_changes: Dict[int, Dict[int, ViewChange]] = {}
        self.vc_sent = 0
        self.new_view_sent: Set[int] = set()
        self.future: List[PrePrepare] = []
        self.timeout_level = 0
        self.timer_token = 0
        self.timer_running = False

    # ------------------------------------------------------------------
    # 查询
    # ------------------------------------------------------------------

    @property
    def primary(self) -> int:
        return primary_of(self.view, self.n)

    @property
    def is_primary(self) -> bool:
        return self.primary == self.rid

    @property
    def quorum(self) -> int:
        return 2 * self.f + 1

    def entry(self, view: int, seq: int) -> LogEntry:
        return self.log.setdefault((view, seq), LogEntry())

    def timeout(self) -> int:
        return BASE_TIMEOUT_DELTAS * self.delta * (2 ** self.timeout_level)

    def prepared_certificates(self) -> Tuple[PreparedCert, ...]:
        """每个序号取视图最高的 prepared 证书"""
        best: Dict[int, PreparedCert] = {}
        for (v, s), e in self.log.items():
            if e.prepared and e.digest is not None and (s not in best or best[s].view < v):
                best[s] = PreparedCert(v, s, e.digest)
        return tuple(best[s] for s in sorted(best))

    # ------------------------------------------------------------------
    # 输入
    # ------------------------------------------------------------------

    def deliver(self, msg: object) -> None:
        if isinstance(msg, Request):
            self.on_request(msg)
        elif isinstance(msg, PrePrepare):
            self.on_preprepare(msg)
        elif isinstance(msg, Prepare):
            self.on_prepare(msg)
        elif isinstance(msg, Commit):
            self.on_commit(msg)
        elif isinstance(msg, ViewChange):
            self.on_view_change(msg)
        elif isinstance(msg, NewView):
            self.on_new_view(msg)
        else:
            raise TypeError(f"未知的 pBFT 消息: {type(msg).__name__}")

    def on_request(self, req: Request) -> None:
        d = req.digest
        if d in self.pending or d in self.executed:
            return
        self.pending.append(d)
        if self.is_primary and self.active:
            self.propose(d)
        if not self.timer_running:
            self.arm_timer()

    def propose(self, digest: int) -> PrePrepare:
        """主副本为摘要分配下一个序号并广播预准备"""
        seq = self.next_seq
        self.next_seq += 1
        self.assigned.add(digest)
        self.entry(self.view, seq).digest = digest
        pp = PrePrepare(self.view, seq, digest, self.rid)
        self._emit_phase("pre-prepare", pp)
        self.transport.send(self.rid, pp)
        return pp

    def preprepare_fault(self, msg: PrePrepare) -> Optional[str]:
        """预准备不能接受的原因；可以接受时返回 None"""
        if msg.view != self.view or not self.active:
            return "view"
        if msg.sender != primary_of(msg.view, self.n):
            return "sender"
        if msg.seq < 1 or msg.seq > len(self.executed) + WATERMARK_WINDOW:
            return "seq"
        accepted = self.log.get((msg.view, msg.seq))
        if accepted is not None and accepted.digest is not None and accepted.digest != msg.digest:
            return "conflict"
        return None

    def on_preprepare(self, msg: PrePrepare) -> bool:
        """
        处理预准备

        Returns:
            是否接受（重复的同一预准备视为接受）
        """
        if msg.view > self.view or (msg.view == self.view and not self.active):
            self.future.append(msg)
            return False
        reason = self.preprepare_fault(msg)
        if reason is not None:
            if reason == "conflict":
                self.evidence.append(msg)
            self.transport.emit("reject", self.rid, view=msg.view, seq=msg.seq,
                                digest=fmt_digest(msg.digest), reason=reason)
            logger.debug("副本 %d 拒绝预准备 (%d, %d): %s", self.rid, msg.view, msg.seq, reason)
            return False
        e = self.entry(msg.view, msg.seq)
        if e.digest == msg.digest:
            return True
        e.digest = msg.digest
        if not self.is_primary:
            self.send_prepare(msg.view, msg.seq, msg.digest)
        self.check(msg.view, msg.seq)
        return True

    def send_prepare(self, view: int, seq: int, digest: int) -> None:
        prepare = Prepare(view, seq, digest, self.rid)
        self.entry(view, seq).prepares.setdefault(digest, set()).add(self.rid)
        self._emit_phase("prepare", prepare)
        self.transport.send(self.rid, prepare)

    def on_prepare(self, msg: Prepare) -> None:
        if msg.view < self.view or msg.sender == primary_of(msg.view, self.n):
            return
        self.entry(msg.view, msg.seq).prepares.setdefault(msg.digest, set()).add(msg.sender)
        self.check(msg.view, msg.seq)

    def on_commit(self, msg: Commit) -> None:
        self.entry(msg.view, msg.seq).commits.setdefault(msg.digest, set()).add(msg.sender)
        self.check(msg.view, msg.seq)
        self.check_commit_certificate(msg.view, msg.seq)

    def check_commit_certificate(self, view: int, seq: int) -> None:
        """(v, s) 上某个摘要有 2f+1 个 COMMIT 时直接本地提交"""
        if seq in self.committed:
            return
        e = self.log.get((view, seq))
        if e is None:
            return
        for d in sorted(e.commits):
            if e.commit_count(d) >= self.quorum:
                logger.debug("副本 %d 由视图 %d 的提交证书提交序号 %d", self.rid, view, seq)
                self.committed[seq] = d
                self.try_execute()
                return

    def check(self, view: int, seq: int) -> None:
        """推进 (v, s) 的 prepared / 本地提交状态"""
        if view != self.view or not self.active:
            return
        e = self.entry(view, seq)
        d = e.digest
        if d is None:
            return
        if not e.prepared and e.prepare_count(d) >= 2 * self.f:
            e.prepared = True
            self.transport.emit("prepared", self.rid, view=view, seq=seq, digest=fmt_digest(d))
            commit = Commit(view, seq, d, self.rid)
            e.commits.setdefault(d, set()).add(self.rid)
            self._emit_phase("commit", commit)
            self.transport.send(self.rid, commit)
        if e.prepared and not e.committed_local and e.commit_count(d) >= self.quorum:
            e.committed_local = True
            self.committed.setdefault(seq, d)
            self.try_execute()

    def try_execute(self) -> None:
        """按序号顺序执行已本地提交的请求"""
        progressed = False
        while len(self.executed) + 1 in self.committed:
            seq = len(self.executed) + 1
            d = self.committed[seq]
            self.executed.append(d)
            if d in self.pending:
                self.pending.remove(d)
            self.transport.emit("execute", self.rid, view=self.view, seq=seq, digest=fmt_digest(d))
            progressed = True
        if progressed:
            self.timeout_level = 0
            self.timer_running = False
            self.arm_timer()

    # ------------------------------------------------------------------
    # 视图切换
    # ------------------------------------------------------------------

    def arm_timer(self, force: bool = False) -> None:
        if not self.pending and not force:
            return
        self.timer_token += 1
        self.timer_running = True
        self.transport.set_timer(self.rid, self.timeout(), (self.view, self.timer_token))

    def on_timeout(self, token: Tuple[int, int]) -> None:
        if token[1] != self.timer_token:
            return
        self.timer_running = False
        if not self.pending and (self.active or not self.view_change_joined()):
            return
        logger.info("副本 %d 在视图 %d 超时", self.rid, self.view)
        self.start_view_change(self.view + 1)

    def start_view_change(self, view: int) -> None:
        if view <= self.vc_sent:
            return
        self.vc_sent = view
        self.view = view
        self.active = False
        self.timeout_level += 1
        vc = ViewChange(view, self.rid, self.prepared_certificates())
        self.view_changes.setdefault(view, {})[self.rid] = vc
        self.transport.emit("view-change", self.rid, view=view, prepared=len(vc.prepared))
        self.transport.send(self.rid, vc)
        self.arm_timer(force=True)
        self.check_view_change(view)

    def view_change_joined(self) -> bool:
        """当前视图切换除自己外至少还有 f 个副本参与"""
        return len(self.view_changes.get(self.view, {})) >= self.f + 1

    def on_view_change(self, msg: ViewChange) -> None:
        if msg.view < self.view or (msg.view == self.view and self.active):
            return
        self.view_changes.setdefault(msg.view, {})[msg.sender] = msg
        self.check_view_change(msg.view)

    def check_view_change(self, view: int) -> None:
        votes = self.view_changes.get(view, {})
        if len(votes) >= self.f + 1 and view > self.vc_sent:
            self.start_view_change(view)
            return
        if (primary_of(view, self.n) == self.rid and len(votes) >= self.quorum
                and view == self.vc_sent and view not in self.new_view_sent):
            self.send_new_view(view, votes)

    def build_new_view(self, view: int, votes: Dict[int, ViewChange]) -> NewView:
        """按序号取视图最高的证书重新提议，空缺序号补空请求"""
        best: Dict[int, PreparedCert] = {}
        for vc in votes.values():
            for cert in vc.prepared:
                if cert.seq not in best or best[cert.seq].view < cert.view:
                    best[cert.seq] = cert
        top = max(best, default=0)
        reproposed = tuple(
            PrePrepare(view, s, best[s].digest if s in best else NULL_DIGEST, self.rid)
            for s in range(1, top + 1)
        )
        return NewView(view, self.rid, reproposed)

    def send_new_view(self, view: int, votes: Dict[int, ViewChange]) -> None:
        self.new_view_sent.add(view)
        nv = self.build_new_view(view, votes)
        self.transport.emit("new-view", self.rid, view=view, reproposed=len(nv.reproposed))
        logger.info("副本 %d 成为视图 %d 的主副本，重新提议 %d 个序号", self.rid, view, len(nv.reproposed))
        self.transport.send(self.rid, nv)
        self.enter_view(nv)

    def on_new_view(self, msg: NewView) -> None:
        if msg.view < self.view or (msg.view == self.view and self.active):
            return
        if msg.sender != primary_of(msg.view, self.n):
            return
        self.enter_view(msg)

    def enter_view(self, nv: NewView) -> None:
        self.view = nv.view
        self.vc_sent = max(self.vc_sent, nv.view)
        self.active = True
        self.assigned = set()
        for pp in nv.reproposed:
            if self.is_primary:
                self.entry(pp.view, pp.seq).digest = pp.digest
                self.assigned.add(pp.digest)
            else:
                self.on_preprepare(pp)
        self.next_seq = max(len(self.executed), max((pp.seq for pp in nv.reproposed), default=0)) + 1
        stashed, self.future = self.future, []
        for pp in stashed:
            if pp.view >= self.view:
                self.on_preprepare(pp)
        for (v, s) in sorted(k for k in self.log if k[0] == self.view):
            self.check(v, s)
        if self.is_primary:
            for d in list(self.pending):
                if d not in self.assigned:
                    self.propose(d)
        self.timer_running = False
        self.arm_timer()

    # ------------------------------------------------------------------

    def _emit_phase(self, kind: str, msg) -> None:
        self.transport.emit(kind, self.rid, view=msg.view, seq=msg.seq, digest=fmt_digest(msg.digest))


# ============================================================================
# 拜占庭行为
# ============================================================================

class SilentReplica(Replica):
    """崩溃副本：不处理任何消息"""
    behaviour = "silent"

    def deliver(self, msg: object) -> None:
        pass

    def on_request(self, req: Request) -> None:
        pass

    def on_timeout(self, token: Tuple[int, int]) -> None:
        pass


class EquivocatingPrimary(Replica):
    """主副本模棱两可：按接收者编号把备份副本分成两半，分别发送不同摘要"""
    behaviour = "equivocating-primary"

    def propose(self, digest: int) -> PrePrepare:
        seq = self.next_seq
        self.next_seq += 1
        self.assigned.add(digest)
        self.entry(self.view, seq).digest = digest
        backups = [r for r in range(self.n) if r != self.rid]
        split = (len(backups) + 1) // 2
        first = PrePrepare(self.view, seq, digest, self.rid)
        second = PrePrepare(self.view, seq, digest ^ EQUIVOCATION_MASK, self.rid)
        for group, pp in ((backups[:split], first), (backups[split:], second)):
            if group:
                self._emit_phase("pre-prepare", pp)
                self.transport.send(self.rid, pp, group)
        return first


class IndiscriminateBackup(Replica):
    """对见到的每个摘要都发送 PREPARE 与 COMMIT 的备份副本"""
    behaviour = "indiscriminate"

    def __init__(self, rid: int, n: int, transport: Transport, delta: int = 1):
        super().__init__(rid, n, transport, delta)
        self.echoed: Set[Tuple[int, int, int]] = set()

    def echo(self, view: int, seq: int, digest: int) -> None:
        key = (view, seq, digest)
        if key in self.echoed or primary_of(view, self.n) == self.rid:
            return
        self.echoed.add(key)
        for msg in (Prepare(view, seq, digest, self.rid), Commit(view, seq, digest, self.rid)):
            self._emit_phase("prepare" if isinstance(msg, Prepare) else "commit", msg)
            self.transport.send(self.rid, msg)

    def on_preprepare(self, msg: PrePrepare) -> bool:
        self.echo(msg.view, msg.seq, msg.digest)
        return True

    def on_prepare(self, msg: Prepare) -> None:
        super().on_prepare(msg)
        self.echo(msg.view, msg.seq, msg.digest)


REPLICA_BEHAVIOURS: Dict[str, Type[Replica]] = {
    "honest": Replica,
    "silent": SilentReplica,
    "equivocating-primary": EquivocatingPrimary,
    "indiscriminate": IndiscriminateBackup,
}


def make_replica(behaviour: str, rid: int, n: int, transport: Transport, delta: int = 1) -> Replica:
    """
    按行为名创建副本

    Raises:
        ValueError: 未知行为
    """
    if behaviour not in REPLICA_BEHAVIOURS:
        available = ", ".join(REPLICA_BEHAVIOURS.keys())
        raise ValueError(f"未知的副本行为: {behaviour}。可用行为: {available}")
    return REPLICA_BEHAVIOURS[behaviour](rid, n, transport, delta)


def list_behaviours() -> List[str]:
    return list(REPLICA_BEHAVIOURS.keys())
