"""
pBFT 运行器

在共享的离散事件调度器上驱动一组副本：每条消息对每个接收者独立抽取 [1, max_delay] 的延迟，
客户端请求按固定间隔广播给全部副本。运行结束后比对诚实副本的执行日志。
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..errors import ConfigError
from ..sim.rng import SplitMix64, sub_seed
from ..sim.scheduler import Priority, Scheduler
from ..sim.trace import SIMULATOR, TraceRecord
from .replica import Replica, Request, Transport, faults_tolerated, make_replica, request_digest

logger = logging.getLogger(__name__)


def check_pbft_safety(executed: Mapping[int, Sequence[int]]) -> List[str]:
    """
    比对执行日志：任意两个副本在同一序号上执行的摘要必须相同

    Returns:
        违规描述列表（为空表示安全）
    """
    violations = []
    seen: Dict[int, Tuple[int, int]] = {}
    for rid in sorted(executed):
        for i, d in enumerate(executed[rid]):
            seq = i + 1
            if seq not in seen:
                seen[seq] = (rid, d)
            elif seen[seq][1] != d:
                other, od = seen[seq]
                violations.append(f"序号 {seq}: 副本 {other} 执行 {od:016x}，副本 {rid} 执行 {d:016x}")
    return violations


@dataclass
class PbftRunResult:
    """
    一次 pBFT 运行的结果
    """
    seed: int
    n: int
    f: int
    byzantine: Dict[int, str]
    executed: Dict[int, List[int]]          # 诚实副本 -> 执行日志
    views: Dict[int, int]                   # 诚实副本 -> 结束时的视图
    trace: List[TraceRecord] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return not self.violations

    def format_result(self) -> str:
        lines = ["=" * 60, f"pBFT 运行 (seed={self.seed}, n={self.n}, f={self.f})", "=" * 60]
        if self.byzantine:
            lines.append("拜占庭副本: " + ", ".join(f"{r}:{b}" for r, b in sorted(self.byzantine.items())))
        for rid in sorted(self.executed):
            lines.append(f"副本 {rid}: 视图 {self.views[rid]}, 已执行 {len(self.executed[rid])}")
        lines.append(f"安全: {'是' if self.safe else '否'}")
        for v in self.violations:
            lines.append(f"  {v}")
        lines.append("=" * 60)
        return "\n".join(lines)


class PbftCluster(Transport):
    """
    调度器驱动的副本集合
    """

    def __init__(self, n: int, seed: int = 0, max_delay: int = 3,
                 byzantine: Optional[Mapping[int, str]] = None):
        """
        Args:
            n: 副本数
            seed: 延迟种子
            max_delay: 单条消息的最大延迟（tick）
            byzantine: 副本编号 -> 行为名

        Raises:
            ConfigError: 参数非法或拜占庭副本超过 f
        """
        if n < 1:
            raise ConfigError(f"副本数必须为正: {n}", field="n")
        if max_delay < 1:
            raise ConfigError(f"最大延迟必须为正: {max_delay}", field="max_delay")
        self.n = n
        self.f = faults_tolerated(n)
        self.byzantine = dict(byzantine or {})
        if len(self.byzantine) > self.f:
            raise ConfigError(f"拜占庭副本 {len(self.byzantine)} 个，超过 f={self.f}", field="byzantine")
        if any(r < 0 or r >= n for r in self.byzantine):
            raise ConfigError(f"拜占庭副本编号越界: {sorted(self.byzantine)}", field="byzantine")
        self.seed = seed
        self.max_delay = max_delay
        self.rng = SplitMix64(sub_seed(seed, "pbft-delay", 0))
        self.scheduler = Scheduler()
        self.trace: List[TraceRecord] = []
        try:
            self.replicas: List[Replica] = [
                make_replica(self.byzantine.get(r, "honest"), r, n, self, delta=max_delay)
                for r in range(n)
            ]
        except ValueError as e:
            raise ConfigError(str(e), field="byzantine") from e

    @property
    def honest_ids(self) -> List[int]:
        return [r for r in range(self.n) if r not in self.byzantine]

    # Transport

    def send(self, sender, msg, recipients=None):
        targets = sorted(recipients) if recipients is not None else [r for r in range(self.n) if r != sender]
        now = self.scheduler.now
        for r in targets:
            delay = self.rng.between(1, self.max_delay)
            self.scheduler.at(now + delay, Priority.DELIVERY, sender, self.replicas[r].deliver, msg)

    def emit(self, kind, actor, **payload):
        now = self.scheduler.now
        self.trace.append(TraceRecord.make(now, now, 0, actor, kind, **payload))

    def set_timer(self, rid, delay, token):
        self.scheduler.at(self.scheduler.now + delay, Priority.HOUSEKEEPING, rid,
                          self.replicas[rid].on_timeout, token)

    # 驱动

    def submit(self, digest: int, at: int) -> None:
        """在 tick at 把请求同时交给全部副本"""
        self.scheduler.at(at, Priority.PHASE, SIMULATOR, self._submit, digest)

    def _submit(self, digest: int) -> None:
        for replica in self.replicas:
            replica.on_request(Request(digest))

    def run(self, horizon: int) -> PbftRunResult:
        self.scheduler.run_until(horizon)
        executed = {r: list(self.replicas[r].executed) for r in self.honest_ids}
        result = PbftRunResult(
            seed=self.seed, n=self.n, f=self.f, byzantine=dict(self.byzantine),
            executed=executed,
            views={r: self.replicas[r].view for r in self.honest_ids},
            trace=self.trace,
            violations=check_pbft_safety(executed),
        )
        if result.violations:
            logger.error("seed %d: 发现 %d 处安全违规", self.seed, len(result.violations))
        return result


def run_pbft_schedule(seed: int, n: int = 4, requests: int = 3,
                      byzantine: Optional[Mapping[int, str]] = None,
                      max_delay: int = 3, interval: int = 2,
                      horizon: int = 400) -> PbftRunResult:
    """
    随机延迟调度下运行一次 pBFT

    Args:
        seed: 种子
        n: 副本数
        requests: 客户端请求数
        byzantine: 副本编号 -> 行为名
        max_delay: 最大消息延迟
        interval: 请求提交间隔（tick）
        horizon: 运行到的 tick

    Returns:
        PbftRunResult
    """
    cluster = PbftCluster(n, seed=seed, max_delay=max_delay, byzantine=byzantine)
    for i in range(requests):
        cluster.submit(request_digest(i), at=i * interval)
    return cluster.run(horizon)
