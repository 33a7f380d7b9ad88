"""
内置攻击套件

每个用例是一份场景配置加上预期结果（是否成功、成功时的重组深度）。
套件按种子逐个运行并与预期比对。
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

from tqdm import tqdm

from ..adversary.strategies import AttackOutcome
from .config import ScenarioConfig
from .runner import run_scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteCase:
    """
    套件用例
    """
    name: str
    config: ScenarioConfig
    expect_success: bool
    expect_depth: Optional[int] = None      # 成功时的重组深度


@dataclass
class CaseResult:
    case: SuiteCase
    seed: int
    outcome: Optional[AttackOutcome]
    reorg_depth: int                        # 分析侧独立测得的深度

    @property
    def ok(self) -> bool:
        if self.outcome is None:
            return False
        if self.outcome.success != self.case.expect_success:
            return False
        if self.case.expect_success and self.case.expect_depth is not None:
            return self.outcome.depth == self.reorg_depth == self.case.expect_depth
        return True

    def format_line(self) -> str:
        got = "-" if self.outcome is None else (
            f"{'成功' if self.outcome.success else '失败'} 深度 {self.outcome.depth}")
        want = "成功" if self.case.expect_success else "失败"
        if self.case.expect_success and self.case.expect_depth is not None:
            want += f" 深度 {self.case.expect_depth}"
        mark = "✓" if self.ok else "✗"
        return f"{mark} {self.case.name:<32} 种子 {self.seed:<4} 预期 {want:<10} 实际 {got}"


@dataclass
class SuiteReport:
    results: List[CaseResult] = field(default_factory=list)

    @property
    def mismatches(self) -> List[CaseResult]:
        return [r for r in self.results if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def format_result(self) -> str:
        lines = ["=" * 60, "攻击套件", "=" * 60]
        lines += [r.format_line() for r in self.results]
        lines.append("-" * 60)
        lines.append(f"{len(self.results) - len(self.mismatches)}/{len(self.results)} 与预期一致")
        lines.append("=" * 60)
        return "\n".join(lines)


# ============================================================================
# 内置用例
# ============================================================================

def _ids(count: int) -> List[int]:
    return list(range(count))


def ex_ante_cases() -> List[SuiteCase]:
    """事前 2 重组：Gasper-lite 上成功孤立两个区块，Goldfish 上失败"""
    return [
        SuiteCase("ex-ante/gasper-lite", ScenarioConfig(
            protocol="gasper-lite", n=64, slots=12, adversary="ex-ante-reorg",
            adversary_ids=_ids(2), attack_slot=5), True, 2),
        SuiteCase("ex-ante/goldfish", ScenarioConfig(
            protocol="goldfish", n=16, slots=12, adversary="ex-ante-reorg",
            adversary_ids=_ids(2), attack_slot=5), False),
    ]


def k_reorg_cases(ks: Iterable[int] = (1, 2, 3)) -> List[SuiteCase]:
    """k 重组：2k−1 个受控验证者成功，2k−2 个失败"""
    stakes = [32] * 63 + [16]
    cases = []
    for k in ks:
        for controlled, success in ((2 * k - 1, True), (2 * k - 2, False)):
            cases.append(SuiteCase(f"k-reorg/k={k}/a={controlled}", ScenarioConfig(
                protocol="gasper-lite", n=64, stakes=list(stakes), slots=12,
                adversary="k-reorg", adversary_ids=_ids(controlled), attack_slot=5, attack_k=k),
                success, k if success else None))
    return cases


def delay_control_cases() -> List[SuiteCase]:
    """异步窗口：η ≤ π 时少数敌手可以重组，η = π+2 时不能"""
    def case(name, protocol, eta, pi, success):
        return SuiteCase(name, ScenarioConfig(
            protocol=protocol, n=8, eta=eta, slots=12, adversary="delay-control",
            adversary_ids=_ids(3), attack_slot=4, attack_pi=pi), success)

    return [
        case("delay-control/goldfish/π=1", "goldfish", 1, 1, True),
        case("delay-control/rlmd/η=3/π=1", "rlmd", 3, 1, False),
        case("delay-control/rlmd/η=2/π=2", "rlmd", 2, 2, True),
        case("delay-control/rlmd/η=4/π=2", "rlmd", 4, 2, False),
    ]


def builtin_cases() -> List[SuiteCase]:
    return ex_ante_cases() + k_reorg_cases() + delay_control_cases()


# ============================================================================
# 运行
# ============================================================================

def run_case(case: SuiteCase, seed: int) -> CaseResult:
    result = run_scenario(case.config, seed=seed)
    return CaseResult(case, seed, result.outcome, result.report.max_reorg_depth)


def run_suite(cases: Optional[Sequence[SuiteCase]] = None, seeds: Iterable[int] = (0,),
              quiet: bool = False,
              progress: Callable[..., Iterable] = tqdm) -> SuiteReport:
    """
    运行攻击套件

    Args:
        cases: 用例（默认内置用例）
        seeds: 每个用例运行的种子
        quiet: 关闭进度条
        progress: 进度条包装

    Returns:
        SuiteReport
    """
    cases = list(cases) if cases is not None else builtin_cases()
    jobs = [(case, seed) for case in cases for seed in seeds]
    report = SuiteReport()
    for case, seed in progress(jobs, desc="attack-suite", unit="run", disable=quiet):
        result = run_case(case, seed)
        if not result.ok:
            logger.warning("%s 种子 %d 与预期不符", case.name, seed)
        report.results.append(result)
    return report
