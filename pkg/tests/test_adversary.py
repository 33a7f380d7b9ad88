"""
攻击策略测试：注册表、参数校验、重组脚本与模棱两可
"""

import pytest
import sys
import os
from dataclasses import replace

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.adversary import (
    AttackStrategy, DelayControl, Equivocation, ExAnteTwoReorg, KReorg, balancing_split,
    list_strategies, make_strategy,
)
from finality_sim.analysis.config import ScenarioConfig
from finality_sim.analysis.runner import run_scenario
from finality_sim.analysis.suite import delay_control_cases, ex_ante_cases, k_reorg_cases, run_case
from finality_sim.errors import ConfigError, ScriptError
from finality_sim.protocols import AdversaryHooks, EngineParams, ProtocolKind, Simulation
from finality_sim.stake.registry import ValidatorRegistry


class TestRegistry:
    """策略注册表测试"""

    def test_list(self):
        """测试可用策略"""
        assert list_strategies() == [
            "none", "ex-ante-reorg", "k-reorg", "withhold", "balancing", "equivocate", "delay-control",
        ]

    def test_make(self):
        """测试按名创建"""
        assert isinstance(make_strategy("ex-ante-reorg", [0, 1]), ExAnteTwoReorg)
        assert isinstance(make_strategy("equivocate", [0]), Equivocation)
        none = make_strategy("none")
        assert type(none) is AdversaryHooks
        assert not isinstance(none, AttackStrategy)

    def test_ex_ante_other_depth_uses_k_reorg(self):
        """测试 k ≠ 2 的事前重组改用 k 重组构造"""
        strategy = make_strategy("ex-ante-reorg", [0, 1, 2, 3, 4], k=3)
        assert isinstance(strategy, KReorg)

    def test_unknown(self):
        """测试未知策略"""
        with pytest.raises(ValueError):
            make_strategy("selfish-mining")

    def test_parameter_bounds(self):
        """测试攻击参数越界"""
        with pytest.raises(ConfigError) as exc:
            make_strategy("withhold", [0], slot=0)
        assert exc.value.field == "attack.slot"
        with pytest.raises(ConfigError):
            make_strategy("k-reorg", [0], k=0)
        with pytest.raises(ConfigError):
            make_strategy("delay-control", [0], pi=0)
        with pytest.raises(ConfigError):
            DelayControl([0], slot=2)

    def test_balancing_split(self):
        """测试前 ⌊c/2⌋ 个成员提前看到区块"""
        assert balancing_split([5, 1, 3]) == ((1,), (3, 5))
        assert balancing_split([4, 3, 2, 1]) == ((1, 2), (3, 4))
        assert balancing_split([]) == ((), ())


class TestAttach:
    """接入模拟器时的校验"""

    def simulation(self, strategy, adversarial=(), slots=10):
        registry = ValidatorRegistry.from_stakes([32] * 6, adversarial=adversarial)
        return Simulation(EngineParams(kind=ProtocolKind.GOLDFISH), registry, slots=slots, adversary=strategy)

    def test_controlled_must_be_adversarial(self):
        """测试受控验证者必须在注册表中标为敌手"""
        with pytest.raises(ConfigError) as exc:
            self.simulation(make_strategy("withhold", [0]))
        assert exc.value.field == "adversary.ids"

    def test_attack_slot_within_run(self):
        """测试攻击槽不能超出运行范围"""
        with pytest.raises(ConfigError):
            self.simulation(make_strategy("withhold", [0], slot=12), adversarial=[0], slots=10)

    def test_inert_strategy(self):
        """测试没有受控验证者时脚本不执行"""
        sim = self.simulation(make_strategy("withhold", []))
        trace = sim.run()
        assert sim.adversary.outcome.success is False
        assert [r for r in trace if r.kind == "attack"]
        assert not [r for r in trace if r.get("private") == "1"]

    def test_unscripted_needs_proposer(self):
        """测试非脚本模式找不到受控提议者时报错"""
        registry = ValidatorRegistry.from_stakes([1] + [2048] * 5, adversarial=[0])
        with pytest.raises(ScriptError):
            Simulation(EngineParams(kind=ProtocolKind.GOLDFISH), registry, slots=6,
                       adversary=make_strategy("withhold", [0], slot=6, scripted=False))

    def test_k_reorg_needs_light_validator(self):
        """测试 k ≥ 2 的脚本委员会需要一个较轻的诚实验证者"""
        config = ScenarioConfig(protocol="gasper-lite", n=64, slots=12, adversary="k-reorg",
                                adversary_ids=[0, 1, 2], attack_slot=5, attack_k=2)
        with pytest.raises(ScriptError):
            run_scenario(config)


class TestReorgs:
    """重组脚本测试"""

    @pytest.mark.parametrize("case", ex_ante_cases(), ids=lambda c: c.name)
    def test_ex_ante(self, case):
        """测试事前 2 重组在 Gasper-lite 上成功、在 Goldfish 上失败"""
        result = run_case(case, seed=0)
        assert result.ok, result.format_line()

    def test_ex_ante_orphans_two_blocks(self):
        """测试事前重组孤立槽 s+1、s+2 的两个诚实区块"""
        result = run_scenario(ex_ante_cases()[0].config)
        outcome = result.outcome
        assert outcome.success
        assert outcome.depth == 2
        assert len(outcome.orphaned) == 2
        assert result.report.max_reorg_depth == 2

    @pytest.mark.parametrize("case", k_reorg_cases(), ids=lambda c: c.name)
    def test_k_reorg_threshold(self, case):
        """测试 2k−1 个受控验证者恰好足够"""
        result = run_case(case, seed=0)
        assert result.ok, result.format_line()

    @pytest.mark.parametrize("case", delay_control_cases(), ids=lambda c: c.name)
    def test_delay_control(self, case):
        """测试投票窗口与异步窗口长度的关系"""
        result = run_case(case, seed=0)
        assert result.ok, result.format_line()

    @pytest.mark.slow
    @pytest.mark.parametrize("case", k_reorg_cases(), ids=lambda c: c.name)
    def test_k_reorg_threshold_seeds(self, case):
        """测试 k 重组阈值在 20 个种子上都成立"""
        bad = [r.format_line() for r in (run_case(case, seed) for seed in range(20)) if not r.ok]
        assert bad == []

    @pytest.mark.slow
    def test_goldfish_resists_ex_ante_reorg(self):
        """测试 100 个种子、每个 50 个槽的 Goldfish 上事前重组不孤立任何诚实区块"""
        config = replace(ex_ante_cases()[1].config, slots=50)
        for seed in range(100):
            result = run_scenario(config, seed=seed)
            assert not result.outcome.success, seed
            assert result.outcome.orphaned == (), seed

    @pytest.mark.slow
    @pytest.mark.parametrize("case", delay_control_cases(), ids=lambda c: c.name)
    def test_delay_control_seeds(self, case):
        """测试投票窗口与异步窗口的关系在 50 个种子上都成立"""
        bad = [r.format_line() for r in (run_case(case, seed) for seed in range(50)) if not r.ok]
        assert bad == []

    def test_withhold_single_block_fails_on_goldfish(self):
        """测试单个受控验证者扣留一个槽不能重组 Goldfish"""
        config = ScenarioConfig(protocol="goldfish", n=8, slots=10, adversary="withhold",
                                adversary_ids=[0], attack_slot=5, attack_k=1)
        result = run_scenario(config)
        assert result.outcome.strategy == "withhold"
        assert not result.outcome.success
        private = [r for r in result.trace if r.kind == "propose" and r.get("private") == "1"]
        assert len(private) == 1 and private[0].slot == 5


class TestEquivocation:
    """模棱两可测试"""

    def test_head_votes_flagged(self):
        """测试 Goldfish 上的冲突头投票被标记"""
        config = ScenarioConfig(protocol="goldfish", n=6, slots=8, adversary="equivocate",
                                adversary_ids=[0, 1], attack_slot=4)
        result = run_scenario(config)
        assert result.outcome.success
        assert not [r for r in result.trace if r.kind == "slash"]

    def test_ffg_equivocation_is_slashable(self):
        """测试 SSF 上同一目标高度的两张组合投票触发 double 罚没"""
        config = ScenarioConfig(protocol="ssf", n=6, slots=6, adversary="equivocate",
                                adversary_ids=[0, 1], attack_slot=3)
        result = run_scenario(config)
        assert result.outcome.success
        slashes = [r for r in result.trace if r.kind == "slash"]
        assert {r.actor for r in slashes} == {0, 1}
        assert {r.get("condition") for r in slashes} == {"double"}
        assert result.report.slashable == [0, 1]
        assert not result.audit.safety_violated


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
