"""
协议引擎测试：诚实运行下的增长、最终确定延迟、账本前缀与不活跃泄漏恢复
"""

import math
import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.analysis.config import ScenarioConfig
from finality_sim.analysis.detectors import (
    check_ledger_prefix, check_security, compare_traces, growth_intervals, reorg_depth, time_to_finality,
)
from finality_sim.analysis.runner import run_scenario
from finality_sim.chain.block import GENESIS, make_block
from finality_sim.chain.view import View
from finality_sim.errors import ConfigError, LedgerInvariantError, StalledSimulationError
from finality_sim.ffg.justification import FinalityRule
from finality_sim.ffg.leak import predict_recovery
from finality_sim.protocols import (
    EngineParams, ProtocolKind, Simulation, extract_ledgers, list_protocols, three_sf_pipeline_check,
)
from finality_sim.sim.clock import slot_start
from finality_sim.stake.registry import ValidatorRegistry


def run(**kwargs):
    return run_scenario(ScenarioConfig(**kwargs)).trace


def blocks_by_slot(trace):
    return {r.slot: r.get_digest("block") for r in trace if r.kind == "propose"}


class TestProtocolKind:
    """协议种类测试"""

    def test_parse(self):
        """测试协议名解析"""
        assert ProtocolKind.parse("3sf") is ProtocolKind.THREE_SF
        with pytest.raises(ConfigError) as exc:
            ProtocolKind.parse("tendermint")
        assert exc.value.field == "protocol"

    def test_phases_and_rules(self):
        """测试每槽阶段数与最终确定规则"""
        assert ProtocolKind.GOLDFISH.phases_per_slot == 3
        assert ProtocolKind.SSF.phases_per_slot == 4
        assert ProtocolKind.SSF.finality_rule is FinalityRule.SAME_SLOT
        assert ProtocolKind.THREE_SF.finality_rule is FinalityRule.PIPELINED
        assert ProtocolKind.GASPER_LITE.finality_rule is FinalityRule.CASPER
        assert not ProtocolKind.RLMD.has_ffg

    def test_effective_eta(self):
        """测试 Goldfish 固定 η=1，LMD 类固定 η=∞"""
        assert ProtocolKind.GOLDFISH.effective_eta(5) == 1
        assert ProtocolKind.LMD_VM.effective_eta(2) == math.inf
        assert ProtocolKind.RLMD.effective_eta(3) == 3

    def test_invalid_params(self):
        """测试非法 η"""
        with pytest.raises(ConfigError):
            EngineParams(kind=ProtocolKind.RLMD, eta=0)
        with pytest.raises(ConfigError):
            EngineParams(checkpoint_spacing=0)

    def test_registry(self):
        """测试协议注册表"""
        assert set(list_protocols()) == {"gasper-lite", "goldfish", "rlmd", "lmd-vm", "ssf", "3sf"}

    def test_gasper_needs_committees(self):
        """测试验证者少于纪元长度时 gasper-lite 拒绝运行"""
        params = EngineParams(kind=ProtocolKind.GASPER_LITE)
        with pytest.raises(ConfigError):
            Simulation(params, ValidatorRegistry.from_stakes([32] * 8))


class TestStall:
    """停滞检测测试"""

    def simulation(self):
        return Simulation(EngineParams(kind=ProtocolKind.GOLDFISH),
                          ValidatorRegistry.from_stakes([32] * 4), slots=3)

    def test_empty_queue_with_phases_left(self):
        """测试阶段尚未运行而事件队列已空时报停滞"""
        sim = self.simulation()
        assert sim.has_pending_phases()
        with pytest.raises(StalledSimulationError):
            sim.scheduler.run_until(slot_start(sim.slots + 1, sim.pps))

    def test_complete_run_is_not_stalled(self):
        """测试完整运行后全部阶段都已执行"""
        sim = self.simulation()
        sim.run()
        assert sim.phases_run == 3 * ProtocolKind.GOLDFISH.phases_per_slot
        assert not sim.has_pending_phases()


class TestLedgers:
    """账本前缀测试"""

    def test_extract_ledgers(self):
        """测试账本长度与前缀检查"""
        a = make_block(GENESIS, 1, 0)
        b = make_block(a, 2, 1)
        c = make_block(GENESIS, 3, 2)
        view = View()
        for blk in (a, b, c):
            view.accept_block(blk)
        pair = extract_ledgers(view, a.digest, b.digest)
        assert (pair.fin_len, pair.da_len) == (2, 3)
        with pytest.raises(LedgerInvariantError):
            extract_ledgers(view, c.digest, b.digest)
        with pytest.raises(LedgerInvariantError):
            extract_ledgers(view, GENESIS.digest, b.digest, conf_tip=c.digest)


class TestHonestRuns:
    """诚实运行测试"""

    @pytest.mark.parametrize("protocol", ["goldfish", "rlmd", "lmd-vm", "ssf", "3sf"])
    def test_chain_grows_every_slot(self, protocol):
        """测试同步诚实运行中每个槽链长加一且没有重组"""
        trace = run(protocol=protocol, n=6, eta=2, slots=8, seed=3)
        assert growth_intervals(trace, window=2).ok
        assert reorg_depth(trace) == 0
        assert check_ledger_prefix(trace) == []
        assert check_security(trace).safe
        last = [r for r in trace if r.kind == "confirm" and r.slot == 8]
        assert last and all(r.get_int("da_len") == 9 for r in last)

    def test_goldfish_equals_rlmd_eta_one(self):
        """测试 RLMD-GHOST(1) 与 Goldfish 轨迹逐条相同"""
        a = run(protocol="goldfish", n=5, slots=10, seed=7)
        b = run(protocol="rlmd", eta=1, n=5, slots=10, seed=7)
        assert compare_traces(a, b).equal

    def test_lmd_vm_equals_rlmd_eta_inf(self):
        """测试 RLMD-GHOST(∞) 与 LMD 视图合并轨迹逐条相同"""
        a = run(protocol="lmd-vm", n=5, slots=10, seed=7)
        b = run(protocol="rlmd", eta=math.inf, n=5, slots=10, seed=7)
        assert compare_traces(a, b).equal

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_eta_endpoints_across_seeds(self, seed):
        """测试 η=1 与 η=∞ 两端的轨迹等价在 20 个种子上都成立"""
        assert compare_traces(run(protocol="goldfish", n=6, slots=12, seed=seed),
                              run(protocol="rlmd", eta=1, n=6, slots=12, seed=seed)).equal
        assert compare_traces(run(protocol="lmd-vm", n=6, slots=12, seed=seed),
                              run(protocol="rlmd", eta=math.inf, n=6, slots=12, seed=seed)).equal

    def test_seed_changes_trace(self):
        """测试不同种子给出不同轨迹"""
        a = run(protocol="goldfish", n=8, slots=10, seed=1)
        b = run(protocol="goldfish", n=8, slots=10, seed=2)
        diff = compare_traces(a, b)
        assert not diff.equal
        assert diff.index is not None

    def test_sleepy_validator(self):
        """测试验证者离线再唤醒后账本仍然一致"""
        config = ScenarioConfig(protocol="goldfish", n=6, slots=12, seed=4, offline_ranges={2: (3, 5)})
        trace = run_scenario(config).trace
        assert check_ledger_prefix(trace) == []
        assert growth_intervals(trace, window=4).ok
        assert not [r for r in trace if r.kind == "confirm" and r.actor == 2 and 3 <= r.slot <= 6]


class TestFinality:
    """最终确定测试"""

    def test_gasper_latency(self):
        """测试 gasper-lite 纪元 0 的区块在槽 96 最终确定"""
        trace = run(protocol="gasper-lite", n=64, slots=96, seed=1)
        ttf = time_to_finality(trace)
        blocks = blocks_by_slot(trace)
        assert ttf[blocks[32]] == 64
        for s in range(1, 33):
            assert ttf[blocks[s]] == 96 - s
        assert blocks[33] not in ttf

    def test_ssf_single_slot(self):
        """测试 SSF 槽 t 的区块由槽 t 的确认在槽 t+1 开始、提议之前最终确定"""
        trace = run(protocol="ssf", n=4, slots=6, seed=2)
        ttf = time_to_finality(trace)
        blocks = blocks_by_slot(trace)
        assert set(ttf) == {blocks[s] for s in range(1, 6)}
        assert set(ttf.values()) == {1}
        finals = [r for r in trace if r.kind == "finalize"]
        assert finals and all(r.phase == 0 and r.slot == r.get_int("index") + 1 for r in finals)
        acks = [r for r in trace if r.kind == "ack"]
        assert {r.get_int("target_index") for r in acks} == set(range(1, 7))
        assert all(r.get_int("target_index") == r.slot for r in acks)
        assert not [r for r in trace if r.kind == "slash"]

    def test_three_sf_pipeline(self):
        """测试 3SF 槽 t 的区块在 t+2 结束前最终确定"""
        trace = run(protocol="3sf", n=4, slots=8, seed=2)
        for t in range(1, 7):
            verdict = three_sf_pipeline_check(trace, t)
            assert verdict.ok, t
            assert verdict.finalized_at == t + 2

    def test_three_sf_conf_is_prefix(self):
        """测试 3SF 的 chConf 出现在确认记录中且是 chAva 的前缀"""
        trace = run(protocol="3sf", n=4, slots=5, seed=0)
        confirms = [r for r in trace if r.kind == "confirm"]
        assert confirms and all(r.get("conf") is not None for r in confirms)
        assert check_ledger_prefix(trace) == []


class TestInactivityLeak:
    """不活跃泄漏恢复测试"""

    @pytest.mark.parametrize("n", [5, 10, 20])
    def test_recovery(self, n):
        """测试 40% 离线时泄漏 3 次后在纪元 7 恢复最终确定，与闭式预测一致"""
        offline = list(range(n * 2 // 5))
        config = ScenarioConfig(protocol="gasper-lite", n=n, checkpoint_spacing=4, slots=32, seed=0,
                                offline=offline)
        trace = run_scenario(config).trace
        leaks = [r for r in trace if r.kind == "leak"]
        assert [r.get_int("epoch") for r in leaks] == [4, 5, 6, 7]
        assert all(r.get_int("inactive") == len(offline) for r in leaks)
        finals = [r for r in trace if r.kind == "finalize"]
        assert finals
        prediction = predict_recovery(0.6, rate=0.1, trigger=4)
        assert prediction.drains_needed == 3
        assert min(r.slot for r in finals) // 4 == prediction.first_finalizing_epoch == 7

    def test_no_leak_when_finalizing(self):
        """测试正常最终确定时不泄漏"""
        trace = run(protocol="gasper-lite", n=12, checkpoint_spacing=4, slots=24, seed=0)
        assert not [r for r in trace if r.kind == "leak"]
        assert [r for r in trace if r.kind == "finalize"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
