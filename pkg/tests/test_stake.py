"""
质押与参与度测试
"""

import numpy as np
import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.errors import ConfigError
from finality_sim.sim.clock import NEVER
from finality_sim.stake.participation import Mode, ParticipationSchedule, mode_at, offline_ranges_to_slots
from finality_sim.stake.registry import (
    GWEI_PER_ETH, MAX_EFFECTIVE_BALANCE_PECTRA, EffectiveBalanceRule, Validator, ValidatorRegistry,
    effective_balance,
)
from finality_sim.stake.selection import committees, select_proposer


class TestEffectiveBalance:
    """有效余额测试"""

    def test_merge_cap(self):
        """测试合并时 32 ETH 的上限"""
        rule = EffectiveBalanceRule()
        assert effective_balance(64, rule) == 32
        assert effective_balance(16, rule) == 16

    def test_pectra_cap(self):
        """测试 2048 ETH 的上限"""
        rule = EffectiveBalanceRule(MAX_EFFECTIVE_BALANCE_PECTRA)
        assert effective_balance(64, rule) == 64
        assert effective_balance(4096, rule) == 2048

    def test_invalid(self):
        """测试非法质押与上限"""
        with pytest.raises(ConfigError):
            Validator(0, 0)
        with pytest.raises(ConfigError):
            EffectiveBalanceRule(0)


class TestRegistry:
    """验证者注册表测试"""

    def test_from_stakes(self):
        """测试由质押列表构造"""
        reg = ValidatorRegistry.from_stakes([32, 64, 16], adversarial=[1])
        assert len(reg) == 3
        assert reg.honest_ids == [0, 2]
        assert reg.adversarial_ids == frozenset({1})
        assert reg.effective_weights() == {0: 32, 1: 32, 2: 16}
        assert reg.total_effective() == 80
        assert reg.initial_balances()[2] == 16 * GWEI_PER_ETH

    def test_adversary_out_of_range(self):
        """测试敌手编号越界"""
        with pytest.raises(ConfigError) as exc:
            ValidatorRegistry.from_stakes([32, 32], adversarial=[2])
        assert exc.value.field == "adversary.ids"

    def test_ids_must_be_dense(self):
        """测试编号必须稠密"""
        with pytest.raises(ConfigError):
            ValidatorRegistry([Validator(0, 32), Validator(2, 32)])


class TestParticipation:
    """睡眠模型测试"""

    def setup_method(self):
        self.reg = ValidatorRegistry.from_stakes([32] * 4, adversarial=[3])
        self.sched = ParticipationSchedule(offline_slots=offline_ranges_to_slots({0: range(3, 6)}))

    def test_modes(self):
        """测试离线、刚醒来与在线"""
        v = self.reg[0]
        assert mode_at(v, 2, self.sched) is Mode.AWAKE
        assert mode_at(v, 3, self.sched) is Mode.OFFLINE
        assert mode_at(v, 5, self.sched) is Mode.OFFLINE
        assert mode_at(v, 6, self.sched) is Mode.DREAMY
        assert mode_at(v, 7, self.sched) is Mode.AWAKE

    def test_adversary_always_awake(self):
        """测试敌手始终在线"""
        assert mode_at(self.reg[3], 4, self.sched) is Mode.AWAKE

    def test_gat_wakes_everyone(self):
        """测试 GAT 之后全部在线"""
        sched = ParticipationSchedule(offline_slots={0: frozenset({3, 4})}, gat_slot=4)
        assert mode_at(self.reg[0], 4, sched) is Mode.AWAKE

    def test_validate(self):
        """测试时间表校验"""
        self.sched.validate(self.reg)
        with pytest.raises(ConfigError):
            ParticipationSchedule(always_offline=frozenset({3})).validate(self.reg)
        with pytest.raises(ConfigError):
            ParticipationSchedule(always_offline=frozenset({7})).validate(self.reg)
        with pytest.raises(ConfigError):
            ParticipationSchedule(always_offline=frozenset({0}), gat_slot=10).validate(self.reg)
        with pytest.raises(ConfigError):
            ParticipationSchedule(offline_slots={0: frozenset({9})}, gat_slot=10).validate(self.reg)
        ParticipationSchedule(offline_slots={0: frozenset({5})}, gat_slot=NEVER).validate(self.reg)


class TestSelection:
    """委员会与提议者选择测试"""

    def test_committees_partition(self):
        """测试委员会是验证者集合的划分"""
        result = committees(0, list(range(64)), seed=1)
        assert len(result) == 32
        assert all(len(c) == 2 for c in result)
        assert sorted(v for c in result for v in c) == list(range(64))

    def test_committees_deterministic(self):
        """测试同一 (种子, 纪元) 给出同一划分"""
        assert committees(3, list(range(40)), seed=9) == committees(3, list(range(40)), seed=9)
        assert committees(3, list(range(40)), seed=9) != committees(4, list(range(40)), seed=9)

    def test_committee_overrides(self):
        """测试脚本委员会，其余成员均分到剩余槽"""
        result = committees(0, list(range(64)), seed=1, overrides={5: [0, 1, 2], 6: [3]})
        assert result[5] == (0, 1, 2)
        assert result[6] == (3,)
        rest = [v for i, c in enumerate(result) if i not in (5, 6) for v in c]
        assert sorted(rest) == list(range(4, 64))

    def test_committee_errors(self):
        """测试验证者不足与重复指定"""
        with pytest.raises(ConfigError):
            committees(0, list(range(8)), seed=0)
        with pytest.raises(ConfigError):
            committees(0, list(range(64)), seed=0, overrides={1: [0], 2: [0]})
        with pytest.raises(ConfigError):
            committees(0, list(range(64)), seed=0, overrides={40: [0]})

    def test_proposer_none_without_candidates(self):
        """测试没有合格提议者时不出块"""
        assert select_proposer(1, {}, seed=0) is None
        assert select_proposer(1, {0: 0}, seed=0) is None

    def test_proposer_frequency_proportional_to_stake(self):
        """测试提议频率与有效余额成正比"""
        eligible = {0: 32, 1: 32, 2: 64}
        draws = np.array([select_proposer(s, eligible, seed=11) for s in range(1, 4001)])
        freq = np.bincount(draws, minlength=3) / draws.size
        assert np.allclose(freq, [0.25, 0.25, 0.5], atol=0.04)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
