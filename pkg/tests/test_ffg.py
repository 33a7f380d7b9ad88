"""
Casper FFG 测试：证明、最终确定规则、罚没、可追责安全性、不活跃泄漏
"""

from fractions import Fraction
import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.chain.block import GENESIS
from finality_sim.chain.checkpoint import GENESIS_CHECKPOINT, Checkpoint
from finality_sim.chain.votes import ack_vote, ffg_vote, head_vote
from finality_sim.errors import ConfigError, MalformedLinkError
from finality_sim.ffg.audit import (
    accountable_safety_audit, enumerate_ffg_executions, evaluate_execution, small_model,
)
from finality_sim.ffg.justification import (
    FinalityRule, JustificationState, supermajority, supermajority_link, update_finalization,
    update_justification, validate_link,
)
from finality_sim.ffg.leak import LeakConfig, inactivity_leak, predict_recovery, recovery_curve
from finality_sim.ffg.slashing import SlashingCondition, detect_slashing, slashable_validators


def model():
    blocks, links = small_model()
    g, ca1, ca2, cb1, cb2 = GENESIS_CHECKPOINT, links[0][1], links[1][1], links[3][1], links[4][1]
    return blocks, g, ca1, ca2, cb1, cb2


EQUAL = {v: 1 for v in range(4)}


class TestJustification:
    """证明与最终确定测试"""

    def test_supermajority_is_exact(self):
        """测试 3a ≥ 2T 的整数比较"""
        assert supermajority(2, 3)
        assert not supermajority(1, 2)
        assert supermajority(3, 4)
        assert not supermajority(2, 4)

    def test_supermajority_link(self):
        """测试同一链接的超级多数"""
        blocks, g, ca1, *_ = model()
        votes = [ffg_vote(v, 1, g, ca1) for v in range(3)]
        assert supermajority_link(votes, EQUAL, 4)
        assert not supermajority_link(votes[:2], EQUAL, 4)
        with pytest.raises(ValueError):
            supermajority_link(votes + [ffg_vote(3, 2, g, Checkpoint(2, ca1.block))], EQUAL, 4)

    def test_validate_link(self):
        """测试格式错误的链接"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        validate_link(blocks, g, ca2)
        with pytest.raises(MalformedLinkError):
            validate_link(blocks, ca1, Checkpoint(1, ca2.block))
        with pytest.raises(MalformedLinkError):
            validate_link(blocks, ca1, cb2)

    def test_malformed_vote_rejected(self):
        """测试被拒绝的投票不计入链接"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState()
        assert not state.add_vote(ffg_vote(0, 2, ca1, cb2), blocks)
        assert not state.add_vote(head_vote(0, 1, ca1.block), blocks)
        assert not state.supporters

    def test_casper_finality(self):
        """测试 s→t 且 h(t) = h(s)+1 时 s 最终确定"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState(rule=FinalityRule.CASPER)
        votes = [ffg_vote(v, 1, g, ca1) for v in range(3)]
        assert update_justification(state, EQUAL, 4, votes, blocks) == [ca1]
        assert update_finalization(state, EQUAL, 4) == []
        votes = [ffg_vote(v, 2, ca1, ca2) for v in range(3)]
        assert update_justification(state, EQUAL, 4, votes, blocks) == [ca2]
        assert update_finalization(state, EQUAL, 4) == [ca1]
        assert state.latest_finalized == ca1
        assert state.latest_justified == ca2

    def test_skip_link_does_not_finalize(self):
        """测试跨高度的链接只证明不最终确定"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState(rule=FinalityRule.CASPER)
        update_justification(state, EQUAL, 4, [ffg_vote(v, 2, g, ca2) for v in range(3)], blocks)
        assert ca2 in state.justified
        assert update_finalization(state, EQUAL, 4) == []

    def test_same_slot_finality(self):
        """测试同槽规则：被证明的目标得到超级多数确认后才最终确定"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState(rule=FinalityRule.SAME_SLOT)
        update_justification(state, EQUAL, 4, [ffg_vote(v, 1, g, ca1) for v in range(3)], blocks)
        assert update_finalization(state, EQUAL, 4) == []
        update_justification(state, EQUAL, 4, [ack_vote(v, 1, ca1) for v in range(2)], blocks)
        assert update_finalization(state, EQUAL, 4) == []
        update_justification(state, EQUAL, 4, [ack_vote(2, 1, ca1)], blocks)
        assert update_finalization(state, EQUAL, 4) == [ca1]
        assert state.copy().acks == {ca1: {0, 1, 2}}

    def test_ack_of_unjustified_checkpoint(self):
        """测试对未被证明检查点的确认不产生最终确定"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState(rule=FinalityRule.SAME_SLOT)
        update_justification(state, EQUAL, 4, [ack_vote(v, 2, ca2) for v in range(4)], blocks)
        assert state.acknowledged(EQUAL, 4) == [ca2]
        assert update_finalization(state, EQUAL, 4) == []

    def test_pipelined_finality(self):
        """测试流水线规则需要 C→C1→C2"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState(rule=FinalityRule.PIPELINED)
        update_justification(state, EQUAL, 4, [ffg_vote(v, 1, g, ca1) for v in range(3)], blocks)
        assert update_finalization(state, EQUAL, 4) == []
        update_justification(state, EQUAL, 4, [ffg_vote(v, 2, ca1, ca2) for v in range(3)], blocks)
        assert update_finalization(state, EQUAL, 4) == []
        assert ca1 not in state.finalized
        casper = state.copy()
        casper.rule = FinalityRule.CASPER
        assert update_finalization(casper, EQUAL, 4) == [ca1]

    def test_unjustified_source_ignored(self):
        """测试源未被证明的链接不传播证明"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        state = JustificationState()
        update_justification(state, EQUAL, 4, [ffg_vote(v, 2, ca1, ca2) for v in range(4)], blocks)
        assert ca2 not in state.justified


class TestSlashing:
    """罚没条件测试"""

    def test_double_vote(self):
        """测试同一目标高度的两条链接"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        records = detect_slashing([ffg_vote(0, 1, g, ca1), ffg_vote(0, 1, g, cb1)], blocks)
        assert [r.condition for r in records] == [SlashingCondition.DOUBLE]
        assert slashable_validators(records) == [0]

    def test_surround_vote(self):
        """测试包围投票"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        outer = ffg_vote(1, 3, g, Checkpoint(3, ca2.block))
        inner = ffg_vote(1, 2, ca1, ca2)
        records = detect_slashing([outer, inner], blocks)
        assert [r.condition for r in records] == [SlashingCondition.SURROUND]

    def test_honest_chain_not_slashable(self):
        """测试连续的诚实链接不可罚没"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        votes = [ffg_vote(2, 1, g, ca1), ffg_vote(2, 2, ca1, ca2)]
        assert detect_slashing(votes, blocks, three_sf=True) == []

    def test_ack_surround(self):
        """测试确认高度 1 后投出跨过高度 1 的链接"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        ack = ack_vote(0, 1, ca1)
        jump = ffg_vote(0, 2, g, cb2)
        records = detect_slashing([jump, ack], blocks)
        assert [r.condition for r in records] == [SlashingCondition.ACK_SURROUND]
        assert records[0].first == ack and records[0].second == jump
        assert "ack" in str(records[0])

    def test_ack_then_honest_link(self):
        """测试确认之后以被确认检查点为源的链接不可罚没"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        votes = [ffg_vote(1, 1, g, ca1), ack_vote(1, 1, ca1), ffg_vote(1, 2, ca1, ca2)]
        assert detect_slashing(votes, blocks) == []

    def test_three_sf_extra(self):
        """测试 3SF 附加条件：源槽更晚而目标更低"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        a = ffg_vote(3, 3, Checkpoint(1, GENESIS.digest), Checkpoint(3, ca2.block))
        b = ffg_vote(3, 2, Checkpoint(1, ca1.block), Checkpoint(2, ca2.block))
        assert detect_slashing([a, b], blocks) == []
        records = detect_slashing([a, b], blocks, three_sf=True)
        assert [r.condition for r in records] == [SlashingCondition.THREE_SF_EXTRA]


class TestAccountableSafety:
    """可追责安全性测试"""

    def test_conflicting_finalization_is_accountable(self):
        """测试两条分支都最终确定时至少 2 个验证者可罚没"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        a_side = ((g, ca1), (ca1, ca2))
        b_side = ((g, cb1), (cb1, cb2))
        report = evaluate_execution(blocks, [a_side, a_side + b_side, a_side + b_side, b_side])
        assert report.safety_violated
        assert report.slashable == [1, 2]
        assert report.accountable
        assert "可追责: 是" in report.format_result()

    def test_honest_execution(self):
        """测试没有冲突时的审计"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        votes = [ffg_vote(v, 1, g, ca1) for v in range(4)]
        report = accountable_safety_audit(blocks, [g, ca1], votes, EQUAL, 4)
        assert not report.safety_violated
        assert report.slashable == []

    def test_sampled_executions(self):
        """测试抽样的 n=4 执行没有反例"""
        blocks, _ = small_model()
        for assignment in enumerate_ffg_executions(4, sample=3000, seed=5):
            assert evaluate_execution(blocks, assignment).accountable

    def test_same_slot_without_acks(self):
        """测试同槽规则下只有链接、没有确认时冲突的两条分支都不会最终确定"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        report = evaluate_execution(blocks, [((g, ca1), (g, cb2))] * 4, rule=FinalityRule.SAME_SLOT)
        assert not report.safety_violated
        assert report.accountable

    def test_same_slot_conflict_is_accountable(self):
        """测试同槽规则下两条分支都被确认时全部验证者可罚没"""
        blocks, g, ca1, ca2, cb1, cb2 = model()
        report = evaluate_execution(blocks, [((g, ca1), (g, cb2), ca1, cb2)] * 4,
                                    rule=FinalityRule.SAME_SLOT)
        assert report.conflicting == (ca1, cb2)
        assert report.slashable == [0, 1, 2, 3]
        assert {r.condition for r in report.records} == {SlashingCondition.ACK_SURROUND}
        assert report.accountable

    @pytest.mark.parametrize("seed", [3, 8])
    def test_sampled_same_slot_executions(self, seed):
        """测试同槽规则下抽样的 n=4 执行（含确认）没有反例，且包含冲突的执行"""
        blocks, _ = small_model()
        violated = 0
        for assignment in enumerate_ffg_executions(4, sample=3000, seed=seed, acks=True):
            report = evaluate_execution(blocks, assignment, rule=FinalityRule.SAME_SLOT)
            assert report.accountable, assignment
            violated += report.safety_violated
        assert violated > 0

    def test_sampled_pipelined_executions(self):
        """测试流水线规则下三层小模型的抽样执行没有反例"""
        blocks, links = small_model(depth=3)
        assert len(links) == 12
        for assignment in enumerate_ffg_executions(4, sample=3000, seed=9, depth=3):
            assert evaluate_execution(blocks, assignment, rule=FinalityRule.PIPELINED).accountable

    @pytest.mark.slow
    def test_exhaustive_executions(self):
        """测试 n=4 全部执行没有反例"""
        blocks, _ = small_model()
        count = 0
        for assignment in enumerate_ffg_executions(4):
            assert evaluate_execution(blocks, assignment).accountable
            count += 1
        assert count == 766480


class TestLeak:
    """不活跃泄漏测试"""

    def test_not_triggered(self):
        """测试触发之前余额不变"""
        assert inactivity_leak({0: 1000}, [0], 3) == {0: 1000}

    def test_drains_inactive(self):
        """测试只扣除不活跃验证者"""
        result = inactivity_leak({0: 1000, 1: 1000}, [1], 4, LeakConfig(rate=Fraction(1, 10)))
        assert result == {0: 1000, 1: 900}

    def test_invalid_config(self):
        """测试非法泄漏参数"""
        with pytest.raises(ConfigError):
            LeakConfig(trigger=0)
        with pytest.raises(ConfigError):
            LeakConfig(rate=Fraction(1))

    def test_predict_recovery(self):
        """测试闭式恢复预测"""
        prediction = predict_recovery(0.6, rate=0.1, trigger=4)
        assert prediction.drains_needed == 3
        assert prediction.first_finalizing_epoch == 7
        assert predict_recovery(0.7).drains_needed == 0
        assert predict_recovery(0.0) is None

    def test_recovery_curve(self):
        """测试剩余余额曲线单调下降"""
        curve = recovery_curve(0.6, 0.1, 10)
        assert curve[0] == pytest.approx(1.0)
        assert all(curve[i] > curve[i + 1] for i in range(9))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
