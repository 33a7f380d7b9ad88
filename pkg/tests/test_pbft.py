"""
pBFT 测试：法定人数交集、单副本三阶段、拜占庭调度下的安全性
"""

import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.errors import ConfigError
from finality_sim.pbft.harness import check_pbft_safety, run_pbft_schedule
from finality_sim.pbft.quorum import exhaustive_intersection_check, intersection_table, quorum_intersection
from finality_sim.pbft.replica import (
    Commit, Outbox, Prepare, PrePrepare, Replica, Request, faults_tolerated, list_behaviours,
    make_replica, primary_of,
)


class TestQuorum:
    """法定人数交集测试"""

    def test_faults_tolerated(self):
        """测试 f = ⌊(n-1)/3⌋"""
        assert faults_tolerated(1) == 0
        assert faults_tolerated(4) == 1
        assert faults_tolerated(7) == 2
        assert faults_tolerated(9) == 2

    def test_intersection_table(self):
        """测试 f = 1..5 时交集至少 f+1"""
        table = intersection_table(5)
        assert [b.f for b in table] == [1, 2, 3, 4, 5]
        assert all(b.ok for b in table)
        assert all(b.overlap == b.f + 1 for b in table)

    def test_exhaustive_matches_closed_form(self):
        """测试枚举值与闭式一致"""
        for f in range(1, 4):
            assert exhaustive_intersection_check(f) == quorum_intersection(3 * f + 1, f).overlap

    def test_too_few_replicas(self):
        """测试 n ≤ 3f 时不满足"""
        bound = quorum_intersection(3, 1)
        assert not bound.ok
        assert "违反" in bound.format_result()
        with pytest.raises(ValueError):
            quorum_intersection(2, 1)


class TestReplica:
    """单副本三阶段测试"""

    def test_primary_proposes(self):
        """测试主副本收到请求后广播预准备并启动计时器"""
        out = Outbox()
        primary = Replica(0, 4, out)
        primary.on_request(Request(77))
        (pp,) = out.messages(PrePrepare)
        assert (pp.view, pp.seq, pp.digest) == (0, 1, 77)
        assert len(out.timers) == 1
        assert out.kinds() == ["pre-prepare"]

    def test_backup_three_phases(self):
        """测试备份副本从预准备到执行"""
        out = Outbox()
        r = Replica(1, 4, out)
        assert r.on_preprepare(PrePrepare(0, 1, 77, 0))
        assert len(out.messages(Prepare)) == 1
        r.on_prepare(Prepare(0, 1, 77, 2))
        assert r.entry(0, 1).prepared
        assert len(out.messages(Commit)) == 1
        r.on_commit(Commit(0, 1, 77, 2))
        assert r.executed == []
        r.on_commit(Commit(0, 1, 77, 0))
        assert r.executed == [77]
        assert "execute" in out.kinds()

    def test_primary_prepare_ignored(self):
        """测试主副本的 PREPARE 不计入"""
        out = Outbox()
        r = Replica(1, 4, out)
        r.on_preprepare(PrePrepare(0, 1, 77, 0))
        r.on_prepare(Prepare(0, 1, 77, 0))
        assert not r.entry(0, 1).prepared

    def test_conflicting_preprepare_rejected(self):
        """测试同一 (v, s) 的第二个摘要被拒绝并留作证据"""
        out = Outbox()
        r = Replica(1, 4, out)
        assert r.on_preprepare(PrePrepare(0, 1, 77, 0))
        assert not r.on_preprepare(PrePrepare(0, 1, 78, 0))
        assert r.evidence == [PrePrepare(0, 1, 78, 0)]
        assert r.entry(0, 1).digest == 77

    def test_wrong_sender_rejected(self):
        """测试非主副本发出的预准备被拒绝"""
        out = Outbox()
        r = Replica(1, 4, out)
        assert not r.on_preprepare(PrePrepare(0, 1, 77, 2))
        assert out.records[-1][2]["reason"] == "sender"

    def test_execute_in_order(self):
        """测试序号 2 先提交时等待序号 1"""
        out = Outbox()
        r = Replica(1, 4, out)
        for seq, d in ((2, 88), (1, 77)):
            r.on_preprepare(PrePrepare(0, seq, d, 0))
            r.on_prepare(Prepare(0, seq, d, 2))
            r.on_commit(Commit(0, seq, d, 2))
            r.on_commit(Commit(0, seq, d, 0))
            if seq == 2:
                assert r.executed == []
        assert r.executed == [77, 88]

    def test_view_change_on_timeout(self):
        """测试超时后进入下一视图并广播 VIEW-CHANGE"""
        out = Outbox()
        r = Replica(2, 4, out)
        r.on_request(Request(5))
        _, _, token = out.timers[-1]
        r.on_timeout(token)
        assert r.view == 1
        assert not r.active
        assert "view-change" in out.kinds()
        assert primary_of(1, 4) == 1

    def test_commit_certificate_after_view_change(self):
        """测试持有另一摘要并已进入下一视图的副本，凭旧视图的 2f+1 个 COMMIT 执行"""
        out = Outbox()
        r = Replica(3, 4, out)
        r.on_request(Request(5))
        assert r.on_preprepare(PrePrepare(0, 1, 99, 0))
        _, _, token = out.timers[-1]
        r.on_timeout(token)
        assert r.view == 1 and not r.active
        for sender in (0, 1):
            r.deliver(Commit(0, 1, 5, sender))
        assert r.executed == []
        r.deliver(Commit(0, 1, 5, 2))
        assert r.executed == [5]
        assert r.pending == []

    def test_solo_view_change_stops_when_idle(self):
        """测试没有待定请求且无人响应的视图切换在超时后不再升级"""
        out = Outbox()
        r = Replica(3, 4, out)
        r.on_request(Request(5))
        _, _, token = out.timers[-1]
        r.on_timeout(token)
        for sender in (0, 1, 2):
            r.deliver(Commit(0, 1, 5, sender))
        assert r.executed == [5]
        _, _, token = out.timers[-1]
        r.on_timeout(token)
        assert r.view == 1
        assert out.kinds().count("view-change") == 1

    def test_registry(self):
        """测试副本行为注册表"""
        assert set(list_behaviours()) == {"honest", "silent", "equivocating-primary", "indiscriminate"}
        assert make_replica("silent", 0, 4, Outbox()).behaviour == "silent"
        with pytest.raises(ValueError):
            make_replica("lazy", 0, 4, Outbox())
        with pytest.raises(TypeError):
            Replica(0, 4, Outbox()).deliver("hello")


class TestSchedules:
    """随机延迟调度测试"""

    def test_honest_runs_agree(self):
        """测试无故障时全部副本执行同一日志"""
        for seed in range(20):
            result = run_pbft_schedule(seed, n=4, requests=3)
            assert result.safe
            logs = list(result.executed.values())
            assert all(len(log) == 3 for log in logs)
            assert all(log == logs[0] for log in logs)

    def test_equivocating_primary_is_safe(self):
        """测试主副本模棱两可时诚实副本不冲突"""
        for seed in range(30):
            result = run_pbft_schedule(seed, n=4, byzantine={0: "equivocating-primary"})
            assert result.safe, result.format_result()

    def test_minority_backup_executes_everything(self):
        """测试模棱两可主副本下拿到少数摘要的诚实备份副本也执行全部请求"""
        for seed in range(20):
            result = run_pbft_schedule(seed, n=4, requests=4, byzantine={0: "equivocating-primary"},
                                       horizon=5000)
            assert result.safe
            assert all(len(log) == 4 for log in result.executed.values()), result.format_result()
            logs = list(result.executed.values())
            assert all(log == logs[0] for log in logs)

    def test_silent_primary_triggers_view_change(self):
        """测试主副本沉默时通过视图切换继续执行"""
        for seed in range(10):
            result = run_pbft_schedule(seed, n=4, byzantine={0: "silent"})
            assert result.safe
            assert all(v >= 1 for v in result.views.values())
            assert all(len(log) == 3 for log in result.executed.values())

    def test_silent_backup(self):
        """测试沉默备份副本不影响进度"""
        result = run_pbft_schedule(3, n=4, byzantine={2: "silent"})
        assert result.safe
        assert all(len(log) == 3 for log in result.executed.values())

    def test_indiscriminate_backup_is_safe(self):
        """测试乱投票的备份副本不破坏安全性"""
        for seed in range(20):
            assert run_pbft_schedule(seed, n=4, byzantine={3: "indiscriminate"}).safe

    def test_n7_two_faults(self):
        """测试 n=7 容忍两个拜占庭副本"""
        for seed in range(10):
            result = run_pbft_schedule(seed, n=7, byzantine={0: "equivocating-primary", 4: "indiscriminate"})
            assert result.safe

    @pytest.mark.slow
    @pytest.mark.parametrize("byzantine", [
        {}, {0: "equivocating-primary"}, {0: "silent"}, {3: "indiscriminate"},
    ], ids=["honest", "equivocating-primary", "silent-primary", "indiscriminate"])
    def test_thousand_schedules(self, byzantine):
        """测试 n=4 时每种拜占庭配置下 1000 个随机调度都安全"""
        unsafe = [seed for seed in range(1000)
                  if not run_pbft_schedule(seed, n=4, byzantine=byzantine).safe]
        assert unsafe == []

    def test_deterministic(self):
        """测试同一种子给出同一轨迹"""
        a = run_pbft_schedule(5, n=4, byzantine={0: "equivocating-primary"})
        b = run_pbft_schedule(5, n=4, byzantine={0: "equivocating-primary"})
        assert [r.to_line() for r in a.trace] == [r.to_line() for r in b.trace]

    def test_invalid_cluster(self):
        """测试非法的拜占庭配置"""
        with pytest.raises(ConfigError):
            run_pbft_schedule(0, n=4, byzantine={0: "silent", 1: "silent"})
        with pytest.raises(ConfigError):
            run_pbft_schedule(0, n=4, byzantine={9: "silent"})
        with pytest.raises(ConfigError):
            run_pbft_schedule(0, n=4, byzantine={1: "lazy"})
        with pytest.raises(ConfigError):
            run_pbft_schedule(0, n=4, max_delay=0)

    def test_safety_check(self):
        """测试执行日志比对"""
        assert check_pbft_safety({0: [1, 2], 1: [1]}) == []
        assert len(check_pbft_safety({0: [1, 2], 1: [1, 3]})) == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
