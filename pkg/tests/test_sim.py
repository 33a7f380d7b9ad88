"""
模拟核心测试：时钟、网络、调度器、随机数、轨迹格式
"""

import io
import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.errors import ConfigError, DeliveryBoundError, StalledSimulationError, TraceFormatError
from finality_sim.sim.clock import NEVER, SimTime, epoch_of, first_slot_at_or_after, slot_start
from finality_sim.sim.network import (
    HONEST_DELAY, Envelope, MaxDelay, NetworkConfig, PerRecipientDelay, deliver_bound, schedule,
)
from finality_sim.sim.rng import SplitMix64, sub_seed
from finality_sim.sim.scheduler import Priority, Scheduler
from finality_sim.sim.trace import (
    TraceRecord, format_trace, iter_trace, parse_trace, write_trace,
)


class TestClock:
    """时钟测试"""

    def test_slot_and_phase(self):
        """测试 tick 到槽与阶段的换算"""
        t = SimTime(7, 3)
        assert t.slot == 2
        assert t.phase_offset == 1
        assert SimTime.at(2, 1, 3) == t

    def test_invalid_time(self):
        """测试非法时刻"""
        with pytest.raises(ValueError):
            SimTime(-1, 3)
        with pytest.raises(ValueError):
            SimTime(0, 5)

    def test_slot_start_and_epoch(self):
        """测试槽起点与纪元"""
        assert slot_start(5, 4) == 20
        assert epoch_of(31) == 0
        assert epoch_of(32) == 1
        assert epoch_of(9, 4) == 2

    def test_first_slot_at_or_after(self):
        """测试某时刻之后的第一个槽"""
        assert first_slot_at_or_after(6, 3) == 2
        assert first_slot_at_or_after(7, 3) == 3
        assert first_slot_at_or_after(0, 4) == 0
        assert first_slot_at_or_after(NEVER, 3) == NEVER


class TestNetwork:
    """部分同步网络测试"""

    def test_deliver_bound(self):
        """测试投递上界 Δ + max(sent, GST)"""
        assert deliver_bound(5, 0, 1) == 6
        assert deliver_bound(5, 10, 1) == 11
        assert deliver_bound(5, NEVER, 1) == NEVER

    def test_honest_delay(self):
        """测试诚实延迟为 sent + Δ"""
        env = schedule(Envelope("m", 0, 3), HONEST_DELAY, NetworkConfig(), [1, 2])
        assert dict(env.deliver_at) == {1: 4, 2: 4}
        assert env.undelivered == ()

    def test_max_delay_before_gst(self):
        """测试 GST 之前被拖到上界"""
        env = schedule(Envelope("m", 0, 2), MaxDelay(), NetworkConfig(gst=8), [1])
        assert env.deliver_at[1] == 9

    def test_max_delay_after_gst(self):
        """测试 GST 之后退化为 Δ"""
        env = schedule(Envelope("m", 0, 12), MaxDelay(), NetworkConfig(gst=8), [1])
        assert env.deliver_at[1] == 13

    def test_never_gst_leaves_undelivered(self):
        """测试 GST = ∞ 时消息可以永不投递"""
        env = schedule(Envelope("m", 0, 2), MaxDelay(), NetworkConfig(gst=NEVER), [1, 3])
        assert env.undelivered == (1, 3)
        assert not env.deliver_at

    def test_per_recipient_delay(self):
        """测试按接收者的显式延迟"""
        env = schedule(Envelope("m", 0, 0), PerRecipientDelay({2: 3}), NetworkConfig(gst=10), [1, 2])
        assert dict(env.deliver_at) == {1: 1, 2: 3}

    def test_policy_beyond_bound_rejected(self):
        """测试超过上界的策略被拒绝"""
        with pytest.raises(DeliveryBoundError):
            schedule(Envelope("m", 0, 0), PerRecipientDelay({1: 5}), NetworkConfig(), [1])

    def test_policy_not_after_send_rejected(self):
        """测试不晚于发送时刻的投递被拒绝"""
        with pytest.raises(DeliveryBoundError):
            schedule(Envelope("m", 0, 4), PerRecipientDelay({1: 0}), NetworkConfig(), [1])

    def test_invalid_network(self):
        """测试非法网络参数"""
        with pytest.raises(ConfigError):
            NetworkConfig(delta=0)
        with pytest.raises(ConfigError):
            NetworkConfig(gst=-1)


class TestScheduler:
    """调度器测试"""

    def test_total_order(self):
        """测试 (时刻, 优先级, 发送者, 序号) 全序"""
        s = Scheduler()
        seen = []
        s.at(1, Priority.PHASE, -1, seen.append, "phase")
        s.at(1, Priority.DELIVERY, 5, seen.append, "deliver-5")
        s.at(1, Priority.DELIVERY, 2, seen.append, "deliver-2")
        s.at(0, Priority.PHASE, -1, seen.append, "early")
        s.at(1, Priority.ADVERSARY, -1, seen.append, "adversary")
        s.at(1, Priority.DELIVERY, 2, seen.append, "deliver-2b")
        assert s.run_until(10) == 6
        assert seen == ["early", "deliver-2", "deliver-2b", "deliver-5", "adversary", "phase"]

    def test_run_until_is_exclusive(self):
        """测试 run_until 不处理 end 时刻的事件"""
        s = Scheduler()
        seen = []
        s.at(3, Priority.PHASE, -1, seen.append, 3)
        s.at(4, Priority.PHASE, -1, seen.append, 4)
        s.run_until(4)
        assert seen == [3]
        assert len(s) == 1

    def test_cannot_schedule_in_past(self):
        """测试不能在过去排期"""
        s = Scheduler()
        s.at(5, Priority.PHASE, -1, lambda: None)
        s.run_until(10)
        with pytest.raises(ValueError):
            s.at(2, Priority.PHASE, -1, lambda: None)

    def test_stalled(self):
        """测试队列提前耗尽时报停滞"""
        s = Scheduler(has_pending_work=lambda: True)
        with pytest.raises(StalledSimulationError):
            s.run_until(10)


class TestRng:
    """splitmix64 测试"""

    def test_deterministic(self):
        """测试同一种子产生同一序列"""
        a, b = SplitMix64(42), SplitMix64(42)
        assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]

    def test_below_range(self):
        """测试 below 落在范围内"""
        r = SplitMix64(7)
        values = [r.below(6) for _ in range(200)]
        assert min(values) >= 0 and max(values) <= 5
        assert len(set(values)) == 6

    def test_below_rejects_nonpositive(self):
        """测试 below(0) 报错"""
        with pytest.raises(ValueError):
            SplitMix64(1).below(0)

    def test_shuffled_is_permutation(self):
        """测试洗牌结果是排列"""
        items = list(range(20))
        result = SplitMix64(3).shuffled(items)
        assert sorted(result) == items
        assert items == list(range(20))

    def test_sub_seed(self):
        """测试子种子随标签与编号变化"""
        assert sub_seed(1, "proposer", 4) == sub_seed(1, "proposer", 4)
        assert sub_seed(1, "proposer", 4) != sub_seed(1, "proposer", 5)
        assert sub_seed(1, "proposer", 4) != sub_seed(1, "committee", 4)
        assert sub_seed(1, "proposer", 4) != sub_seed(2, "proposer", 4)


class TestTrace:
    """轨迹格式测试"""

    def test_fixed_key_order(self):
        """测试载荷键按固定顺序输出，缺省值省略"""
        r = TraceRecord.make(4, 1, 1, 3, "vote", target="00ff", head="00aa", source=None)
        assert r.to_line() == "tick=4 slot=1 phase=1 actor=3 kind=vote head=00aa target=00ff"

    def test_bool_and_inf(self):
        """测试布尔值与无穷的格式"""
        r = TraceRecord.make(0, 0, 0, -1, "deliver", item="x", to="1", at=float("inf"))
        assert r.get("at") == "inf"
        r = TraceRecord.make(0, 0, 0, -1, "attack", strategy="withhold", success=True, depth=1)
        assert r.get("success") == "1"
        assert r.get_int("depth") == 1

    def test_unknown_kind_or_key(self):
        """测试未知类型或载荷键"""
        with pytest.raises(ValueError):
            TraceRecord.make(0, 0, 0, 0, "gossip")
        with pytest.raises(ValueError):
            TraceRecord.make(0, 0, 0, 0, "slot", extra=1)

    def test_none_values_skipped(self):
        """测试值为 None 的键被省略，不算未知键"""
        r = TraceRecord.make(0, 0, 3, 1, "ack", head=None, source=None,
                             target="00000000000000ab", target_index=3)
        assert r.payload == (("target", "00000000000000ab"), ("target_index", "3"))

    def test_parse_line(self):
        """测试解析一行"""
        line = "tick=9 slot=3 phase=0 actor=2 kind=propose block=000000000000abcd parent=0000000000000000"
        r = TraceRecord.parse(line)
        assert (r.tick, r.slot, r.phase, r.actor, r.kind) == (9, 3, 0, 2, "propose")
        assert r.get_digest("block") == 0xABCD
        assert r.to_line() == line

    def test_parse_errors(self):
        """测试格式错误"""
        with pytest.raises(TraceFormatError):
            TraceRecord.parse("tick=1 slot=0")
        with pytest.raises(TraceFormatError):
            TraceRecord.parse("tick=a slot=0 phase=0 actor=0 kind=slot")
        with pytest.raises(TraceFormatError):
            TraceRecord.parse("tick=1 slot=0 phase=0 actor=0 kind=gossip")
        with pytest.raises(TraceFormatError):
            list(iter_trace(["tick=1 slot=0 phase=0 actor=0 kind=slot", "garbage"]))

    def test_text_forms_agree(self):
        """测试 format_trace 与 write_trace 输出一致，且能解析回来"""
        records = [
            TraceRecord.make(0, 0, 0, -1, "slot"),
            TraceRecord.make(3, 1, 0, 4, "head-change", old="0000000000000000", new="00000000000000aa"),
        ]
        buf = io.StringIO()
        write_trace(records, buf)
        assert buf.getvalue() == format_trace(records)
        assert parse_trace(buf.getvalue()) == records


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
