"""
命令行测试：子命令与退出码
"""

import subprocess
import pytest
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from finality_sim.chain.block import GENESIS, fmt_digest, make_block
from finality_sim.cli import EXIT_MISMATCH, EXIT_OK, EXIT_UNSAFE, EXIT_USAGE, main
from finality_sim.sim.trace import SIMULATOR, TraceRecord, format_trace

SCENARIO = """
protocol = goldfish
n = 5
slots = 6
seed = 1
"""


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(SCENARIO, encoding="utf-8")
    return path


def conflicting_trace():
    """两个验证者最终确定了互相冲突的区块"""
    a = make_block(GENESIS, 1, 0)
    b = make_block(GENESIS, 2, 1)
    d = fmt_digest
    return [
        TraceRecord.make(0, 0, 0, SIMULATOR, "scenario", n=2, phases=3, gst=0, gat=float("inf"),
                         adversarial="-", total=64, weights="32,32"),
        TraceRecord.make(3, 1, 0, 0, "propose", block=d(a.digest), parent=d(GENESIS.digest)),
        TraceRecord.make(6, 2, 0, 1, "propose", block=d(b.digest), parent=d(GENESIS.digest)),
        TraceRecord.make(7, 2, 1, 0, "finalize", block=d(a.digest), index=1),
        TraceRecord.make(7, 2, 1, 1, "finalize", block=d(b.digest), index=2),
    ]


class TestRun:
    """run / analyze / diff 子命令测试"""

    def test_no_command(self, capsys):
        """测试没有子命令时打印帮助"""
        assert main([]) == EXIT_USAGE
        assert "finality_sim" in capsys.readouterr().out

    def test_run_writes_trace_and_report(self, scenario, tmp_path):
        """测试运行场景并写出轨迹与摘要"""
        trace, report = tmp_path / "run.trace", tmp_path / "run.report"
        assert main(["run", str(scenario), "-q", "--trace", str(trace), "--report", str(report)]) == EXIT_OK
        lines = report.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "slots=6"
        assert "safe=1" in lines
        assert trace.read_text(encoding="utf-8").startswith("tick=0 slot=0 phase=0 actor=-1 kind=scenario")

    def test_run_prints_summary(self, scenario, capsys):
        """测试非静默模式输出摘要"""
        assert main(["run", str(scenario), "--per-validator"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "运行摘要" in out
        assert "验证者" in out

    def test_report_to_stdout(self, scenario, capsys):
        """测试摘要写到标准输出"""
        assert main(["run", str(scenario), "-q", "--report", "-"]) == EXIT_OK
        assert "growth=1" in capsys.readouterr().out.splitlines()

    def test_analyze_matches_run(self, scenario, tmp_path):
        """测试离线分析给出与运行时相同的摘要"""
        trace, live, offline = tmp_path / "t", tmp_path / "live", tmp_path / "offline"
        main(["run", str(scenario), "-q", "--trace", str(trace), "--report", str(live)])
        assert main(["analyze", str(trace), "-q", "--report", str(offline)]) == EXIT_OK
        assert live.read_text(encoding="utf-8") == offline.read_text(encoding="utf-8")

    def test_diff(self, scenario, tmp_path, capsys):
        """测试相同种子的轨迹相同，不同种子的轨迹不同"""
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["run", str(scenario), "-q", "--trace", str(a)])
        main(["run", str(scenario), "-q", "--trace", str(b)])
        main(["run", str(scenario), "-q", "--trace", str(c), "--seed", "2"])
        assert main(["diff", str(a), str(b)]) == EXIT_OK
        assert main(["diff", str(a), str(c)]) == EXIT_MISMATCH
        assert "记录不同" in capsys.readouterr().out

    def test_analyze_unsafe_trace(self, tmp_path):
        """测试冲突的最终确定返回退出码 2"""
        path = tmp_path / "unsafe.trace"
        path.write_text(format_trace(conflicting_trace()), encoding="utf-8")
        assert main(["analyze", str(path), "-q"]) == EXIT_UNSAFE

    def test_bad_config(self, tmp_path, capsys):
        """测试配置错误返回退出码 1 并指出字段"""
        path = tmp_path / "bad.cfg"
        path.write_text("protocol = goldfish\nn = 4\neta = soon\n", encoding="utf-8")
        assert main(["run", str(path), "-q"]) == EXIT_USAGE
        out = capsys.readouterr().out
        assert "错误" in out and "eta" in out
        assert main(["run", str(tmp_path / "missing.cfg"), "-q"]) == EXIT_USAGE

    def test_bad_trace(self, tmp_path):
        """测试无法解析的轨迹返回退出码 1"""
        path = tmp_path / "garbage.trace"
        path.write_text("not a trace\n", encoding="utf-8")
        assert main(["analyze", str(path), "-q"]) == EXIT_USAGE

    def test_missing_positional(self, capsys):
        """测试缺少位置参数返回退出码 1 而不是 2"""
        assert main(["run"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "usage" in err and "config" in err

    def test_unknown_flag(self, capsys):
        """测试未知选项返回退出码 1"""
        assert main(["analyze", "x.trace", "--bogus"]) == EXIT_USAGE
        assert "--bogus" in capsys.readouterr().err

    def test_bad_option_value(self):
        """测试选项值类型错误与未知子命令返回退出码 1"""
        assert main(["pbft", "--n", "four"]) == EXIT_USAGE
        assert main(["replay"]) == EXIT_USAGE

    def test_help_exits_ok(self, capsys):
        """测试 --help 返回退出码 0"""
        assert main(["diff", "--help"]) == EXIT_OK
        assert "left" in capsys.readouterr().out


class TestPbftCommands:
    """pbft / quorum 子命令测试"""

    def test_pbft_safe(self):
        """测试模棱两可主副本的随机调度全部安全"""
        assert main(["pbft", "--seeds", "5", "-q", "--byzantine", "0:equivocating-primary"]) == EXIT_OK

    def test_pbft_bad_byzantine(self):
        """测试拜占庭参数格式与行为名错误"""
        assert main(["pbft", "--seeds", "1", "-q", "--byzantine", "0"]) == EXIT_USAGE
        assert main(["pbft", "--seeds", "1", "-q", "--byzantine", "1:lazy"]) == EXIT_USAGE

    def test_quorum(self, capsys):
        """测试法定人数交集表"""
        assert main(["quorum", "--max-f", "3"]) == EXIT_OK
        assert capsys.readouterr().out.count("满足") == 3


@pytest.mark.slow
def test_attack_suite_matches_expectations():
    """测试内置攻击套件全部与预期一致"""
    assert main(["attack-suite", "-q"]) == EXIT_OK


def test_module_entry_point():
    """测试 python -m finality_sim 入口"""
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    proc = subprocess.run([sys.executable, "-m", "finality_sim", "quorum", "--max-f", "2"],
                          cwd=root, stdout=subprocess.PIPE, stderr=subprocess.PIPE, timeout=60)
    assert proc.returncode == 0
    assert "法定人数交集" in proc.stdout.decode("utf-8", errors="ignore")

    proc = subprocess.run([sys.executable, "-m", "finality_sim", "run"],
                          cwd=root, stdout=subprocess.PIPE, stderr=subprocess.PIPE, timeout=60)
    assert proc.returncode == EXIT_USAGE


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
