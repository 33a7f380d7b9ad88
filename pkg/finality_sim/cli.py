"""
命令行接口

用法:
    # 运行一个场景
    python -m finality_sim run scenario.cfg --seed 7 --trace run.trace --report run.report

    # 离线分析保存下来的轨迹
    python -m finality_sim analyze run.trace

    # 比对两条轨迹
    python -m finality_sim diff a.trace b.trace

    # 内置攻击套件
    python -m finality_sim attack-suite --seeds 5

退出码: 0 成功，1 用法或配置错误，2 检测到安全违规，3 与预期结果不符
"""

from __future__ import annotations
import argparse
import logging
import sys
import time
from typing import List, NoReturn, Optional, Sequence

from tqdm import tqdm

from .analysis.config import load_config
from .analysis.detectors import compare_traces
from .analysis.report import SummaryReport, report_from_trace
from .analysis.runner import run_scenario
from .analysis.suite import run_suite
from .errors import SimulationError
from .pbft.harness import run_pbft_schedule
from .pbft.quorum import intersection_table
from .pbft.replica import list_behaviours
from .sim.trace import load_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNSAFE = 2
EXIT_MISMATCH = 3


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_lines(path: str, lines: Sequence[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _report_exit(report: SummaryReport) -> int:
    if not report.safe or report.ledger_violations:
        for v in report.ledger_violations[:10]:
            logger.error("%s", v)
        return EXIT_UNSAFE
    return EXIT_OK


# ============================================================================
# 子命令
# ============================================================================

def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    start_time = time.time()
    if args.trace:
        if args.trace == "-":
            result = run_scenario(config, seed=args.seed, out=sys.stdout, window=args.window)
        else:
            with open(args.trace, "w", encoding="utf-8") as out:
                result = run_scenario(config, seed=args.seed, out=out, window=args.window)
    else:
        result = run_scenario(config, seed=args.seed, window=args.window)
    if args.report:
        _write_lines(args.report, result.report.to_lines())
    if not args.quiet:
        print(result.format_result())
        if args.per_validator:
            print(result.report.format_result(per_validator=True))
        print(f"\n耗时: {time.time() - start_time:.2f} 秒")
    if result.audit.safety_violated:
        return EXIT_UNSAFE
    return _report_exit(result.report)


def cmd_analyze(args: argparse.Namespace) -> int:
    trace = load_trace(args.trace)
    report = report_from_trace(trace, args.window)
    if args.report:
        _write_lines(args.report, report.to_lines())
    if not args.quiet:
        print(report.format_result(per_validator=args.per_validator))
        print()
        for line in report.to_lines():
            print(line)
    return _report_exit(report)


def cmd_diff(args: argparse.Namespace) -> int:
    with open(args.left, encoding="utf-8") as f:
        left = f.read().splitlines()
    with open(args.right, encoding="utf-8") as f:
        right = f.read().splitlines()
    diff = compare_traces(left, right)
    print(diff.format_result())
    return EXIT_OK if diff.equal else EXIT_MISMATCH


def cmd_attack_suite(args: argparse.Namespace) -> int:
    seeds = range(args.seed_start, args.seed_start + args.seeds)
    report = run_suite(seeds=seeds, quiet=args.quiet)
    if not args.quiet:
        print(report.format_result())
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_pbft(args: argparse.Namespace) -> int:
    byzantine = {}
    for item in args.byzantine or ():
        rid, sep, behaviour = item.partition(":")
        if not sep:
            print(f"错误: --byzantine 需要 '编号:行为' 格式，得到 '{item}'")
            return EXIT_USAGE
        byzantine[int(rid)] = behaviour
    seeds = range(args.seed_start, args.seed_start + args.seeds)
    unsafe = 0
    last = None
    for seed in tqdm(seeds, desc="pbft", unit="schedule", disable=args.quiet):
        last = run_pbft_schedule(seed, n=args.n, requests=args.requests, byzantine=byzantine,
                                 max_delay=args.max_delay)
        if not last.safe:
            unsafe += 1
            if not args.quiet:
                print(last.format_result())
    if not args.quiet:
        if last is not None and args.verbose:
            print(last.format_result())
        print(f"{len(seeds)} 次调度，{unsafe} 次违反安全性")
    return EXIT_UNSAFE if unsafe else EXIT_OK


def cmd_quorum(args: argparse.Namespace) -> int:
    table = intersection_table(args.max_f)
    if not args.quiet:
        print("=" * 60)
        print("法定人数交集（n = 3f+1，枚举）")
        print("=" * 60)
        for bound in table:
            print(bound.format_result())
        print("=" * 60)
    return EXIT_OK if all(b.ok for b in table) else EXIT_UNSAFE


# ============================================================================
# 参数解析
# ============================================================================

class UsageParser(argparse.ArgumentParser):
    """用法错误以 EXIT_USAGE 退出的参数解析器"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = UsageParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="详细输出（DEBUG 日志）")
    common.add_argument("--quiet", "-q", action="store_true", help="静默模式")

    parser = UsageParser(
        prog="finality_sim",
        description="finality_sim - 以太坊风格共识协议的确定性离散事件模拟器",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 运行场景并保存轨迹与摘要
  python -m finality_sim run scenario.cfg --trace run.trace --report run.report

  # 用另一个种子重跑
  python -m finality_sim run scenario.cfg --seed 42

  # 离线分析
  python -m finality_sim analyze run.trace

  # 比对两条轨迹（不同时退出码为 3）
  python -m finality_sim diff a.trace b.trace

  # 内置攻击套件，每个用例 5 个种子
  python -m finality_sim attack-suite --seeds 5

  # pBFT 随机调度，副本 0 为模棱两可的主节点
  python -m finality_sim pbft --seeds 1000 --byzantine 0:equivocating-primary
        """,
    )
    sub = parser.add_subparsers(dest="command", metavar="命令")

    p = sub.add_parser("run", parents=[common], help="运行一个场景")
    p.add_argument("config", help="场景配置文件")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="覆盖配置中的种子")
    p.add_argument("--trace", metavar="PATH", help="轨迹输出路径（- 为标准输出）")
    p.add_argument("--report", metavar="PATH", help="摘要（key=value）输出路径")
    p.add_argument("--window", type=int, default=4, help="增长区间窗口长度 ℓ (默认: 4)")
    p.add_argument("--per-validator", action="store_true", help="显示每个验证者的最终确定延迟")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("analyze", parents=[common], help="分析保存下来的轨迹")
    p.add_argument("trace", help="轨迹文件")
    p.add_argument("--report", metavar="PATH", help="摘要（key=value）输出路径")
    p.add_argument("--window", type=int, default=4, help="增长区间窗口长度 ℓ (默认: 4)")
    p.add_argument("--per-validator", action="store_true", help="显示每个验证者的最终确定延迟")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("diff", parents=[common], help="逐条比对两条轨迹")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(handler=cmd_diff)

    p = sub.add_parser("attack-suite", parents=[common], help="运行内置攻击套件")
    p.add_argument("--seeds", type=int, default=1, help="每个用例的种子数 (默认: 1)")
    p.add_argument("--seed-start", type=int, default=0, help="第一个种子 (默认: 0)")
    p.set_defaults(handler=cmd_attack_suite)

    p = sub.add_parser("pbft", parents=[common], help="随机调度下检查 pBFT 安全性")
    p.add_argument("--n", type=int, default=4, help="副本数 (默认: 4)")
    p.add_argument("--seeds", type=int, default=100, help="调度数 (默认: 100)")
    p.add_argument("--seed-start", type=int, default=0, help="第一个种子 (默认: 0)")
    p.add_argument("--requests", type=int, default=3, help="每次调度的请求数 (默认: 3)")
    p.add_argument("--max-delay", type=int, default=3, help="最大消息延迟 (默认: 3)")
    p.add_argument("--byzantine", action="append", metavar="ID:BEHAVIOUR",
                   help=f"拜占庭副本，可重复；行为: {', '.join(list_behaviours())}")
    p.set_defaults(handler=cmd_pbft)

    p = sub.add_parser("quorum", parents=[common], help="枚举检查法定人数交集")
    p.add_argument("--max-f", type=int, default=5, help="最大 f (默认: 5)")
    p.set_defaults(handler=cmd_quorum)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    _configure_logging(args)
    try:
        return args.handler(args)
    except SimulationError as e:
        print(f"错误: {e}")
        return EXIT_USAGE
    except OSError as e:
        print(f"错误: {e}")
        return EXIT_USAGE
    except ValueError as e:
        print(f"错误: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
