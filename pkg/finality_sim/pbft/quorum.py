"""
法定人数交集

n ≥ 3f+1 时任意两个 2f+1 法定人数至少交于 f+1 个副本，因此至少有一个诚实副本同时在两者之中。
"""

from __future__ import annotations
import itertools
from dataclasses import dataclass
from typing import List


@dataclass
class QuorumBound:
    """
    法定人数交集检查结果
    """
    n: int              # 副本数
    f: int              # 容忍的拜占庭副本数
    overlap: int        # 两个 2f+1 法定人数的最小交集 2(2f+1) - n
    required: int       # f+1

    @property
    def ok(self) -> bool:
        return self.n >= 3 * self.f + 1 and self.overlap >= self.required

    def format_result(self) -> str:
        status = "满足" if self.ok else "违反"
        return (f"n={self.n}, f={self.f}: 最小交集 {self.overlap}, "
                f"需要 {self.required} -> {status}")


def quorum_intersection(n: int, f: int) -> QuorumBound:
    """
    两个 2f+1 法定人数的最小交集

    Args:
        n: 副本数
        f: 拜占庭副本数

    Returns:
        QuorumBound；n ≤ 3f 时 ok 为 False

    Raises:
        ValueError: n 或 f 为负，或法定人数超过 n
    """
    if n < 1 or f < 0:
        raise ValueError(f"非法参数: n={n}, f={f}")
    if 2 * f + 1 > n:
        raise ValueError(f"法定人数 {2 * f + 1} 超过副本数 {n}")
    return QuorumBound(n=n, f=f, overlap=2 * (2 * f + 1) - n, required=f + 1)


def exhaustive_intersection_check(f: int) -> int:
    """
    在 n = 3f+1 上枚举法定人数对，返回观察到的最小交集

    按副本置换的对称性固定第一个法定人数为 {0..2f}，枚举第二个法定人数的全部取法。
    """
    n = 3 * f + 1
    q = 2 * f + 1
    first = set(range(q))
    return min(len(first.intersection(second)) for second in itertools.combinations(range(n), q))


def intersection_table(max_f: int = 5) -> List[QuorumBound]:
    """f = 1..max_f 的交集检查（用枚举值核对闭式）"""
    table = []
    for f in range(1, max_f + 1):
        bound = quorum_intersection(3 * f + 1, f)
        observed = exhaustive_intersection_check(f)
        table.append(QuorumBound(n=bound.n, f=f, overlap=observed, required=bound.required))
    return table
