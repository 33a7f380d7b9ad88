"""
确定性随机数

所有随机选择（委员会洗牌、提议者抽取、调度扰动）都来自 splitmix64，
并按 (seed, 用途标签, 槽/纪元) 派生子种子，保证跨运行逐位可复现。
"""

from __future__ import annotations
from typing import List, MutableSequence, TypeVar

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

T = TypeVar("T")


def mix64(z: int) -> int:
    """splitmix64 的输出混合函数"""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """64 位 FNV-1a 散列"""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def sub_seed(seed: int, tag: str, index: int) -> int:
    """
    派生子种子

    Args:
        seed: 场景种子
        tag: 用途标签，例如 "proposer"、"committee"
        index: 槽号或纪元号

    Returns:
        64 位子种子
    """
    tag_hash = fnv1a64(tag.encode("utf-8"))
    return mix64((seed & MASK64) ^ mix64((tag_hash + (index & MASK64)) & MASK64))


class SplitMix64:
    """splitmix64 生成器"""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """
        [0, bound) 上的无偏整数（拒绝采样）

        Raises:
            ValueError: bound 非正
        """
        if bound <= 0:
            raise ValueError(f"bound 必须为正: {bound}")
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound

    def between(self, low: int, high: int) -> int:
        """闭区间 [low, high] 上的整数"""
        return low + self.below(high - low + 1)

    def shuffle(self, items: MutableSequence[T]) -> None:
        """原地 Fisher–Yates 洗牌"""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def shuffled(self, items) -> List[T]:
        result = list(items)
        self.shuffle(result)
        return result
