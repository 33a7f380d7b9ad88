"""
提议者与委员会选择

- 委员会：按 (seed, "committee", epoch) 做 Fisher–Yates 洗牌后均分为 32 组
- 提议者：按 (seed, "proposer", slot) 以有效余额加权抽取
"""

from __future__ import annotations
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..errors import ConfigError
from ..sim.clock import SLOTS_PER_EPOCH
from ..sim.rng import SplitMix64, sub_seed

logger = logging.getLogger(__name__)

Committee = Tuple[int, ...]


def _split_even(ids: Sequence[int], parts: int) -> List[Committee]:
    n = len(ids)
    return [tuple(ids[i * n // parts:(i + 1) * n // parts]) for i in range(parts)]


def committees(epoch: int, validators: Sequence[int], seed: int,
               count: int = SLOTS_PER_EPOCH,
               overrides: Optional[Mapping[int, Sequence[int]]] = None) -> List[Committee]:
    """
    把验证者集合划分为 count 个委员会（每槽一个）

    Args:
        epoch: 纪元号
        validators: 验证者编号
        seed: 场景种子
        count: 委员会数量（每纪元槽数）
        overrides: 脚本指定的委员会 {纪元内槽序号: 成员}，其余成员在剩余槽中洗牌均分

    Returns:
        长度为 count 的委员会列表

    Raises:
        ConfigError: 验证者少于 count，或脚本成员重复/越界
    """
    if len(validators) < count:
        raise ConfigError(f"至少需要 {count} 个验证者才能划分委员会，实际 {len(validators)}", field="n")
    rng = SplitMix64(sub_seed(seed, "committee", epoch))
    if not overrides:
        return _split_even(rng.shuffled(sorted(validators)), count)

    fixed: Dict[int, Committee] = {}
    taken = set()
    for index, members in overrides.items():
        if not 0 <= index < count:
            raise ConfigError(f"脚本委员会序号 {index} 超出 [0, {count})", field="attack.slot")
        for m in members:
            if m in taken:
                raise ConfigError(f"验证者 {m} 被脚本放入多个委员会", field="attack.slot")
            taken.add(m)
        fixed[index] = tuple(sorted(members))
    pool = rng.shuffled([v for v in sorted(validators) if v not in taken])
    free = [i for i in range(count) if i not in fixed]
    chunks = _split_even(pool, len(free)) if free else []
    result: List[Committee] = []
    chunk_iter = iter(chunks)
    for i in range(count):
        result.append(fixed[i] if i in fixed else next(chunk_iter))
    return result


def select_proposer(slot: int, eligible: Mapping[int, int], seed: int) -> Optional[int]:
    """
    按有效余额加权抽取提议者

    Args:
        slot: 槽号
        eligible: 可参与的验证者 -> 有效余额（ETH）
        seed: 场景种子

    Returns:
        提议者编号；没有合格验证者时返回 None（该槽不出块）
    """
    candidates = [(vid, w) for vid, w in sorted(eligible.items()) if w > 0]
    if not candidates:
        logger.info("槽 %d 没有合格提议者", slot)
        return None
    total = sum(w for _, w in candidates)
    r = SplitMix64(sub_seed(seed, "proposer", slot)).below(total)
    for vid, w in candidates:
        if r < w:
            return vid
        r -= w
    return candidates[-1][0]
