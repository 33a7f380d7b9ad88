"""
轨迹记录

每条记录一行：`tick= slot= phase= actor= kind=`，随后是该类型的载荷键，
键序固定（见 PAYLOAD_KEYS），缺省值省略。整数用十进制，摘要用 16 位小写十六进制。
actor=-1 表示模拟器自身。
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, TextIO, Tuple

from ..errors import TraceFormatError

SIMULATOR = -1

HEADER_KEYS = ("tick", "slot", "phase", "actor", "kind")

PAYLOAD_KEYS: Dict[str, Tuple[str, ...]] = {
    "scenario": ("n", "phases", "gst", "gat", "adversarial", "total", "weights"),
    "slot": (),
    "propose": ("block", "parent", "private"),
    "no-proposal": (),
    "vote": ("head", "source", "source_index", "target", "target_index"),
    "ffg-vote": ("source", "source_index", "target", "target_index"),
    "ack": ("target", "target_index"),
    "deliver": ("item", "to", "at"),
    "merge": ("moved",),
    "justify": ("block", "index"),
    "finalize": ("block", "index"),
    "slash": ("condition", "first", "second"),
    "confirm": ("da", "da_len", "fin", "fin_len", "conf"),
    "head-change": ("old", "new"),
    "attack": ("strategy", "success", "depth", "orphaned"),
    "leak": ("epoch", "unfinalized", "inactive", "drained", "total"),
    # pBFT
    "pre-prepare": ("view", "seq", "digest"),
    "prepare": ("view", "seq", "digest"),
    "commit": ("view", "seq", "digest"),
    "prepared": ("view", "seq", "digest"),
    "execute": ("view", "seq", "digest"),
    "reject": ("view", "seq", "digest", "reason"),
    "view-change": ("view", "prepared"),
    "new-view": ("view", "reproposed"),
}


def fmt_value(value: object) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "inf" if value == float("inf") else str(int(value))
    return str(value)


@dataclass(frozen=True)
class TraceRecord:
    """
    轨迹记录
    """
    tick: int
    slot: int
    phase: int
    actor: int
    kind: str
    payload: Tuple[Tuple[str, str], ...] = ()

    @classmethod
    def make(cls, tick: int, slot: int, phase: int, actor: int, kind: str,
             **payload: object) -> "TraceRecord":
        """
        按固定键序构造记录（值为 None 的键省略）

        Raises:
            ValueError: 未知类型或未知载荷键
        """
        if kind not in PAYLOAD_KEYS:
            raise ValueError(f"未知记录类型: {kind}")
        order = PAYLOAD_KEYS[kind]
        unknown = {k for k, v in payload.items() if v is not None} - set(order)
        if unknown:
            raise ValueError(f"记录类型 {kind} 不接受键: {', '.join(sorted(unknown))}")
        items = tuple((k, fmt_value(payload[k])) for k in order
                      if k in payload and payload[k] is not None)
        return cls(tick, slot, phase, actor, kind, items)

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.payload:
            if k == key:
                return v
        return default

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        v = self.get(key)
        return default if v is None else int(v)

    def get_digest(self, key: str) -> Optional[int]:
        v = self.get(key)
        return None if v is None else int(v, 16)

    def to_line(self) -> str:
        head = f"tick={self.tick} slot={self.slot} phase={self.phase} actor={self.actor} kind={self.kind}"
        if not self.payload:
            return head
        return head + " " + " ".join(f"{k}={v}" for k, v in self.payload)

    @classmethod
    def parse(cls, line: str, lineno: Optional[int] = None) -> "TraceRecord":
        """
        解析一行

        Raises:
            TraceFormatError: 格式错误
        """
        where = f"第 {lineno} 行: " if lineno is not None else ""
        fields: List[Tuple[str, str]] = []
        for token in line.strip().split(" "):
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise TraceFormatError(f"{where}无法解析字段 '{token}'")
            fields.append((key, value))
        if len(fields) < 5 or tuple(k for k, _ in fields[:5]) != HEADER_KEYS:
            raise TraceFormatError(f"{where}缺少记录头 {' '.join(HEADER_KEYS)}")
        try:
            tick, slot, phase, actor = (int(v) for _, v in fields[:4])
        except ValueError:
            raise TraceFormatError(f"{where}记录头必须为整数") from None
        kind = fields[4][1]
        if kind not in PAYLOAD_KEYS:
            raise TraceFormatError(f"{where}未知记录类型 '{kind}'")
        return cls(tick, slot, phase, actor, kind, tuple(fields[5:]))


# ============================================================================
# 便捷函数
# ============================================================================

def format_trace(records: Iterable[TraceRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in records)


def write_trace(records: Iterable[TraceRecord], out: TextIO) -> None:
    for r in records:
        out.write(r.to_line())
        out.write("\n")


def parse_trace(text: str) -> List[TraceRecord]:
    return list(iter_trace(text.splitlines()))


def iter_trace(lines: Iterable[str]) -> Iterator[TraceRecord]:
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            yield TraceRecord.parse(line, lineno)


def load_trace(path: str) -> List[TraceRecord]:
    with open(path, encoding="utf-8") as f:
        return list(iter_trace(f))
