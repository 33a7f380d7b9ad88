"""
协议引擎层

- Gasper-lite：HLMD-GHOST + 纪元检查点 FFG + 不活跃泄漏
- 提议-投票-合并族：Goldfish、RLMD-GHOST(η)、LMD 视图合并
- SSF：快速确认 + 确认（ack）法定人数在下一槽开始时最终确定
- 3SF：组合投票 + 三槽流水线最终确定
"""

from .base import (
    ProtocolKind, EngineParams, LedgerPair, is_prefix, extract_ledgers, Proposal,
    ValidatorState, AdversaryHooks, ProtocolEngine, link_label,
)
from .gasper import GasperLiteEngine
from .rlmd import ProposeVoteMergeEngine, RlmdEngine, GoldfishEngine, LmdViewMergeEngine
from .ssf import SsfEngine, slot_head_votes, supermajority_block
from .three_sf import ThreeSfEngine, PipelineVerdict, three_sf_pipeline_check
from .simulation import Simulation, PROTOCOL_REGISTRY, make_engine, list_protocols, item_label

__all__ = [
    # Base
    "ProtocolKind", "EngineParams", "LedgerPair", "is_prefix", "extract_ledgers", "Proposal",
    "ValidatorState", "AdversaryHooks", "ProtocolEngine", "link_label",
    # Engines
    "GasperLiteEngine", "ProposeVoteMergeEngine", "RlmdEngine", "GoldfishEngine",
    "LmdViewMergeEngine", "SsfEngine", "ThreeSfEngine",
    "slot_head_votes", "supermajority_block",
    # Pipeline
    "PipelineVerdict", "three_sf_pipeline_check",
    # Simulation
    "Simulation", "PROTOCOL_REGISTRY", "make_engine", "list_protocols", "item_label",
]
