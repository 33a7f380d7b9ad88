"""
Casper FFG 层

- 超级多数链接、证明与最终确定规则
- 罚没条件
- 可追责安全性审计
- 不活跃泄漏
"""

from .justification import (
    Link, FinalityRule, JustificationState, supermajority, supermajority_link,
    validate_link, update_justification, update_finalization,
)
from .slashing import (
    SlashingCondition, SlashingRecord, detect_slashing, slashable_validators,
    is_double, surrounds, jumps_over, three_sf_extra,
)
from .audit import (
    AuditReport, accountable_safety_audit, find_conflicting_finalized,
    Action, small_model, execution_votes, evaluate_execution, enumerate_ffg_executions,
)
from .leak import LeakConfig, RecoveryPrediction, inactivity_leak, predict_recovery, recovery_curve

__all__ = [
    # Justification
    "Link", "FinalityRule", "JustificationState", "supermajority", "supermajority_link",
    "validate_link", "update_justification", "update_finalization",
    # Slashing
    "SlashingCondition", "SlashingRecord", "detect_slashing", "slashable_validators",
    "is_double", "surrounds", "jumps_over", "three_sf_extra",
    # Audit
    "AuditReport", "accountable_safety_audit", "find_conflicting_finalized",
    "Action", "small_model", "execution_votes", "evaluate_execution", "enumerate_ffg_executions",
    # Leak
    "LeakConfig", "RecoveryPrediction", "inactivity_leak", "predict_recovery", "recovery_curve",
]
