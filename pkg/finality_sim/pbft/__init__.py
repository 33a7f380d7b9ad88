"""
pBFT 参考实现

经典三阶段拜占庭容错（预准备 / 准备 / 提交）与简化的视图切换，
作为经典最终确定的对照基线。
"""

from .replica import (
    NULL_DIGEST, Request, PrePrepare, Prepare, Commit, PreparedCert, ViewChange, NewView,
    LogEntry, Transport, Outbox, Replica, SilentReplica, EquivocatingPrimary,
    IndiscriminateBackup, REPLICA_BEHAVIOURS, make_replica, list_behaviours,
    faults_tolerated, primary_of, request_digest,
)
from .quorum import QuorumBound, quorum_intersection, exhaustive_intersection_check, intersection_table
from .harness import PbftCluster, PbftRunResult, check_pbft_safety, run_pbft_schedule

__all__ = [
    # Messages
    "NULL_DIGEST", "Request", "PrePrepare", "Prepare", "Commit", "PreparedCert",
    "ViewChange", "NewView",
    # Replica
    "LogEntry", "Transport", "Outbox", "Replica", "SilentReplica", "EquivocatingPrimary",
    "IndiscriminateBackup", "REPLICA_BEHAVIOURS", "make_replica", "list_behaviours",
    "faults_tolerated", "primary_of", "request_digest",
    # Quorum
    "QuorumBound", "quorum_intersection", "exhaustive_intersection_check", "intersection_table",
    # Harness
    "PbftCluster", "PbftRunResult", "check_pbft_safety", "run_pbft_schedule",
]
