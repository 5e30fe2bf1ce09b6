from app.store.bench import StoreRunConfig, StoreRunResult, latency_quantiles, run_store
from app.store.checker import check_convergence, check_no_forks, check_session_causality
from app.store.client import StoreClient, Workload, key_names
from app.store.server import StoreServer, read_snapshot
from app.store.session import StoreSession
from app.store.structures import (
    CausalityViolated,
    ForkEvidence,
    GetRequest,
    InvalidProof,
    NotUpToDate,
    Partition,
    PartitionMap,
    PutRequest,
    ReplyStatus,
    StaleRead,
    StoreError,
    StoreReply,
    VersionedEntry,
    WrongOwner,
)


__all__ = [
    'CausalityViolated',
    'ForkEvidence',
    'GetRequest',
    'InvalidProof',
    'NotUpToDate',
    'Partition',
    'PartitionMap',
    'PutRequest',
    'ReplyStatus',
    'StaleRead',
    'StoreClient',
    'StoreError',
    'StoreReply',
    'StoreRunConfig',
    'StoreRunResult',
    'StoreServer',
    'StoreSession',
    'VersionedEntry',
    'Workload',
    'WrongOwner',
    'check_convergence',
    'check_no_forks',
    'check_session_causality',
    'key_names',
    'latency_quantiles',
    'read_snapshot',
    'run_store',
]
