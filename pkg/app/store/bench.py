"""
Simulated store cluster runs: servers, client sessions and a workload under a
fault plan, summarized as throughput, latency quantiles and checker verdicts.
"""

from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field
import structlog

from app.backends.deployment import DeploymentConfig, RangeSpec, build_deployment
from app.backends.structures import BackendName
from app.settings import settings
from app.sim.checker import check_transport
from app.sim.engine import Simulator
from app.sim.structures import FaultPlan, LinkFaults, ScriptSpec, Trace, Violation
import app.store.acl  # noqa: F401  registers the store-acl predicate
import app.store.attacks  # noqa: F401  registers the forging script
from app.store.attacks import FORGED_VALUE
from app.store.checker import check_convergence, check_no_forks, check_session_causality
from app.store.client import StoreClient, Workload, key_names
from app.store.server import StoreServer
from app.store.session import StoreSession
from app.store.structures import PartitionMap
from app.validators.structures import FrontendKind


logger = structlog.get_logger()

DEFAULT_FAULTS = LinkFaults(min_delay=1, max_delay=10, reorder_prob=0.1)


class StoreRunConfig(BaseModel):
    servers: int = Field(default=3, ge=1)
    clients: int = Field(default=2, ge=1)
    ops: int = Field(default=1000, ge=0, description='Operations per client')
    write_ratio: float = Field(default=0.01, ge=0.0, le=1.0)
    keys: int = Field(default=100, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed)
    backend: BackendName = Field(default_factory=lambda: BackendName(settings.backend))
    kinds: tuple[FrontendKind, ...] = (FrontendKind.UPDATE,)
    faults: LinkFaults = DEFAULT_FAULTS
    byzantine_servers: bool = Field(
        default=False, description='Every server forges its replies'
    )
    snapshot_dir: Path | None = None


class StoreRunResult(BaseModel):
    config: StoreRunConfig
    completed: int
    failed: int
    retries: int
    elapsed_ticks: int
    throughput: float = Field(description='Completed operations per 1000 ticks')
    latency_p50: float
    latency_p99: float
    latency_p999: float
    forged_accepted: int
    parked: int = Field(default=0, description='Propagated entries that waited for dependencies')
    violations: list[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def server_ids(count: int) -> tuple[str, ...]:
    return tuple(f'S{i}' for i in range(1, count + 1))


def latency_quantiles(latencies: list[int]) -> tuple[float, float, float]:
    if not latencies:
        return 0.0, 0.0, 0.0
    p50, p99, p999 = np.percentile(np.asarray(latencies, dtype=float), [50, 99, 99.9])
    return float(p50), float(p99), float(p999)


def build_cluster(config: StoreRunConfig) -> tuple[list[StoreServer], list[StoreClient]]:
    servers = server_ids(config.servers)
    keys = key_names(config.keys)
    partitions = PartitionMap.split(servers, list(keys))
    deployment = build_deployment(
        DeploymentConfig(
            backend=config.backend,
            kinds=config.kinds,
            ranges=tuple(
                RangeSpec(start=p.start.encode(), end=p.end.encode(), holder=p.owner)
                for p in partitions.partitions
            ),
            predicate='store-acl' if FrontendKind.APP in config.kinds else None,
            seed=f'store/{config.seed}',
        )
    )
    service = deployment.service
    server_procs = [
        StoreServer(
            pid,
            deployment.signer(pid),
            service,
            partitions,
            snapshot=config.snapshot_dir / f'{pid}.jsonl' if config.snapshot_dir else None,
        )
        for pid in servers
    ]
    workload = Workload(ops=config.ops, write_ratio=config.write_ratio, keys=keys)
    clients = [
        StoreClient(
            f'C{i}',
            StoreSession(f'C{i}', service.verify),
            partitions,
            workload,
            home=i - 1,
        )
        for i in range(1, config.clients + 1)
    ]
    return server_procs, clients


def run_store(
    config: StoreRunConfig | None = None,
) -> tuple[StoreRunResult, Trace, list[StoreServer]]:
    config = config or StoreRunConfig()
    servers, clients = build_cluster(config)
    for server in servers:
        server.restore()
    byzantine = (
        {server.pid: ScriptSpec(name='forge-values') for server in servers}
        if config.byzantine_servers
        else {}
    )
    plan = FaultPlan(seed=config.seed, default=config.faults, byzantine=byzantine)
    sim = Simulator([*servers, *clients], plan, record_payloads=False)
    trace = sim.run()

    completed = [e for e in trace.notes() if e.name in ('read', 'write')]
    latencies = [e.fields['latency'] for e in completed]
    p50, p99, p999 = latency_quantiles(latencies)
    elapsed = max((e.time for e in completed), default=0)
    forged = FORGED_VALUE.hex()

    violations = check_transport(trace) + check_session_causality(trace)
    if not config.byzantine_servers:
        violations += check_convergence(servers) + check_no_forks(servers)
    result = StoreRunResult(
        config=config,
        completed=len(completed),
        failed=sum(client.failed for client in clients),
        retries=sum(client.retries for client in clients),
        elapsed_ticks=elapsed,
        throughput=1000 * len(completed) / elapsed if elapsed else 0.0,
        latency_p50=p50,
        latency_p99=p99,
        latency_p999=p999,
        forged_accepted=sum(e.fields['value'] == forged for e in completed),
        parked=len(trace.notes('pending')),
        violations=violations,
    )
    logger.info(
        'Store run finished',
        seed=config.seed,
        write_ratio=config.write_ratio,
        completed=result.completed,
        failed=result.failed,
        throughput=round(result.throughput, 2),
        violations=len(violations),
    )
    return result, trace, servers
