"""
Builds and runs lock contention simulations and checks their traces
"""

from enum import Enum
import random

from pydantic import BaseModel, Field
import structlog

from app.backends.deployment import Deployment, DeploymentConfig, build_deployment
from app.backends.structures import BackendName
import app.mutex.attacks  # noqa: F401  registers the replay script
from app.mutex.checker import (
    check_all_granted,
    check_exclusion,
    check_grant_order,
    check_proof_exclusion,
)
from app.mutex.process import MutexProcess
from app.mutex.proof import check_acquisition
from app.settings import settings
from app.sim.checker import check_transport
from app.sim.engine import Simulator
from app.sim.structures import (
    FaultPlan,
    LinkFaults,
    ScriptSpec,
    SimEventKind,
    Trace,
    Violation,
)
from app.validators.structures import FrontendKind


logger = structlog.get_logger()


class MutexPlan(str, Enum):
    NONE = 'none'
    DELAY_REORDER = 'delay-reorder'
    REORDER_DUPLICATE = 'reorder-duplicate'


def fault_plan(plan: MutexPlan, seed: int) -> FaultPlan:
    match plan:
        case MutexPlan.NONE:
            faults = LinkFaults(min_delay=1, max_delay=10)
        case MutexPlan.DELAY_REORDER:
            faults = LinkFaults(min_delay=1, max_delay=40, reorder_prob=0.3)
        case MutexPlan.REORDER_DUPLICATE:
            faults = LinkFaults(
                min_delay=1, max_delay=10, reorder_prob=0.3, duplicate_prob=0.2
            )
    return FaultPlan(seed=seed, default=faults)


class MutexRunResult(BaseModel):
    n: int
    contenders: int
    seed: int
    backend: BackendName
    plan: str
    requests: int
    grants: int
    messages: int
    proofs_valid: int
    proof_sizes: list[int] = Field(default_factory=list)
    wait_ticks: list[int] = Field(default_factory=list)
    end_time: int = 0
    violations: list[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def pids_for(n: int) -> tuple[str, ...]:
    return tuple(f'P{i}' for i in range(1, n + 1))


def build_processes(
    deployment: Deployment,
    contenders: int,
    rounds: int,
    seed: int,
) -> list[MutexProcess]:
    pids = deployment.config.entities
    roster = {pid: deployment.signer(pid).public_bytes for pid in pids}
    rng = random.Random(seed)
    return [
        MutexProcess(
            pid,
            deployment.signer(pid),
            deployment.service,
            roster,
            rounds=rounds if index < contenders else 0,
            start_at=rng.randint(0, 5),
        )
        for index, pid in enumerate(pids)
    ]


def wait_times(trace: Trace) -> list[int]:
    """Ticks from each request to its grant"""
    asked: dict[str, int] = {}
    waits = []
    for note in trace.notes():
        if note.name == 'request':
            asked[note.src] = note.time
        elif note.name == 'grant' and note.src in asked:
            waits.append(note.time - asked.pop(note.src))
    return waits


def run_mutex(
    n: int = 5,
    contenders: int | None = None,
    seed: int = 7,
    backend: BackendName | None = None,
    plan: MutexPlan | FaultPlan = MutexPlan.NONE,
    rounds: int = 1,
    byzantine: dict[str, ScriptSpec] | None = None,
    max_events: int | None = None,
) -> tuple[MutexRunResult, Trace, list[MutexProcess]]:
    contenders = n if contenders is None else contenders
    backend = backend or BackendName(settings.backend)
    deployment = build_deployment(
        DeploymentConfig(
            backend=backend,
            kinds=(FrontendKind.UPDATE, FrontendKind.MONO),
            entities=pids_for(n),
            seed=f'mutex/{seed}',
        )
    )
    fault = plan if isinstance(plan, FaultPlan) else fault_plan(plan, seed)
    if byzantine:
        fault = fault.model_copy(update={'byzantine': byzantine})
    processes = build_processes(deployment, contenders, rounds, seed)
    expected = contenders * rounds
    trace = Simulator(processes, fault).run(
        until=lambda: sum(len(p.proofs) for p in processes) >= expected
        and not any(p.holding for p in processes),
        max_events=max_events,
    )

    roster = processes[0].roster
    proofs = [proof for p in processes for proof in p.proofs]
    verify = deployment.service.verify
    valid_proofs = [proof for proof in proofs if check_acquisition(roster, verify, proof)]
    valid = len(valid_proofs)
    violations = (
        check_transport(trace)
        + check_exclusion(trace)
        + check_grant_order(trace)
        + check_all_granted(trace, expected)
        + check_proof_exclusion(valid_proofs)
    )
    if valid != len(proofs):
        violations.append(
            Violation(
                checker='acquisition-proof',
                message=f'{len(proofs) - valid} of {len(proofs)} proofs do not check',
            )
        )

    result = MutexRunResult(
        n=n,
        contenders=contenders,
        seed=seed,
        backend=backend,
        plan=plan.value if isinstance(plan, MutexPlan) else 'custom',
        requests=len(trace.notes('request')),
        grants=len(trace.notes('grant')),
        messages=len(trace.of_kind(SimEventKind.SEND)),
        proofs_valid=valid,
        proof_sizes=[proof.size for proof in proofs],
        wait_ticks=wait_times(trace),
        end_time=trace.events[-1].time if trace.events else 0,
        violations=violations,
    )
    logger.info(
        'Mutex run finished',
        n=n,
        seed=seed,
        plan=result.plan,
        grants=result.grants,
        messages=result.messages,
        violations=len(violations),
    )
    return result, trace, processes
