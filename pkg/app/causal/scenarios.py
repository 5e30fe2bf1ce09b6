"""
Scripted three-process causal delivery runs. P1 sends m1 to P3 over a slow
link and then m2 to P2; P2 answers m2 with m3 to P3, so m3 reaches P3 first
even though m1 happened before it. The attack scenarios make P2 Byzantine.
"""

from enum import Enum

from pydantic import BaseModel, Field
import structlog

from app.backends.deployment import Deployment, DeploymentConfig, build_deployment
from app.backends.structures import BackendName
import app.causal.attacks  # noqa: F401  registers the Byzantine scripts
from app.causal.checker import check_causal_delivery, check_pair_order
from app.causal.middlebox import CausalMiddlebox
from app.causal.process import CausalProcess
from app.causal.structures import DiscardReason, Send
from app.sim.engine import Simulator
from app.sim.structures import FaultPlan, LinkFaults, ScriptSpec, Trace, Violation
from app.validators.structures import FrontendKind


logger = structlog.get_logger()

PIDS = ('P1', 'P2', 'P3')
VICTIM = 'P3'
SLOW_LINK_TICKS = 100


class Scenario(str, Enum):
    MOTIVATING = 'motivating'
    ERRONEOUS_CLOCK = 'erroneous-clock'
    CHERRY_PICK = 'cherry-pick'
    STALE_BASE = 'stale-base'

    @property
    def byzantine(self) -> bool:
        return self is not Scenario.MOTIVATING


class Verdict(str, Enum):
    ORDER_KEPT = 'causal-order-kept'
    REJECTED_BY_VERIFY = 'rejected-by-verify'
    REJECTED_STALE_BASE = 'rejected-stale-base'
    MISORDERED = 'misordered'


class ScenarioResult(BaseModel):
    scenario: Scenario
    backend: BackendName
    kinds: tuple[FrontendKind, ...]
    seed: int
    verdict: Verdict
    clocks: dict[str, dict[str, int]] = Field(
        default_factory=dict, description='Payload to the clock its sender attached'
    )
    victim_delivered: list[str] = Field(default_factory=list)
    victim_discarded: dict[str, str] = Field(default_factory=dict)
    violations: list[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _sends(scenario: Scenario) -> dict[str, list[Send]]:
    sends = {
        'P1': [
            Send(to=('P3',), payload=b'm1', at=10),
            Send(to=('P2',), payload=b'm2', at=11),
        ],
        'P2': [],
        'P3': [],
    }
    if scenario is Scenario.CHERRY_PICK:
        # P3 talks to both peers first so m1 and m2 carry a P3 entry
        sends['P3'] = [
            Send(to=('P2',), payload=b'ma', at=0),
            Send(to=('P1',), payload=b'mb', at=1),
        ]
    if scenario is Scenario.STALE_BASE:
        # gives P2 an own clock that is older than its later merges
        sends['P2'] = [Send(to=('P1',), payload=b'm0', at=0)]
    return sends


def build_processes(scenario: Scenario, deployment: Deployment) -> list[CausalProcess]:
    sends = _sends(scenario)
    reactions = {'P2': {b'm2': [Send(to=('P3',), payload=b'm3')]}}
    return [
        CausalProcess(
            pid,
            CausalMiddlebox(pid, deployment.signer(pid), deployment.service),
            sends=sends[pid],
            reactions=reactions.get(pid),
        )
        for pid in PIDS
    ]


def build_plan(scenario: Scenario, seed: int) -> FaultPlan:
    byzantine = {'P2': ScriptSpec(name=scenario.value)} if scenario.byzantine else {}
    return FaultPlan(
        seed=seed,
        default=LinkFaults.fixed(1),
        links={f'P1->{VICTIM}': LinkFaults.fixed(SLOW_LINK_TICKS)},
        byzantine=byzantine,
    )


def _verdict(trace: Trace, violations: list[Violation], discarded: dict[str, str]) -> Verdict:
    if violations:
        return Verdict.MISORDERED
    if trace.notes('fork-rejected'):
        return Verdict.REJECTED_STALE_BASE
    if discarded.get('m3') == DiscardReason.INVALID_PROOF.value:
        return Verdict.REJECTED_BY_VERIFY
    return Verdict.ORDER_KEPT


def run_scenario(
    scenario: Scenario,
    backend: BackendName = BackendName.QUORUM,
    mono: bool = True,
    seed: int = 0,
) -> tuple[ScenarioResult, Trace]:
    kinds = (FrontendKind.UPDATE, FrontendKind.MONO) if mono else (FrontendKind.UPDATE,)
    deployment = build_deployment(
        DeploymentConfig(backend=backend, kinds=kinds, entities=PIDS, seed=f'causal/{seed}')
    )
    processes = build_processes(scenario, deployment)
    trace = Simulator(processes, build_plan(scenario, seed)).run()

    honest = [pid for pid in PIDS if not (scenario.byzantine and pid == 'P2')]
    violations = check_pair_order(trace, VICTIM, before='m1', after='m3')
    violations += check_causal_delivery(trace, honest)
    discarded = {
        note.fields['payload']: note.fields['reason']
        for note in trace.notes('discard')
        if note.src == VICTIM
    }
    result = ScenarioResult(
        scenario=scenario,
        backend=backend,
        kinds=kinds,
        seed=seed,
        verdict=_verdict(trace, violations, discarded),
        clocks={note.fields['payload']: note.fields['clock'] for note in trace.notes('send')},
        victim_delivered=[
            note.fields['payload'] for note in trace.notes('deliver') if note.src == VICTIM
        ],
        victim_discarded=discarded,
        violations=violations,
    )
    logger.info(
        'Scenario finished',
        scenario=scenario.value,
        backend=backend.value,
        kinds=[kind.value for kind in kinds],
        verdict=result.verdict.value,
    )
    deployment.service.close()
    return result, trace
