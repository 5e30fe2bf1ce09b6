"""
Subcommand implementations. Simulation commands return RunReports that the
entry point writes under --out; service commands return an exit code.
"""

import argparse
import asyncio
import json
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from app.backends.deployment import (
    DeploymentConfig,
    build_handlers,
    build_permissions,
    entity_key,
    quorum_config,
    root_key,
    validator_key,
)
from app.backends.node_server import start_node_server
from app.backends.structures import BackendName
from app.causal.checker import check_causal_delivery
from app.causal.scenarios import Scenario, run_scenario
from app.cli.micro import run_micro
from app.cli.report import RunReport
from app.crypto import KeyPair
from app.mutex.checker import check_all_granted, check_exclusion, check_grant_order
from app.mutex.runner import MutexPlan, run_mutex
from app.sim.checker import check_transport
from app.sim.runtime import SocketRuntime
from app.sim.structures import FaultPlan, SimEventKind, Trace, Violation
from app.store.bench import StoreRunConfig, build_cluster, latency_quantiles, run_store
from app.store.checker import check_convergence, check_no_forks, check_session_causality
from app.validators.permissions import write_signed_table
from app.validators.structures import FrontendKind


logger = structlog.get_logger()

MUTEX_CHECKERS = [
    'transport',
    'mutual-exclusion',
    'ordered-access',
    'liveness',
    'acquisition-proof',
    'proof-exclusion',
]
STORE_CHECKERS = ['transport', 'causal-consistency', 'convergence', 'version-linearity']


def admin_key(seed: str) -> KeyPair:
    return KeyPair.from_seed(f'{seed}/admin')


def _save_trace(args: argparse.Namespace, name: str, trace: Trace) -> None:
    if getattr(args, 'trace', False):
        path = Path(args.out) / f'{name}.trace.jsonl'
        path.parent.mkdir(parents=True, exist_ok=True)
        trace.write_jsonl(path)
        logger.info('Trace written', path=str(path), events=len(trace))


def cmd_keys(args: argparse.Namespace) -> int:
    """Seeded entity/validator keys, quorum registry and a signed permission table"""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = DeploymentConfig(
        backend=BackendName(args.backend),
        entities=tuple(args.entities),
        n=args.n,
        f=args.f,
        seed=args.seed,
    )
    signers = {name: entity_key(args.seed, name) for name in config.entities}
    admin = admin_key(args.seed)
    qc = quorum_config(config)
    keys = {
        'admin': admin.public_hex,
        'attestation_root': root_key(args.seed).public_hex,
        'entities': {
            name: {'public': key.public_hex, 'private': key.private_hex()}
            for name, key in signers.items()
        },
        'validators': {
            node_id: {
                'public': validator_key(args.seed, node_id).public_hex,
                'private': validator_key(args.seed, node_id).private_hex(),
            }
            for node_id in qc.node_ids
        },
    }
    (out / 'keys.json').write_text(json.dumps(keys, indent=2, sort_keys=True))
    (out / 'quorum.json').write_text(json.dumps(qc.to_json_obj(), indent=2, sort_keys=True))
    write_signed_table(out / 'permissions.json', build_permissions(config, signers), admin)
    logger.info('Keys written', out=str(out), entities=len(signers), validators=qc.n)
    return 0


def cmd_attack(args: argparse.Namespace) -> list[RunReport]:
    scenarios = list(Scenario) if args.scenario == 'all' else [Scenario(args.scenario)]
    backend = BackendName(args.backend)
    reports = []
    for scenario in scenarios:
        result, trace = run_scenario(scenario, backend, mono=not args.no_mono, seed=args.seed)
        _save_trace(args, f'attack-{scenario.value}', trace)
        report = RunReport(
            scenario=f'attack-{scenario.value}',
            seed=args.seed,
            backend=backend.value,
            n=3,
            config={
                'scenario': scenario.value,
                'backend': backend.value,
                'kinds': [kind.value for kind in result.kinds],
                'seed': args.seed,
            },
            metrics={
                'verdict': result.verdict.value,
                'victim_delivered': ' '.join(result.victim_delivered),
                'victim_discarded': len(result.victim_discarded),
            },
        )
        reports.append(
            report.verdicts_from(['causal-order', 'causal-delivery'], result.violations)
        )
    return reports


def _mutex_plan(value: str) -> MutexPlan | FaultPlan:
    if value in {plan.value for plan in MutexPlan}:
        return MutexPlan(value)
    return FaultPlan.load(Path(value))


def cmd_mutex(args: argparse.Namespace) -> list[RunReport]:
    plan = _mutex_plan(args.plan)
    backend = BackendName(args.backend)
    result, trace, _ = run_mutex(
        n=args.n,
        contenders=args.contenders,
        seed=args.seed,
        backend=backend,
        plan=plan,
        rounds=args.rounds,
    )
    _save_trace(args, 'mutex', trace)
    waits = result.wait_ticks or [0]
    p50, p99, p999 = latency_quantiles(waits)
    report = RunReport(
        scenario='mutex',
        seed=args.seed,
        backend=backend.value,
        n=args.n,
        config={
            'n': args.n,
            'contenders': result.contenders,
            'rounds': args.rounds,
            'seed': args.seed,
            'backend': backend.value,
            'plan': plan.value if isinstance(plan, MutexPlan) else plan.model_dump(mode='json'),
        },
        metrics={
            'requests': result.requests,
            'grants': result.grants,
            'messages': result.messages,
            'proofs_valid': result.proofs_valid,
            'proof_bytes_mean': round(float(np.mean(result.proof_sizes or [0])), 2),
            'wait_ticks_p50': p50,
            'wait_ticks_p99': p99,
            'wait_ticks_p999': p999,
            'end_time': result.end_time,
        },
    )
    return [report.verdicts_from(MUTEX_CHECKERS, result.violations)]


def _store_config(args: argparse.Namespace, write_ratio: float) -> StoreRunConfig:
    return StoreRunConfig(
        servers=args.servers,
        clients=args.clients,
        ops=args.ops,
        write_ratio=write_ratio,
        keys=args.keys,
        seed=args.seed,
        backend=BackendName(args.backend),
        byzantine_servers=args.byzantine,
    )


def _store_report(scenario: str, config: StoreRunConfig, metrics: dict[str, Any]) -> RunReport:
    return RunReport(
        scenario=scenario,
        seed=config.seed,
        backend=config.backend.value,
        n=config.servers,
        config=config.model_dump(mode='json'),
        metrics=metrics,
    )


def cmd_store_bench(args: argparse.Namespace) -> list[RunReport]:
    reports = []
    for ratio in args.ratio:
        config = _store_config(args, ratio)
        result, trace, _ = run_store(config)
        _save_trace(args, f'store-bench-{ratio}', trace)
        report = _store_report(
            'store-bench',
            config,
            {
                'write_ratio': ratio,
                'completed': result.completed,
                'failed': result.failed,
                'retries': result.retries,
                'elapsed_ticks': result.elapsed_ticks,
                'throughput_per_kilotick': round(result.throughput, 4),
                'latency_p50': result.latency_p50,
                'latency_p99': result.latency_p99,
                'latency_p999': result.latency_p999,
                'forged_accepted': result.forged_accepted,
                'parked': result.parked,
            },
        )
        checkers = STORE_CHECKERS if not config.byzantine_servers else STORE_CHECKERS[:2]
        violations = list(result.violations)
        if result.forged_accepted:
            violations.append(
                Violation(
                    checker='forgery',
                    message=f'{result.forged_accepted} forged replies accepted',
                )
            )
        reports.append(report.verdicts_from(checkers, violations))
    return reports


async def _serve_store(config: StoreRunConfig, timeout_s: float) -> tuple[Trace, list, list]:
    servers, clients = build_cluster(config)
    for server in servers:
        server.restore()
    runtime = SocketRuntime([*servers, *clients], seed=config.seed)
    await runtime.start()
    try:
        trace = await runtime.run_until(
            lambda: all(client.done for client in clients)
            and not check_convergence(servers),
            timeout_s,
        )
    finally:
        await runtime.stop()
    return trace, servers, clients


def cmd_store_serve(args: argparse.Namespace) -> list[RunReport]:
    """Runs a cluster config on localhost sockets; latencies are wall milliseconds"""
    config = StoreRunConfig.model_validate_json(Path(args.config).read_text())
    if config.byzantine_servers:
        raise ValueError('Byzantine scripts only run in simulation mode')
    violations: list[Violation] = []
    try:
        trace, servers, clients = asyncio.run(_serve_store(config, args.timeout))
    except TimeoutError as e:
        violations.append(Violation(checker='liveness', message=str(e)))
        return [_store_report('store-serve', config, {}).verdicts_from(STORE_CHECKERS, violations)]

    _save_trace(args, 'store-serve', trace)
    completed = [e for e in trace.notes() if e.name in ('read', 'write')]
    p50, p99, p999 = latency_quantiles([e.fields['latency'] for e in completed])
    violations += (
        check_session_causality(trace) + check_convergence(servers) + check_no_forks(servers)
    )
    report = _store_report(
        'store-serve',
        config,
        {
            'completed': len(completed),
            'failed': sum(client.failed for client in clients),
            'latency_ms_p50': p50,
            'latency_ms_p99': p99,
            'latency_ms_p999': p999,
        },
    )
    return [report.verdicts_from(STORE_CHECKERS[1:], violations)]


def check_trace(trace: Trace, honest: list[str] | None = None) -> tuple[list[str], list[Violation]]:
    """Runs every checker whose notes appear in the trace"""
    names = {event.name for event in trace.notes()}
    checkers = ['transport']
    violations = check_transport(trace)
    if 'deliver' in names:
        checkers.append('causal-delivery')
        delivering = {note.src for note in trace.notes('deliver')}
        violations += check_causal_delivery(trace, honest or sorted(delivering))
    if 'grant' in names:
        checkers += ['mutual-exclusion', 'ordered-access', 'liveness']
        violations += check_exclusion(trace) + check_grant_order(trace)
        violations += check_all_granted(trace, len(trace.notes('request')))
    if names & {'read', 'write'}:
        checkers.append('causal-consistency')
        violations += check_session_causality(trace)
    return checkers, violations


def cmd_check(args: argparse.Namespace) -> list[RunReport]:
    trace = Trace.read_jsonl(Path(args.trace))
    checkers, violations = check_trace(trace, args.honest)
    processes = {event.src for event in trace}
    report = RunReport(
        scenario='check',
        seed=0,
        backend='',
        n=len(processes),
        config={'trace': Path(args.trace).name, 'honest': args.honest or []},
        metrics={
            'events': len(trace),
            'messages': len(trace.of_kind(SimEventKind.SEND)),
            'notes': len(trace.notes()),
        },
    )
    return [report.verdicts_from(checkers, violations)]


def cmd_micro(args: argparse.Namespace) -> list[RunReport]:
    return run_micro(BackendName(args.backend), reps=args.reps)


async def _serve_nodes(handlers: list, host: str, duration: float | None, out: Path) -> None:
    servers = [await start_node_server(handler, host) for handler in handlers]
    addresses = {
        handler.node_id: list(server.sockets[0].getsockname()[:2])
        for handler, server in zip(handlers, servers, strict=True)
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / 'nodes.json').write_text(json.dumps(addresses, indent=2, sort_keys=True))
    try:
        if duration is None:
            await asyncio.Event().wait()
        else:
            await asyncio.sleep(duration)
    finally:
        for server in servers:
            server.close()
            await server.wait_closed()


def cmd_node_serve(args: argparse.Namespace) -> int:
    """Serves the validators (or enclaves) of a seeded deployment over TCP"""
    config = DeploymentConfig(
        backend=BackendName(args.backend),
        kinds=tuple(FrontendKind(kind) for kind in args.kinds),
        entities=tuple(args.entities),
        n=args.n,
        f=args.f,
        seed=args.seed,
    )
    signers = {name: entity_key(args.seed, name) for name in config.entities}
    handlers = build_handlers(config, build_permissions(config, signers))
    if args.node:
        handlers = [handler for handler in handlers if handler.node_id in args.node]
    if not handlers:
        logger.error('No validators to serve', backend=config.backend.value, nodes=args.node)
        return 2
    try:
        asyncio.run(_serve_nodes(handlers, args.host, args.duration, Path(args.out)))
    except KeyboardInterrupt:
        logger.info('Validators stopped')
    return 0
