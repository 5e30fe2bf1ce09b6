from collections import defaultdict
from collections.abc import Sequence

from app.clock import ClockValue, Ordering, compare, init, merge
from app.sim.structures import SimEventKind, Trace, Violation
from app.store.server import StoreServer


def check_session_causality(trace: Trace) -> list[Violation]:
    """
    Replays every session's accepted operations: a read never returns a
    version below what the session already depends on, and a write's clock
    follows everything the session saw before it.
    """
    deps: dict[str, ClockValue] = defaultdict(init)
    violations = []
    for event in trace:
        if event.kind is not SimEventKind.NOTE or event.name not in ('read', 'write'):
            continue
        key = event.fields['key']
        clock = ClockValue.from_json_obj(event.fields['clock'])
        dep = deps[event.src]
        if event.name == 'read' and event.fields['version'] < dep[key]:
            violations.append(
                Violation(
                    checker='causal-consistency',
                    seq=event.seq,
                    message=f'{event.src} read {key} at {event.fields["version"]} '
                    f'after depending on {dep[key]}',
                )
            )
        if event.name == 'write' and compare(clock, dep) is not Ordering.AF:
            violations.append(
                Violation(
                    checker='causal-consistency',
                    seq=event.seq,
                    message=f'{event.src} write of {key} does not follow its dependencies',
                )
            )
        deps[event.src] = merge([dep, clock])
    return violations


def check_convergence(servers: Sequence[StoreServer]) -> list[Violation]:
    """After quiescence every replica holds the same versions and nothing pends"""
    violations = []
    reference = servers[0].versions()
    for server in servers:
        if server.pending:
            violations.append(
                Violation(
                    checker='convergence',
                    message=f'{server.pid} still holds {server.pending} pending entries',
                )
            )
        versions = server.versions()
        if versions != reference:
            differing = sorted(
                key
                for key in reference.keys() | versions.keys()
                if reference.get(key) != versions.get(key)
            )
            violations.append(
                Violation(
                    checker='convergence',
                    message=f'{server.pid} differs from {servers[0].pid} on {differing[:5]}',
                )
            )
    return violations


def check_no_forks(servers: Sequence[StoreServer]) -> list[Violation]:
    return [
        Violation(
            checker='version-linearity',
            message=f'{server.pid} holds fork evidence on {fork.key} against {fork.owner}',
        )
        for server in servers
        for fork in server.forks
    ]
