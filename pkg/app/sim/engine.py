"""
Deterministic discrete-event network simulator.

Processes are plain state machines driven by three callbacks (start, message,
timer). The simulator owns virtual time on a simpy environment, samples link
delays and faults from one seeded PRNG and records every send, delivery, drop,
timer and protocol note into a single trace.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Sequence
import random
from typing import Any

import simpy
from simpy.core import Infinity
import structlog

from app.settings import settings
from app.sim.errors import Livelock, SimulationError
from app.sim.structures import (
    FaultPlan,
    LinkFaults,
    ScriptSpec,
    SimEvent,
    SimEventKind,
    Trace,
)


logger = structlog.get_logger()


class Context(ABC):
    """What a process may do while handling one event"""

    pid: str
    random: random.Random

    @property
    @abstractmethod
    def now(self) -> int: ...

    @property
    @abstractmethod
    def peers(self) -> tuple[str, ...]:
        """Every other process id, sorted"""

    @abstractmethod
    def send(self, dst: str, payload: bytes, delay: int = 0) -> None:
        """Hand payload to the network, optionally after local delay ticks"""

    @abstractmethod
    def set_timer(self, delay: int, name: str) -> None: ...

    @abstractmethod
    def note(self, name: str, **fields: Any) -> None:
        """Record a protocol observation in the trace"""

    def broadcast(self, payload: bytes, delay: int = 0) -> None:
        for peer in self.peers:
            self.send(peer, payload, delay)


class Process:
    """Base class for simulated (or socket-hosted) protocol participants"""

    def __init__(self, pid: str) -> None:
        self.pid = pid

    def on_start(self, ctx: Context) -> None:
        return None

    def on_message(self, ctx: Context, src: str, payload: bytes) -> None:
        return None

    def on_timer(self, ctx: Context, name: str) -> None:
        return None


class Interceptor:
    """
    Byzantine hook around one process: sees and may rewrite everything the
    process sends (outbound) and receives (inbound). Returning an empty list
    or None suppresses the message.
    """

    def outbound(self, ctx: Context, dst: str, payload: bytes) -> list[bytes]:
        return [payload]

    def inbound(self, ctx: Context, src: str, payload: bytes) -> bytes | None:
        return payload


ScriptFactory = Callable[[Process, dict[str, Any]], Interceptor]


class ScriptRegistry:
    """Named Byzantine scripts a FaultPlan can refer to"""

    def __init__(self) -> None:
        self._factories: dict[str, ScriptFactory] = {}

    def register(self, name: str) -> Callable[[ScriptFactory], ScriptFactory]:
        def decorator(factory: ScriptFactory) -> ScriptFactory:
            self._factories[name] = factory
            return factory

        return decorator

    def build(self, spec: ScriptSpec, process: Process) -> Interceptor:
        try:
            factory = self._factories[spec.name]
        except KeyError:
            raise SimulationError(f'unknown byzantine script {spec.name!r}') from None
        return factory(process, spec.params)

    def names(self) -> list[str]:
        return sorted(self._factories)


scripts = ScriptRegistry()


@scripts.register('omit')
class OmitScript(Interceptor):
    """Selective omission: silently drops outbound messages to listed peers"""

    def __init__(self, process: Process, params: dict[str, Any]) -> None:
        self.targets = set(params.get('targets', ()))

    def outbound(self, ctx: Context, dst: str, payload: bytes) -> list[bytes]:
        if not self.targets or dst in self.targets:
            ctx.note('omit', dst=dst)
            return []
        return [payload]


def sample_delays(rng: random.Random, faults: LinkFaults) -> list[int]:
    """Transit delays for one message: empty if dropped, two if duplicated"""
    if faults.drop_prob and rng.random() < faults.drop_prob:
        return []
    copies = 2 if faults.duplicate_prob and rng.random() < faults.duplicate_prob else 1
    delays = []
    for _ in range(copies):
        delay = rng.randint(faults.min_delay, faults.max_delay)
        if faults.reorder_prob and rng.random() < faults.reorder_prob:
            delay += rng.randint(1, faults.reorder_extra)
        delays.append(delay)
    return delays


class SimContext(Context):
    def __init__(self, sim: 'Simulator', pid: str) -> None:
        self._sim = sim
        self.pid = pid
        self.random = random.Random(f'{sim.plan.seed}/{pid}')
        self._peers = tuple(p for p in sim.pids if p != pid)

    @property
    def now(self) -> int:
        return int(self._sim.env.now)

    @property
    def peers(self) -> tuple[str, ...]:
        return self._peers

    def send(self, dst: str, payload: bytes, delay: int = 0) -> None:
        self._sim.send(self.pid, dst, payload, delay)

    def set_timer(self, delay: int, name: str) -> None:
        self._sim.set_timer(self.pid, delay, name)

    def note(self, name: str, **fields: Any) -> None:
        self._sim.record(SimEventKind.NOTE, self.pid, name=name, fields=fields)


class Simulator:
    """
    Runs processes under a FaultPlan. The same processes, plan and seed always
    produce the same trace.
    """

    def __init__(
        self,
        processes: Sequence[Process],
        plan: FaultPlan | None = None,
        registry: ScriptRegistry = scripts,
        record_payloads: bool = True,
    ) -> None:
        self.plan = plan or FaultPlan()
        self.processes = {p.pid: p for p in processes}
        if len(self.processes) != len(processes):
            raise SimulationError('duplicate process id')
        self.pids = tuple(sorted(self.processes))
        self.env = simpy.Environment()
        self.rng = random.Random(self.plan.seed)
        self.trace = Trace()
        self.record_payloads = record_payloads
        self.contexts = {pid: SimContext(self, pid) for pid in self.pids}
        self.interceptors: dict[str, Interceptor] = {}
        for pid, spec in self.plan.byzantine.items():
            if pid not in self.processes:
                raise SimulationError(f'byzantine script for unknown process {pid}')
            self.interceptors[pid] = registry.build(spec, self.processes[pid])
        self._seq = 0
        self._msg_id = 0
        self._started = False

    def record(self, kind: SimEventKind, src: str, **fields: Any) -> SimEvent:
        event = SimEvent(seq=self._seq, time=int(self.env.now), kind=kind, src=src, **fields)
        self._seq += 1
        self.trace.append(event)
        return event

    def send(self, src: str, dst: str, payload: bytes, delay: int = 0) -> None:
        if dst not in self.processes:
            raise SimulationError(f'{src} sent to unknown process {dst}')
        if delay > 0:
            self.env.process(self._send_later(src, dst, payload, delay))
            return
        self._transmit(src, dst, payload)

    def set_timer(self, pid: str, delay: int, name: str) -> None:
        self.env.process(self._timer(pid, max(delay, 0), name))

    def _send_later(self, src: str, dst: str, payload: bytes, delay: int):
        yield self.env.timeout(delay)
        self._transmit(src, dst, payload)

    def _transmit(self, src: str, dst: str, payload: bytes) -> None:
        interceptor = self.interceptors.get(src)
        outgoing = (
            interceptor.outbound(self.contexts[src], dst, payload)
            if interceptor
            else [payload]
        )
        for data in outgoing:
            msg_id = self._msg_id
            self._msg_id += 1
            self.record(
                SimEventKind.SEND,
                src,
                dst=dst,
                msg_id=msg_id,
                payload=data.hex() if self.record_payloads else '',
                fields={} if self.record_payloads else {'size': len(data)},
            )
            delays = sample_delays(self.rng, self.plan.faults_for(src, dst))
            if not delays:
                self.record(SimEventKind.DROP, src, dst=dst, msg_id=msg_id)
            for transit in delays:
                self.env.process(self._deliver(src, dst, msg_id, data, transit))

    def _deliver(self, src: str, dst: str, msg_id: int, data: bytes, transit: int):
        yield self.env.timeout(transit)
        self.record(SimEventKind.DELIVER, src, dst=dst, msg_id=msg_id)
        ctx = self.contexts[dst]
        interceptor = self.interceptors.get(dst)
        if interceptor:
            data = interceptor.inbound(ctx, src, data)
            if data is None:
                return
        self.processes[dst].on_message(ctx, src, data)

    def _timer(self, pid: str, delay: int, name: str):
        yield self.env.timeout(delay)
        self.record(SimEventKind.TIMER, pid, name=name)
        self.processes[pid].on_timer(self.contexts[pid], name)

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for pid in self.pids:
            self.processes[pid].on_start(self.contexts[pid])

    @property
    def quiescent(self) -> bool:
        return self.env.peek() == Infinity

    def run(
        self,
        until: Callable[[], bool] | None = None,
        max_events: int | None = None,
    ) -> Trace:
        """
        Step until `until()` holds or nothing is scheduled. Raises Livelock
        when the trace grows past the event budget first.
        """
        budget = max_events or settings.event_budget
        self.start()
        while True:
            if until is not None and until():
                break
            if self.quiescent:
                break
            if len(self.trace) >= budget:
                logger.warning('Event budget exhausted', events=len(self.trace), budget=budget)
                raise Livelock(f'{len(self.trace)} events without reaching the stop condition')
            self.env.step()
        return self.trace


def run(
    processes: Iterable[Process],
    plan: FaultPlan | None = None,
    until: Callable[[], bool] | None = None,
    max_events: int | None = None,
) -> Trace:
    return Simulator(list(processes), plan).run(until, max_events)
