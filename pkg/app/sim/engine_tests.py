import random

import pytest

from app.sim import (
    FaultPlan,
    FifoProcess,
    Interceptor,
    LinkFaults,
    Livelock,
    Process,
    ScriptSpec,
    SimEventKind,
    Simulator,
    Trace,
    check_transport,
    run,
    sample_delays,
    scripts,
)
from app.sim.runtime import SocketRuntime


class Recorder(Process):
    def __init__(self, pid, outgoing=None):
        super().__init__(pid)
        self.outgoing = outgoing
        self.received = []

    def on_start(self, ctx):
        if self.outgoing is not None:
            ctx.broadcast(self.outgoing)

    def on_message(self, ctx, src, payload):
        self.received.append((ctx.now, src, payload))


class Chatter(Process):
    """Sends a numbered message to every peer on each timer tick"""

    def __init__(self, pid, rounds):
        super().__init__(pid)
        self.rounds = rounds
        self.sent = 0
        self.received = []

    def on_start(self, ctx):
        ctx.set_timer(1, 'tick')

    def on_timer(self, ctx, name):
        ctx.broadcast(f'{self.pid}:{self.sent}'.encode())
        self.sent += 1
        if self.sent < self.rounds:
            ctx.set_timer(ctx.random.randint(1, 5), 'tick')

    def on_message(self, ctx, src, payload):
        self.received.append(payload)


class PingPong(Process):
    def __init__(self, pid, peer):
        super().__init__(pid)
        self.peer = peer

    def on_start(self, ctx):
        if self.pid < self.peer:
            ctx.send(self.peer, b'ping')

    def on_message(self, ctx, src, payload):
        ctx.send(src, payload)


FAULTY = LinkFaults(
    min_delay=1, max_delay=20, reorder_prob=0.3, drop_prob=0.1, duplicate_prob=0.1
)


@pytest.mark.unit
def test_broadcast_without_faults_delivers_to_every_peer():
    processes = [Recorder('P1', b'hello'), Recorder('P2'), Recorder('P3')]
    trace = run(processes, FaultPlan(seed=1))

    delivers = trace.of_kind(SimEventKind.DELIVER)
    assert len(delivers) == 2
    assert {e.dst for e in delivers} == {'P2', 'P3'}
    assert processes[1].received[0][1:] == ('P1', b'hello')
    assert check_transport(trace) == []


@pytest.mark.unit
def test_same_seed_gives_identical_traces():
    def once(seed):
        processes = [Chatter(pid, rounds=20) for pid in ('A', 'B', 'C', 'D')]
        return run(processes, FaultPlan(seed=seed, default=FAULTY)).dumps()

    assert once(11) == once(11)
    assert once(11) != once(12)


@pytest.mark.unit
def test_link_override_reorders_messages():
    # P1's message leaves first but crosses a slow link
    plan = FaultPlan(
        default=LinkFaults.fixed(1),
        links={'P1->P3': LinkFaults.fixed(50)},
    )
    p1, p3 = Recorder('P1', b'm1'), Recorder('P3')

    class LateSender(Process):
        def on_start(self, ctx):
            ctx.send('P3', b'm3', delay=5)

    run([p1, LateSender('P2'), p3], plan)
    assert [payload for _, _, payload in p3.received] == [b'm3', b'm1']
    assert p3.received[0][0] == 6
    assert p3.received[1][0] == 50


@pytest.mark.unit
def test_livelock_when_budget_runs_out():
    with pytest.raises(Livelock):
        run([PingPong('A', 'B'), PingPong('B', 'A')], FaultPlan(), max_events=100)


@pytest.mark.unit
def test_until_stops_early():
    a, b = PingPong('A', 'B'), PingPong('B', 'A')
    sim = Simulator([a, b], FaultPlan(default=LinkFaults.fixed(1)))
    trace = sim.run(until=lambda: sim.env.now >= 10)
    assert trace.events[-1].time <= 10
    assert not sim.quiescent


@pytest.mark.unit
def test_timers_fire_at_requested_time():
    class Sleeper(Process):
        fired = None

        def on_start(self, ctx):
            ctx.set_timer(42, 'wake')

        def on_timer(self, ctx, name):
            self.fired = (ctx.now, name)
            ctx.note('woke', at=ctx.now)

    sleeper = Sleeper('S')
    trace = run([sleeper])
    assert sleeper.fired == (42, 'wake')
    assert trace.notes('woke')[0].fields == {'at': 42}


@pytest.mark.unit
def test_omit_script_suppresses_targeted_messages():
    plan = FaultPlan(
        byzantine={'P1': ScriptSpec(name='omit', params={'targets': ['P3']})}
    )
    processes = [Recorder('P1', b'x'), Recorder('P2'), Recorder('P3')]
    trace = run(processes, plan)

    assert len(processes[1].received) == 1
    assert processes[2].received == []
    assert [n.fields for n in trace.notes('omit')] == [{'dst': 'P3'}]


@pytest.mark.unit
def test_registered_script_can_substitute_payloads():
    @scripts.register('test-upper')
    class Upper(Interceptor):
        def __init__(self, process, params):
            pass

        def outbound(self, ctx, dst, payload):
            return [payload.upper(), payload]

    processes = [Recorder('P1', b'abc'), Recorder('P2')]
    run(processes, FaultPlan(byzantine={'P1': ScriptSpec(name='test-upper')}))
    assert sorted(p for _, _, p in processes[1].received) == [b'ABC', b'abc']


@pytest.mark.unit
def test_fault_probabilities_are_honored():
    faults = LinkFaults(
        min_delay=1, max_delay=10, reorder_prob=0.3, drop_prob=0.1, duplicate_prob=0.2
    )
    rng = random.Random(5)
    total = 100_000
    dropped = duplicated = copies = reordered = 0
    for _ in range(total):
        delays = sample_delays(rng, faults)
        if not delays:
            dropped += 1
            continue
        duplicated += len(delays) == 2
        copies += len(delays)
        reordered += sum(d > faults.max_delay for d in delays)

    assert dropped / total == pytest.approx(0.1, abs=0.02)
    assert duplicated / (total - dropped) == pytest.approx(0.2, abs=0.02)
    assert reordered / copies == pytest.approx(0.3, abs=0.02)


@pytest.mark.unit
def test_transport_checker_flags_corrupted_trace():
    trace = run([Recorder('P1', b'x'), Recorder('P2')])
    events = list(trace.events)
    deliver = next(e for e in events if e.kind is SimEventKind.DELIVER)
    events[events.index(deliver)] = deliver.model_copy(update={'msg_id': 99})

    violations = check_transport(Trace(events))
    assert [v.seq for v in violations] == [deliver.seq]
    assert 'never sent' in violations[0].message


@pytest.mark.unit
def test_trace_and_plan_persist(tmp_path):
    plan = FaultPlan(seed=3, default=FAULTY, links={'A->B': LinkFaults.fixed(7)})
    plan.dump(tmp_path / 'plan.json')
    assert FaultPlan.load(tmp_path / 'plan.json') == plan

    trace = run([Chatter('A', 3), Chatter('B', 3)], plan)
    trace.write_jsonl(tmp_path / 'trace.jsonl')
    assert Trace.read_jsonl(tmp_path / 'trace.jsonl').events == trace.events


class Numbered(FifoProcess):
    def __init__(self, pid, count):
        super().__init__(pid)
        self.count = count
        self.received = []

    def on_start(self, ctx):
        for i in range(self.count):
            self.broadcast_ordered(ctx, str(i).encode())

    def on_ordered(self, ctx, src, payload):
        self.received.append((src, int(payload)))


@pytest.mark.unit
@pytest.mark.parametrize('seed', range(5))
def test_fifo_channel_hides_reordering_and_duplicates(seed):
    plan = FaultPlan(
        seed=seed,
        default=LinkFaults(
            min_delay=1, max_delay=30, reorder_prob=0.4, duplicate_prob=0.3
        ),
    )
    processes = [Numbered(pid, 25) for pid in ('A', 'B', 'C')]
    run(processes, plan)

    for process in processes:
        for peer in ('A', 'B', 'C'):
            if peer == process.pid:
                continue
            got = [i for src, i in process.received if src == peer]
            assert got == list(range(25))
        assert process.fifo.held_back() == 0


@pytest.mark.asyncio
@pytest.mark.integration
async def test_socket_runtime_runs_the_same_processes():
    processes = [Numbered(pid, 10) for pid in ('A', 'B', 'C')]
    runtime = SocketRuntime(processes)
    await runtime.start()
    try:
        await runtime.run_until(
            lambda: all(len(p.received) == 20 for p in processes), timeout_s=5
        )
    finally:
        await runtime.stop()

    for process in processes:
        for peer in {'A', 'B', 'C'} - {process.pid}:
            assert [i for src, i in process.received if src == peer] == list(range(10))
    assert len(runtime.trace.of_kind(SimEventKind.SEND)) == 60


class Burst(Process):
    def __init__(self, pid, dst, count):
        super().__init__(pid)
        self.dst = dst
        self.count = count

    def on_start(self, ctx):
        for i in range(self.count):
            ctx.send(self.dst, str(i).encode())


class FailsOnce(Recorder):
    def __init__(self, pid):
        super().__init__(pid)
        self.failed = False

    def on_message(self, ctx, src, payload):
        if not self.failed:
            self.failed = True
            raise ValueError('handler blew up')
        super().on_message(ctx, src, payload)


@pytest.mark.asyncio
@pytest.mark.integration
async def test_socket_runtime_survives_a_failing_handler():
    receiver = FailsOnce('B')
    runtime = SocketRuntime([Burst('A', 'B', 3), receiver])
    await runtime.start()
    try:
        await runtime.run_until(lambda: len(receiver.received) == 2, timeout_s=5)
    finally:
        await runtime.stop()

    assert receiver.failed
    assert [payload for _, _, payload in receiver.received] == [b'1', b'2']
