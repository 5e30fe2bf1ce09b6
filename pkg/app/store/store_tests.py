from pydantic import ValidationError
import pytest

from app.backends.deployment import DeploymentConfig, RangeSpec, build_deployment
from app.backends.structures import BackendName
from app.clock import ClockValue
from app.sim import Simulator, SimEvent, SimEventKind, Trace
from app.store import (
    CausalityViolated,
    InvalidProof,
    NotUpToDate,
    Partition,
    PartitionMap,
    ReplyStatus,
    StaleRead,
    StoreReply,
    StoreRunConfig,
    StoreServer,
    StoreSession,
    VersionedEntry,
    WrongOwner,
    check_session_causality,
    run_store,
)
import app.store.acl  # noqa: F401  registers the store-acl predicate
from app.store.codec import decode_message, encode_message
from app.validators.structures import FrontendKind, Vlc


SERVERS = ('S1', 'S2', 'S3')
KEYS = ['k0', 'k1', 'k2']


class Cluster:
    def __init__(self, kinds=(FrontendKind.UPDATE,), partitions=None, snapshot=None):
        self.partitions = partitions or PartitionMap.split(SERVERS, KEYS)
        self.deployment = build_deployment(
            DeploymentConfig(
                backend=BackendName.QUORUM,
                kinds=kinds,
                ranges=tuple(
                    RangeSpec(start=p.start.encode(), end=p.end.encode(), holder=p.owner)
                    for p in self.partitions.partitions
                ),
                predicate='store-acl' if FrontendKind.APP in kinds else None,
            )
        )
        self.service = self.deployment.service
        self.servers = {
            pid: StoreServer(
                pid,
                self.deployment.signer(pid),
                self.service,
                self.partitions,
                snapshot=snapshot,
            )
            for pid in self.partitions.servers
        }
        self.sim = Simulator(list(self.servers.values()))

    def ctx(self, pid):
        return self.sim.contexts[pid]

    def session(self, client='C1'):
        return StoreSession(client, self.service.verify)

    def put(self, pid, session, key, value=b'v'):
        reply = self.servers[pid].handle_put(self.ctx(pid), session.put_request(key, value))
        return session.accept_put(key, reply)

    def get(self, pid, session, key):
        reply = self.servers[pid].handle_get(session.get_request(key))
        return session.accept_get(key, reply)


@pytest.fixture
def f_cluster():
    return Cluster()


@pytest.mark.unit
def test_partition_map_split_and_owner(f_cluster):
    assert f_cluster.partitions.owner_of('k0') == 'S1'
    assert f_cluster.partitions.owner_of('k1') == 'S2'
    assert f_cluster.partitions.owner_of('zzz') == 'S3'
    with pytest.raises(ValidationError):
        PartitionMap(
            partitions=(Partition(end='k1', owner='S1'), Partition(start='k2', owner='S2'))
        )


@pytest.mark.unit
def test_fresh_put_and_versions(f_cluster):
    session = f_cluster.session()
    first = f_cluster.put('S1', session, 'k0', b'a')
    second = f_cluster.put('S1', session, 'k0', b'b')

    assert first.vclock.value == ClockValue.of({'k0': 1})
    assert second.vclock.value == ClockValue.of({'k0': 2})
    assert second.version == 2
    assert session.dep_clock == ClockValue.of({'k0': 2})
    assert f_cluster.get('S1', session, 'k0').value == b'b'


@pytest.mark.unit
def test_put_waits_for_dependencies_at_the_owner(f_cluster):
    session = f_cluster.session()
    f_cluster.put('S1', session, 'k0')
    f_cluster.put('S1', session, 'k0')
    k1 = f_cluster.put('S2', f_cluster.session('C2'), 'k1')
    assert f_cluster.get('S2', session, 'k1') == k1

    with pytest.raises(NotUpToDate):
        f_cluster.put('S1', session, 'k0')

    f_cluster.servers['S1'].apply_remote(f_cluster.ctx('S1'), k1)
    third = f_cluster.put('S1', session, 'k0')
    assert third.vclock.value == ClockValue.of({'k0': 3, 'k1': 1})


@pytest.mark.unit
def test_put_at_non_owner_is_refused(f_cluster):
    with pytest.raises(WrongOwner):
        f_cluster.put('S1', f_cluster.session(), 'k1')


@pytest.mark.unit
def test_read_checks_version_against_dependencies(f_cluster):
    session = f_cluster.session()
    v1 = f_cluster.put('S1', session, 'k0')
    f_cluster.put('S1', session, 'k0')

    with pytest.raises(StaleRead):
        f_cluster.get('S2', session, 'k0')
    f_cluster.servers['S2'].apply_remote(f_cluster.ctx('S2'), v1)
    with pytest.raises(StaleRead):
        f_cluster.get('S2', session, 'k0')
    assert f_cluster.get('S1', session, 'k0').version == 2

    fresh = f_cluster.session('C2')
    assert f_cluster.get('S2', fresh, 'k0').version == 1
    assert f_cluster.get('S3', fresh, 'k2') is None


@pytest.mark.unit
def test_put_reply_must_follow_the_dependency_clock(f_cluster):
    writer = f_cluster.session('C1')
    old = f_cluster.put('S1', writer, 'k0')

    reader = f_cluster.session('C2')
    f_cluster.put('S2', reader, 'k1')
    reply = StoreReply(req_id=1, key='k0', entry=old)
    with pytest.raises(CausalityViolated):
        reader.accept_put('k0', reply)


@pytest.mark.unit
def test_unverifiable_reply_is_rejected(f_cluster):
    session = f_cluster.session()
    forged = VersionedEntry(
        key='k0',
        value=b'x',
        vclock=Vlc.model_construct(value=ClockValue.of({'k0': 9}), proofs={}),
    )
    with pytest.raises(InvalidProof):
        session.accept_get('k0', StoreReply(req_id=1, key='k0', entry=forged))
    assert session.dep_clock.is_genesis


@pytest.mark.unit
def test_reversed_propagation_pends_then_commits(f_cluster):
    session = f_cluster.session()
    first = f_cluster.put('S1', session, 'k0')
    f_cluster.servers['S2'].apply_remote(f_cluster.ctx('S2'), first)
    second = f_cluster.put('S2', session, 'k1')
    assert second.vclock.value == ClockValue.of({'k0': 1, 'k1': 1})
    s3, ctx = f_cluster.servers['S3'], f_cluster.ctx('S3')

    s3.apply_remote(ctx, second)
    assert s3.pending == 1
    assert s3.versions() == {}

    s3.apply_remote(ctx, first)
    assert s3.pending == 0
    assert s3.versions() == {'k0': 1, 'k1': 1}


@pytest.mark.unit
def test_older_and_invalid_entries_are_discarded(f_cluster):
    session = f_cluster.session()
    first = f_cluster.put('S1', session, 'k0')
    second = f_cluster.put('S1', session, 'k0')
    s2, ctx = f_cluster.servers['S2'], f_cluster.ctx('S2')

    s2.apply_remote(ctx, first)
    s2.apply_remote(ctx, second)
    s2.apply_remote(ctx, first)
    assert s2.versions() == {'k0': 2}

    bogus = second.model_copy(update={'value': b'other', 'origin': 'S9'})
    bogus = bogus.model_copy(
        update={'vclock': Vlc.model_construct(value=ClockValue.of({'k0': 3}), proofs={})}
    )
    s2.apply_remote(ctx, bogus)
    assert s2.versions() == {'k0': 2}
    assert 'S9' in s2.flagged
    assert f_cluster.sim.trace.notes('invalid-entry')


@pytest.mark.unit
def test_fork_by_the_owner_is_detected(f_cluster):
    service, signer = f_cluster.service, f_cluster.deployment.signer('S1')
    genesis = service.genesis()
    a = VersionedEntry(
        key='k0', value=b'a', vclock=service.update(signer, 'k0', genesis), origin='S1'
    )
    b = VersionedEntry(
        key='k0', value=b'b', vclock=service.update(signer, 'k0', genesis), origin='S1'
    )
    s2 = f_cluster.servers['S2']

    s2.apply_remote(f_cluster.ctx('S2'), a)
    s2.apply_remote(f_cluster.ctx('S2'), b)

    assert len(s2.forks) == 1
    assert s2.forks[0].owner == 'S1'
    assert s2.versions() == {'k0': 1}


@pytest.mark.unit
def test_messages_survive_encoding(f_cluster):
    session = f_cluster.session()
    f_cluster.put('S1', session, 'k0')
    request = session.put_request('k0', b'payload')
    decoded = decode_message(encode_message(request))
    assert decoded.deps == request.deps
    assert decoded.value == b'payload'

    reply = StoreReply(req_id=3, key='k1', status=ReplyStatus.NOT_UP_TO_DATE, detail='k0')
    assert decode_message(encode_message(reply)) == reply


@pytest.mark.unit
def test_private_keys_follow_the_acl():
    cluster = Cluster(
        kinds=(FrontendKind.UPDATE, FrontendKind.APP),
        partitions=PartitionMap(partitions=(Partition(owner='S1'),)),
    )
    assert cluster.put('S1', cluster.session('C1'), 'u/C1/profile').version == 1
    assert cluster.put('S1', cluster.session('C2'), 'shared').version == 1
    reply = cluster.servers['S1'].handle_put(
        cluster.ctx('S1'), cluster.session('C2').put_request('u/C1/profile', b'x')
    )
    assert reply.status is ReplyStatus.REJECTED
    assert 'app-rule-violation' in reply.detail


@pytest.mark.unit
def test_snapshot_restores_installed_versions(tmp_path):
    path = tmp_path / 'S1.jsonl'
    partitions = PartitionMap(partitions=(Partition(owner='S1'),))
    cluster = Cluster(partitions=partitions, snapshot=path)
    session = cluster.session()
    cluster.put('S1', session, 'a')
    cluster.put('S1', session, 'a')
    cluster.put('S1', session, 'b')

    restarted = Cluster(partitions=partitions, snapshot=path)
    assert restarted.servers['S1'].restore() == 3
    assert restarted.servers['S1'].versions() == {'a': 2, 'b': 1}


def op_note(seq, name, key, version, clock):
    return SimEvent(
        seq=seq,
        time=seq,
        kind=SimEventKind.NOTE,
        src='C1',
        name=name,
        fields={
            'key': key,
            'version': version,
            'clock': ClockValue.of(clock).to_json_obj(),
        },
    )


@pytest.mark.unit
def test_session_checker_flags_a_regressing_read():
    trace = Trace()
    trace.append(op_note(0, 'read', 'k0', 2, {'k0': 2}))
    trace.append(op_note(1, 'read', 'k0', 1, {'k0': 1}))
    trace.append(op_note(2, 'write', 'k1', 1, {'k1': 1}))

    violations = check_session_causality(trace)
    assert [v.seq for v in violations] == [1, 2]


@pytest.mark.unit
def test_simulated_cluster_is_causal_and_converges():
    result, trace, servers = run_store(
        StoreRunConfig(ops=300, write_ratio=0.2, seed=3, backend=BackendName.QUORUM)
    )
    assert result.passed, result.violations
    assert result.completed == 600
    assert result.failed == 0
    assert result.latency_p50 <= result.latency_p99 <= result.latency_p999
    assert len({tuple(s.versions().items()) for s in servers}) == 1


@pytest.mark.unit
def test_forging_servers_never_get_a_value_accepted():
    result, trace, _ = run_store(
        StoreRunConfig(
            ops=10,
            write_ratio=0.2,
            seed=4,
            backend=BackendName.QUORUM,
            byzantine_servers=True,
        )
    )
    assert trace.notes('forge')
    assert result.forged_accepted == 0
    assert result.completed == 0
    assert result.failed == 20
    assert result.passed


@pytest.mark.unit
def test_more_writes_lower_throughput():
    def throughput(ratio):
        config = StoreRunConfig(
            ops=400, write_ratio=ratio, seed=5, backend=BackendName.QUORUM
        )
        return run_store(config)[0].throughput

    assert throughput(0.5) < throughput(0.01)


@pytest.mark.unit
def test_runs_are_deterministic():
    config = StoreRunConfig(ops=100, write_ratio=0.1, seed=6, backend=BackendName.QUORUM)
    assert run_store(config)[1].dumps() == run_store(config)[1].dumps()


@pytest.mark.slow
def test_store_acceptance_run():
    result, _, _ = run_store(
        StoreRunConfig(
            servers=3,
            clients=2,
            ops=10_000,
            write_ratio=0.05,
            seed=7,
            backend=BackendName.QUORUM,
        )
    )
    assert result.passed, result.violations
    assert result.completed == 20_000
