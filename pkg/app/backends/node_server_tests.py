import asyncio

import pytest
import pytest_asyncio

from app.backends.attested import AttestedBackend
from app.backends.deployment import (
    DeploymentConfig,
    attested_config,
    build_deployment,
    quorum_config,
)
from app.backends.frames import FrameType, decode_reply, encode_reply
from app.backends.node_server import SocketNodeTransport, start_node_server
from app.backends.quorum import QuorumBackend
from app.backends.service import ClockService
from app.backends.structures import BackendName, FaultMode, NodeReply
from app.clock import ClockValue
from app.validators.structures import FrontendKind, Vlc


UPDATE = FrontendKind.UPDATE
MONO = FrontendKind.MONO


async def serve_all(handlers):
    servers = [await start_node_server(handler) for handler in handlers]
    addresses = {
        handler.node_id: server.sockets[0].getsockname()[:2]
        for handler, server in zip(handlers, servers, strict=True)
    }
    return servers, addresses


async def shutdown(servers):
    for server in servers:
        server.close()
        await server.wait_closed()


@pytest_asyncio.fixture
async def f_quorum_cluster():
    deployment = build_deployment(
        DeploymentConfig(
            backend=BackendName.QUORUM,
            kinds=(UPDATE, MONO),
            entities=('P1',),
            n=4,
            f=1,
            fault_modes={'v2': FaultMode.SILENT},
        )
    )
    servers, addresses = await serve_all(deployment.handlers)
    yield deployment, addresses
    await shutdown(servers)


@pytest.mark.asyncio
@pytest.mark.integration
async def test_quorum_prove_over_sockets(f_quorum_cluster):
    deployment, addresses = f_quorum_cluster
    transport = SocketNodeTransport(addresses, timeout_ms=200)
    backend = QuorumBackend(quorum_config(deployment.config), transport)
    service = ClockService(backend, deployment.config.kinds)
    try:
        first = await asyncio.to_thread(
            service.update, deployment.signer('P1'), 'P1', Vlc.genesis()
        )
        second = await asyncio.to_thread(
            service.update, deployment.signer('P1'), 'P1', first
        )
    finally:
        transport.close()

    assert second.value == ClockValue.of({'P1': 2})
    assert deployment.service.verify(second)
    assert 'v2' not in second.proofs[MONO].sigs


@pytest.mark.asyncio
@pytest.mark.integration
async def test_attested_prove_over_sockets():
    deployment = build_deployment(
        DeploymentConfig(backend=BackendName.ATTESTED, kinds=(MONO,), entities=('P1',))
    )
    servers, addresses = await serve_all(deployment.handlers)
    transport = SocketNodeTransport(addresses, timeout_ms=200)
    service = ClockService(
        AttestedBackend(attested_config(deployment.config), transport),
        deployment.config.kinds,
    )
    try:
        vlc = await asyncio.to_thread(
            service.update, deployment.signer('P1'), 'P1', Vlc.genesis()
        )
    finally:
        transport.close()
        await shutdown(servers)

    assert len(vlc.proofs[MONO].attestations) == 2
    assert deployment.service.verify(vlc)


@pytest.mark.unit
def test_unreachable_node_reads_as_silent():
    transport = SocketNodeTransport({'v0': ('127.0.0.1', 1)}, timeout_ms=50)
    assert transport.request('v0', None) is None
    assert transport.request('missing', None) is None


@pytest.mark.unit
def test_reject_frame_round_trip():
    reply = NodeReply(node_id='v1', reject_code='stale-base', reject_detail='base 1 < 3')
    frame = encode_reply(reply)
    assert frame[4] == FrameType.REJECT
    assert decode_reply(FrameType(frame[4]), frame[5:]) == reply
