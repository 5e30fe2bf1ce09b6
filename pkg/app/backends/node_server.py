"""
Real-socket deployment of validator nodes and enclaves.

The server side is an asyncio stream server answering PROVE frames. The client
side is a blocking transport so the synchronous proof backends can use it from
process handlers or worker threads.
"""

import asyncio
import socket

import structlog

from app.backends.frames import (
    decode_prove,
    decode_reply,
    encode_prove,
    encode_reply,
    read_frame,
    read_frame_blocking,
)
from app.backends.structures import NodeReply
from app.backends.transport import NodeTransport, ProveHandler
from app.codec import CodecError
from app.settings import settings
from app.validators.structures import ProveRequest


logger = structlog.get_logger()


async def _serve_connection(
    handler: ProveHandler,
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
) -> None:
    peer = writer.get_extra_info('peername')
    try:
        while True:
            frame_type, body = await read_frame(reader)
            req = decode_prove(frame_type, body)
            reply = handler.handle_prove(req)
            if reply is None:
                # Silent nodes keep the connection open and never answer
                continue
            writer.write(encode_reply(reply))
            await writer.drain()
    except asyncio.IncompleteReadError:
        pass
    except CodecError as e:
        logger.warning('Closing connection after bad frame', peer=peer, error=str(e))
    finally:
        writer.close()


async def start_node_server(
    handler: ProveHandler, host: str = '127.0.0.1', port: int = 0
) -> asyncio.Server:
    """Start serving; port 0 picks a free port (see server.sockets)"""
    server = await asyncio.start_server(
        lambda r, w: _serve_connection(handler, r, w), host, port
    )
    bound = server.sockets[0].getsockname()
    logger.info('Validator listening', node_id=handler.node_id, address=bound)
    return server


class SocketNodeTransport(NodeTransport):
    """Blocking client for remote validators, one cached connection per node"""

    def __init__(
        self, addresses: dict[str, tuple[str, int]], timeout_ms: int | None = None
    ) -> None:
        self.addresses = addresses
        self.timeout = (timeout_ms or settings.node_timeout_ms) / 1000
        self._connections: dict[str, socket.socket] = {}

    @property
    def node_ids(self) -> list[str]:
        return sorted(self.addresses)

    def _connect(self, node_id: str) -> socket.socket:
        conn = self._connections.get(node_id)
        if conn is None:
            conn = socket.create_connection(self.addresses[node_id], timeout=self.timeout)
            self._connections[node_id] = conn
        return conn

    def _drop(self, node_id: str) -> None:
        conn = self._connections.pop(node_id, None)
        if conn is not None:
            conn.close()

    def request(self, node_id: str, req: ProveRequest) -> NodeReply | None:
        if node_id not in self.addresses:
            return None
        try:
            conn = self._connect(node_id)
            conn.sendall(encode_prove(req))
            frame_type, body = read_frame_blocking(conn)
            return decode_reply(frame_type, body)
        except (OSError, ConnectionError, CodecError) as e:
            # A timed-out connection may still deliver a late reply; start fresh
            logger.debug('Validator unreachable', node_id=node_id, error=str(e))
            self._drop(node_id)
            return None

    def close(self) -> None:
        for node_id in list(self._connections):
            self._drop(node_id)
