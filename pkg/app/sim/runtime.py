"""
Real-socket host for the same Process classes the simulator runs.

Each process gets a stream server on localhost and an inbox drained by one
task, so handlers stay serial per process. Messages travel as length-prefixed
frames carrying the sender id. Time is wall-clock milliseconds since start.
"""

import asyncio
from collections.abc import Callable, Sequence
import random
import struct
from typing import Any

import structlog

from app.codec import ByteReader, ByteWriter, CodecError
from app.sim.engine import Context, Process
from app.sim.errors import SimulationError
from app.sim.structures import SimEvent, SimEventKind, Trace


logger = structlog.get_logger()

MAX_MESSAGE_BYTES = 16 * 1024 * 1024


def encode_message(src: str, payload: bytes) -> bytes:
    body = ByteWriter().short_bytes(src.encode()).raw(payload).getvalue()
    return struct.pack('>I', len(body)) + body


def decode_message(body: bytes) -> tuple[str, bytes]:
    reader = ByteReader(body)
    src = reader.short_bytes().decode()
    return src, body[reader.offset :]


class SocketContext(Context):
    def __init__(self, runtime: 'SocketRuntime', pid: str, seed: int) -> None:
        self._runtime = runtime
        self.pid = pid
        self.random = random.Random(f'{seed}/{pid}')

    @property
    def now(self) -> int:
        return self._runtime.now

    @property
    def peers(self) -> tuple[str, ...]:
        return tuple(p for p in self._runtime.pids if p != self.pid)

    def send(self, dst: str, payload: bytes, delay: int = 0) -> None:
        self._runtime.enqueue_send(self.pid, dst, payload, delay)

    def set_timer(self, delay: int, name: str) -> None:
        self._runtime.loop.call_later(
            max(delay, 0) / 1000, self._runtime.inboxes[self.pid].put_nowait, ('timer', name)
        )

    def note(self, name: str, **fields: Any) -> None:
        self._runtime.record(SimEventKind.NOTE, self.pid, name=name, fields=fields)


class SocketRuntime:
    """Hosts processes on localhost sockets until stopped"""

    def __init__(self, processes: Sequence[Process], host: str = '127.0.0.1', seed: int = 0):
        self.processes = {p.pid: p for p in processes}
        self.pids = tuple(sorted(self.processes))
        self.host = host
        self.seed = seed
        self.trace = Trace()
        self.ports: dict[str, int] = {}
        self.inboxes: dict[str, asyncio.Queue] = {}
        self.contexts: dict[str, SocketContext] = {}
        self._links: dict[tuple[str, str], asyncio.Queue] = {}
        self._writers: list[asyncio.StreamWriter] = []
        self._servers: list[asyncio.Server] = []
        self._tasks: list[asyncio.Task] = []
        self._seq = 0
        self._t0 = 0.0
        self.loop: asyncio.AbstractEventLoop | None = None

    @property
    def now(self) -> int:
        return int((self.loop.time() - self._t0) * 1000)

    def record(self, kind: SimEventKind, src: str, **fields: Any) -> None:
        self.trace.append(SimEvent(seq=self._seq, time=self.now, kind=kind, src=src, **fields))
        self._seq += 1

    async def start(self) -> None:
        self.loop = asyncio.get_running_loop()
        self._t0 = self.loop.time()
        for pid in self.pids:
            self.inboxes[pid] = asyncio.Queue()
            self.contexts[pid] = SocketContext(self, pid, self.seed)
            server = await asyncio.start_server(
                lambda r, w, pid=pid: self._accept(pid, r, w), self.host, 0
            )
            self._servers.append(server)
            self.ports[pid] = server.sockets[0].getsockname()[1]
        for pid in self.pids:
            self._tasks.append(asyncio.create_task(self._drain(pid)))
            self.inboxes[pid].put_nowait(('start',))
        logger.info('Socket runtime started', ports=self.ports)

    async def _accept(
        self, pid: str, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            while True:
                (size,) = struct.unpack('>I', await reader.readexactly(4))
                if size > MAX_MESSAGE_BYTES:
                    raise CodecError(f'message of {size} bytes exceeds limit')
                src, payload = decode_message(await reader.readexactly(size))
                self.inboxes[pid].put_nowait(('msg', src, payload))
        except asyncio.IncompleteReadError:
            pass
        except CodecError as e:
            logger.warning('Dropping connection after bad frame', pid=pid, error=str(e))
        finally:
            writer.close()

    async def _drain(self, pid: str) -> None:
        process, ctx, inbox = self.processes[pid], self.contexts[pid], self.inboxes[pid]
        while True:
            item = await inbox.get()
            try:
                match item:
                    case ('start',):
                        process.on_start(ctx)
                    case ('msg', src, payload):
                        self.record(SimEventKind.DELIVER, src, dst=pid)
                        process.on_message(ctx, src, payload)
                    case ('timer', name):
                        self.record(SimEventKind.TIMER, pid, name=name)
                        process.on_timer(ctx, name)
            except Exception:
                logger.exception('Process handler failed', pid=pid, item=item[0])

    def enqueue_send(self, src: str, dst: str, payload: bytes, delay: int) -> None:
        if dst not in self.processes:
            raise SimulationError(f'{src} sent to unknown process {dst}')
        self.record(SimEventKind.SEND, src, dst=dst, payload=payload.hex())
        queue = self._links.get((src, dst))
        if queue is None:
            queue = self._links[(src, dst)] = asyncio.Queue()
            self._tasks.append(self.loop.create_task(self._link_sender(src, dst, queue)))
        queue.put_nowait((payload, delay))

    async def _link_sender(self, src: str, dst: str, queue: asyncio.Queue) -> None:
        # one connection and one task per directed link keeps sends in order
        _, writer = await asyncio.open_connection(self.host, self.ports[dst])
        self._writers.append(writer)
        while True:
            payload, delay = await queue.get()
            try:
                if delay > 0:
                    await asyncio.sleep(delay / 1000)
                writer.write(encode_message(src, payload))
                await writer.drain()
            except Exception:
                logger.exception('Link send failed', src=src, dst=dst)

    async def run_until(self, condition: Callable[[], bool], timeout_s: float = 10.0) -> Trace:
        deadline = self.loop.time() + timeout_s
        while not condition():
            if self.loop.time() > deadline:
                raise TimeoutError('socket runtime did not reach the stop condition')
            await asyncio.sleep(0.01)
        return self.trace

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        for writer in self._writers:
            writer.close()
        for server in self._servers:
            server.close()
            await server.wait_closed()
