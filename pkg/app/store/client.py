from pydantic import BaseModel, Field
import structlog

from app.codec import CodecError
from app.sim.engine import Context, Process
from app.store.codec import decode_message, encode_message
from app.store.session import StoreSession
from app.store.structures import (
    GetRequest,
    PartitionMap,
    PutRequest,
    StoreError,
    StoreReply,
)


logger = structlog.get_logger()


class Workload(BaseModel):
    """Closed-loop client workload over uniformly chosen keys"""

    ops: int = Field(default=1000, ge=0)
    write_ratio: float = Field(default=0.01, ge=0.0, le=1.0)
    keys: tuple[str, ...] = Field(default_factory=lambda: key_names(100))
    value_bytes: int = Field(default=16, ge=1)
    think_ticks: int = Field(default=0, ge=0)
    retry_ticks: int = Field(default=5, ge=1)
    max_retries: int = Field(default=50, ge=0)


def key_names(count: int) -> tuple[str, ...]:
    return tuple(f'k{i:04d}' for i in range(count))


class StoreClient(Process):
    """
    Runs a workload through one session: Gets go to the home server first and
    rotate through the other servers on a refused read; Puts go to the owner.
    """

    def __init__(
        self,
        pid: str,
        session: StoreSession,
        partitions: PartitionMap,
        workload: Workload,
        home: int = 0,
    ) -> None:
        super().__init__(pid)
        self.session = session
        self.partitions = partitions
        self.workload = workload
        self.home = home
        self.completed = 0
        self.failed = 0
        self.retries = 0
        self._current: GetRequest | PutRequest | None = None
        self._started_at = 0
        self._attempts = 0

    @property
    def done(self) -> bool:
        return self.completed + self.failed >= self.workload.ops

    def on_start(self, ctx: Context) -> None:
        ctx.set_timer(0, 'op')

    def on_timer(self, ctx: Context, name: str) -> None:
        match name:
            case 'op':
                self._next_op(ctx)
            case 'retry':
                self._dispatch(ctx)

    def _next_op(self, ctx: Context) -> None:
        if self.done:
            ctx.note('session-done', completed=self.completed, failed=self.failed)
            return
        key = ctx.random.choice(self.workload.keys)
        if ctx.random.random() < self.workload.write_ratio:
            value = ctx.random.randbytes(self.workload.value_bytes)
            self._current = self.session.put_request(key, value)
        else:
            self._current = self.session.get_request(key)
        self._started_at = ctx.now
        self._attempts = 0
        self._dispatch(ctx)

    def _target(self) -> str:
        if isinstance(self._current, PutRequest):
            return self.partitions.owner_of(self._current.key)
        servers = self.partitions.servers
        return servers[(self.home + self._attempts) % len(servers)]

    def _dispatch(self, ctx: Context) -> None:
        ctx.send(self._target(), encode_message(self._current))

    def on_message(self, ctx: Context, src: str, payload: bytes) -> None:
        try:
            reply = decode_message(payload)
        except CodecError:
            ctx.note('malformed', src=src)
            return
        current = self._current
        if not isinstance(reply, StoreReply) or current is None or reply.req_id != current.req_id:
            return
        self._current = None
        try:
            if isinstance(current, PutRequest):
                entry = self.session.accept_put(current.key, reply)
            else:
                entry = self.session.accept_get(current.key, reply)
        except StoreError as e:
            self._refused(ctx, current, src, e)
            return

        self.completed += 1
        ctx.note(
            'write' if isinstance(current, PutRequest) else 'read',
            key=current.key,
            server=src,
            version=entry.version if entry else 0,
            value=entry.value.hex() if entry else '',
            clock=entry.vclock.value.to_json_obj() if entry else {},
            latency=ctx.now - self._started_at,
        )
        ctx.set_timer(self.workload.think_ticks, 'op')

    def _refused(
        self, ctx: Context, current: GetRequest | PutRequest, src: str, error: StoreError
    ) -> None:
        logger.debug('Store reply refused', client=self.pid, server=src, key=current.key, code=error.code)
        self._attempts += 1
        if self._attempts > self.workload.max_retries:
            self.failed += 1
            ctx.note('op-failed', key=current.key, code=error.code)
            ctx.set_timer(self.workload.think_ticks, 'op')
            return
        self.retries += 1
        ctx.note('retry', key=current.key, server=src, code=error.code)
        self._current = current
        ctx.set_timer(self.workload.retry_ticks, 'retry')
