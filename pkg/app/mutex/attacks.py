from typing import Any

from app.codec import ByteReader
from app.mutex.codec import decode_msg
from app.mutex.process import MutexProcess
from app.mutex.structures import MsgKind
from app.sim.engine import Context, Interceptor, scripts


@scripts.register('replay-request')
class ReplayRequest(Interceptor):
    """Re-sends the process's first Request right after each of its Releases"""

    def __init__(self, process: MutexProcess, params: dict[str, Any]) -> None:
        self.process = process
        self._first_request: bytes | None = None

    def outbound(self, ctx: Context, dst: str, payload: bytes) -> list[bytes]:
        reader = ByteReader(payload)
        reader.u64()
        body = payload[reader.offset :]
        kind = decode_msg(body).kind
        if kind is MsgKind.REQUEST and self._first_request is None:
            self._first_request = body
        if kind is MsgKind.RELEASE and self._first_request is not None:
            ctx.note('replay', dst=dst)
            return [payload, self.process.fifo.wrap(dst, self._first_request)]
        return [payload]
