from collections import defaultdict

from app.codec import ByteReader, ByteWriter, CodecError
from app.sim.engine import Context, Process


class FifoEndpoint:
    """
    Per-link sequence numbers on send; duplicate suppression and hold-back on
    receive, so every peer's messages are handed up once and in send order.
    """

    def __init__(self) -> None:
        self._next_out: dict[str, int] = defaultdict(int)
        self._next_in: dict[str, int] = defaultdict(int)
        self._held: dict[str, dict[int, bytes]] = defaultdict(dict)
        self.duplicates = 0

    def wrap(self, dst: str, payload: bytes) -> bytes:
        seq = self._next_out[dst]
        self._next_out[dst] = seq + 1
        return ByteWriter().u64(seq).raw(payload).getvalue()

    def unwrap(self, src: str, frame: bytes) -> list[bytes]:
        reader = ByteReader(frame)
        seq = reader.u64()
        body = frame[reader.offset :]
        held = self._held[src]
        if seq < self._next_in[src] or seq in held:
            self.duplicates += 1
            return []
        held[seq] = body
        ready = []
        while self._next_in[src] in held:
            ready.append(held.pop(self._next_in[src]))
            self._next_in[src] += 1
        return ready

    def held_back(self) -> int:
        return sum(len(held) for held in self._held.values())


class FifoProcess(Process):
    """Process whose peer traffic runs over FIFO channels"""

    def __init__(self, pid: str) -> None:
        super().__init__(pid)
        self.fifo = FifoEndpoint()

    def send_ordered(self, ctx: Context, dst: str, payload: bytes, delay: int = 0) -> None:
        ctx.send(dst, self.fifo.wrap(dst, payload), delay)

    def broadcast_ordered(self, ctx: Context, payload: bytes, delay: int = 0) -> None:
        for peer in ctx.peers:
            self.send_ordered(ctx, peer, payload, delay)

    def on_message(self, ctx: Context, src: str, payload: bytes) -> None:
        try:
            ready = self.fifo.unwrap(src, payload)
        except CodecError:
            ctx.note('bad-frame', src=src)
            return
        for body in ready:
            self.on_ordered(ctx, src, body)

    def on_ordered(self, ctx: Context, src: str, payload: bytes) -> None:
        return None
