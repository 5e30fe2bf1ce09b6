"""
Byzantine-tolerant mutual exclusion over verifiable clocks.

Every message a process sends carries a freshly proved clock that merges every
clock it received since its previous send. A process acquires the lock when its
own Request is the smallest queued one under the total order and it holds, for
every peer, a Reply to that Request or a Release ordered after it, plus a
Release for every Request some Reply listed as earlier.
"""

from collections.abc import Mapping

import structlog

from app.backends.errors import ProofError
from app.backends.service import ClockService
from app.clock import ClockValue, Ordering, compare, merge, total_less
from app.codec import CodecError
from app.crypto import KeyPair
from app.mutex.codec import decode_msg, encode_msg, msg_signed_by, sign_msg
from app.mutex.structures import (
    AcquisitionProof,
    MsgKind,
    MutexMsg,
    NotHolder,
    ReplyEntry,
    RequestPending,
)
from app.sim.channels import FifoProcess
from app.sim.engine import Context
from app.validators.errors import FrontendRejected
from app.validators.structures import Vlc


logger = structlog.get_logger()


def _after(a: ClockValue, b: ClockValue) -> bool:
    return compare(a, b) is Ordering.AF


class MutexProcess(FifoProcess):
    def __init__(
        self,
        pid: str,
        signer: KeyPair,
        service: ClockService,
        roster: Mapping[str, bytes],
        *,
        rounds: int = 0,
        start_at: int = 0,
        hold_ticks: int = 5,
        think_ticks: int = 10,
        query_after: int = 20,
    ) -> None:
        super().__init__(pid)
        self.signer = signer
        self.service = service
        self.roster = dict(roster)
        self.rounds_left = rounds
        self.start_at = start_at
        self.hold_ticks = hold_ticks
        self.think_ticks = think_ticks
        self.query_after = query_after

        self.local: Vlc = service.genesis()
        self._unmerged: list[Vlc] = []
        # at most one queued Request per requester, own included
        self.queue: dict[str, MutexMsg] = {}
        self.latest: dict[str, ClockValue] = {}
        self.releases: dict[str, MutexMsg] = {}
        self.request_msg: MutexMsg | None = None
        self.replies: dict[str, MutexMsg] = {}
        self.holding = False
        self.proofs: list[AcquisitionProof] = []
        self._unanswered: dict[str, MutexMsg] = {}
        self._queried: set[tuple[str, ClockValue]] = set()
        self._query_armed = False
        # Acks wait until the queried Request has reached this process
        self._pending_acks: list[tuple[str, ClockValue]] = []

    # clocks

    def _absorb(self, clock: Vlc) -> None:
        value = clock.value
        if any(
            compare(value, kept.value) in (Ordering.BF, Ordering.EQ) for kept in self._unmerged
        ):
            return
        self._unmerged = [
            kept for kept in self._unmerged if compare(kept.value, value) is not Ordering.BF
        ]
        self._unmerged.append(clock)

    def _stamp(self) -> Vlc:
        self.local = self.service.update(self.signer, self.pid, self.local, self._unmerged)
        self._unmerged = []
        return self.local

    def _send(
        self,
        ctx: Context,
        dst: str | None,
        kind: MsgKind,
        target: ClockValue | None = None,
        entries: tuple[ReplyEntry, ...] = (),
    ) -> MutexMsg:
        msg = MutexMsg(
            kind=kind, sender=self.pid, clock=self._stamp(), target=target, entries=entries
        )
        msg = sign_msg(msg, self.signer)
        data = encode_msg(msg)
        cost = self.service.last_cost_ticks
        if dst is None:
            self.broadcast_ordered(ctx, data, cost)
        else:
            self.send_ordered(ctx, dst, data, cost)
        return msg

    def _saw(self, src: str, value: ClockValue) -> None:
        previous = self.latest.get(src)
        if previous is None or _after(value, previous):
            self.latest[src] = value

    # lock operations

    def request(self, ctx: Context) -> MutexMsg:
        if self.request_msg is not None:
            raise RequestPending(f'{self.pid} already waits for the lock')
        msg = self._send(ctx, None, MsgKind.REQUEST)
        self.request_msg = msg
        self.replies = {}
        self.queue[self.pid] = msg
        self.rounds_left -= 1
        ctx.note('request', clock=msg.clock.value.to_json_obj())
        self._progress(ctx)
        return msg

    def release(self, ctx: Context) -> MutexMsg:
        if not self.holding:
            raise NotHolder(f'{self.pid} does not hold the lock')
        requested = self.request_msg.clock.value
        msg = self._send(ctx, None, MsgKind.RELEASE)
        self.holding = False
        self.request_msg = None
        self.replies = {}
        del self.queue[self.pid]
        ctx.note(
            'release', clock=requested.to_json_obj(), release=msg.clock.value.to_json_obj()
        )
        if self.rounds_left > 0:
            ctx.set_timer(self.think_ticks, 'request')
        self._progress(ctx)
        return msg

    # event handlers

    def on_start(self, ctx: Context) -> None:
        if self.rounds_left > 0:
            ctx.set_timer(self.start_at, 'request')

    def on_timer(self, ctx: Context, name: str) -> None:
        try:
            match name:
                case 'request':
                    self.request(ctx)
                case 'release':
                    self.release(ctx)
                case 'query':
                    self._query_armed = False
                    self._send_queries(ctx)
        except (FrontendRejected, ProofError) as e:
            logger.warning('Lock step failed', pid=self.pid, step=name, error=str(e))
            ctx.note('step-failed', step=name, error=str(e))

    def _drop(self, ctx: Context, src: str, reason: str, kind: str = '') -> None:
        logger.debug('Dropping lock message', pid=self.pid, src=src, reason=reason)
        ctx.note('drop', src=src, reason=reason, kind=kind)

    def on_ordered(self, ctx: Context, src: str, payload: bytes) -> None:
        try:
            msg = decode_msg(payload)
        except CodecError:
            self._drop(ctx, src, 'malformed')
            return
        if msg.sender != src or not msg_signed_by(msg, self.roster.get(src, b'')):
            self._drop(ctx, src, 'bad-signature', msg.kind.value)
            return
        if msg.clock.is_genesis or not self.service.verify(msg.clock):
            self._drop(ctx, src, 'invalid-proof', msg.kind.value)
            return

        self._absorb(msg.clock)
        self._saw(src, msg.clock.value)
        try:
            match msg.kind:
                case MsgKind.REQUEST:
                    self._on_request(ctx, msg)
                case MsgKind.REPLY:
                    pending = self.request_msg
                    if pending is not None and msg.target == pending.clock.value:
                        self.replies[src] = msg
                case MsgKind.RELEASE:
                    self._on_release(ctx, msg)
                case MsgKind.QUERY:
                    if msg.target is not None:
                        self._pending_acks.append((src, msg.target))
            self._progress(ctx)
        except (FrontendRejected, ProofError) as e:
            logger.warning('Lock step failed', pid=self.pid, src=src, error=str(e))
            ctx.note('step-failed', step=msg.kind.value, error=str(e))

    def _on_request(self, ctx: Context, msg: MutexMsg) -> None:
        src = msg.sender
        released = self.releases.get(src)
        if released is not None and not _after(msg.clock.value, released.clock.value):
            ctx.note('ignored-request', src=src, reason='not-after-release')
            return
        if src in self.queue:
            ctx.note('ignored-request', src=src, reason='duplicate')
            return
        self.queue[src] = msg
        self._unanswered[src] = msg

    def _on_release(self, ctx: Context, msg: MutexMsg) -> None:
        """
        Checked against the sender's queued Request only. Requiring it to follow
        our own pending Request as well deadlocks concurrent contenders.
        """
        src = msg.sender
        queued = self.queue.get(src)
        if queued is not None:
            if not _after(msg.clock.value, queued.clock.value):
                self._drop(ctx, src, 'release-out-of-order', msg.kind.value)
                return
            del self.queue[src]
            self._unanswered.pop(src, None)
        previous = self.releases.get(src)
        if previous is None or _after(msg.clock.value, previous.clock.value):
            self.releases[src] = msg

    # progress

    def _unknown_peers(self, req: MutexMsg) -> list[str]:
        """Peers neither queued nor seen after the Request"""
        requested = req.clock.value
        return [
            q
            for q in sorted(self.roster)
            if q not in (self.pid, req.sender)
            and q not in self.queue
            and not (q in self.latest and _after(self.latest[q], requested))
        ]

    def _knows(self, value: ClockValue) -> bool:
        seen = merge([self.local.value, *(clock.value for clock in self._unmerged)])
        return compare(value, seen) in (Ordering.BF, Ordering.EQ)

    def _progress(self, ctx: Context) -> None:
        waiting, self._pending_acks = self._pending_acks, []
        for src, target in waiting:
            if self._knows(target):
                self._send(ctx, src, MsgKind.ACK, target=target)
            else:
                self._pending_acks.append((src, target))
        for _, req in sorted(self._unanswered.items()):
            unknown = self._unknown_peers(req)
            if not unknown:
                self._reply(ctx, req)
            elif not self._query_armed and any(
                (q, req.clock.value) not in self._queried for q in unknown
            ):
                self._query_armed = True
                ctx.set_timer(self.query_after, 'query')
        self._try_acquire(ctx)

    def _reply(self, ctx: Context, req: MutexMsg) -> None:
        requested = req.clock.value
        entries = tuple(
            ReplyEntry(requester=y, clock=queued.clock.value)
            for y, queued in sorted(self.queue.items())
            if y != req.sender and total_less(queued.clock.value, requested)
        )
        del self._unanswered[req.sender]
        self._send(ctx, req.sender, MsgKind.REPLY, target=requested, entries=entries)

    def _send_queries(self, ctx: Context) -> None:
        for _, req in sorted(self._unanswered.items()):
            for q in self._unknown_peers(req):
                if (q, req.clock.value) in self._queried:
                    continue
                self._queried.add((q, req.clock.value))
                ctx.note('query', dst=q, requester=req.sender)
                self._send(ctx, q, MsgKind.QUERY, target=req.clock.value)

    def _try_acquire(self, ctx: Context) -> None:
        req = self.request_msg
        if req is None or self.holding:
            return
        requested = req.clock.value
        if any(
            total_less(queued.clock.value, requested)
            for y, queued in self.queue.items()
            if y != self.pid
        ):
            return
        proof = self.assemble_proof(req)
        if proof is None:
            return
        self.holding = True
        self.proofs.append(proof)
        ctx.note('grant', clock=requested.to_json_obj(), proof_size=proof.size)
        ctx.set_timer(self.hold_ticks, 'release')

    def assemble_proof(self, req: MutexMsg) -> AcquisitionProof | None:
        """Replies and Releases covering every peer, or None while incomplete"""
        requested = req.clock.value
        replies = []
        needed: set[str] = set()
        for q in sorted(self.roster):
            if q == self.pid:
                continue
            reply = self.replies.get(q)
            if reply is not None:
                replies.append(reply)
                continue
            release = self.releases.get(q)
            if release is None or not _after(release.clock.value, requested):
                return None
            needed.add(q)
        for reply in replies:
            for entry in reply.entries:
                release = self.releases.get(entry.requester)
                if release is None or not _after(release.clock.value, entry.clock):
                    return None
                needed.add(entry.requester)
        return AcquisitionProof(
            request=req,
            replies=tuple(replies),
            releases=tuple(self.releases[q] for q in sorted(needed)),
        )
