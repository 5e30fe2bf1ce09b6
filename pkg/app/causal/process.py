from collections.abc import Mapping, Sequence

import structlog

from app.backends.errors import ProofError
from app.causal.middlebox import CausalMiddlebox
from app.causal.structures import (
    CausalEnvelope,
    DiscardReason,
    Send,
    decode_envelope,
    encode_envelope,
)
from app.codec import CodecError
from app.sim.engine import Context, Process
from app.validators.errors import FrontendRejected


logger = structlog.get_logger()


class CausalProcess(Process):
    """
    Scripted application process behind a causal middlebox. Sends happen at
    fixed ticks or as reactions to delivering a given payload.
    """

    def __init__(
        self,
        pid: str,
        middlebox: CausalMiddlebox,
        sends: Sequence[Send] = (),
        reactions: Mapping[bytes, Sequence[Send]] | None = None,
    ) -> None:
        super().__init__(pid)
        self.middlebox = middlebox
        self.sends = list(sends)
        self.reactions = dict(reactions or {})
        self.delivered: list[bytes] = []

    def on_start(self, ctx: Context) -> None:
        for index, send in enumerate(self.sends):
            ctx.set_timer(send.at, f'send:{index}')

    def on_timer(self, ctx: Context, name: str) -> None:
        if name.startswith('send:'):
            self.send(ctx, self.sends[int(name.removeprefix('send:'))])

    def send(self, ctx: Context, send: Send) -> CausalEnvelope | None:
        try:
            envelope = self.middlebox.egress(send.payload)
        except (FrontendRejected, ProofError) as e:
            code = getattr(e, 'code', 'proof-error')
            logger.warning('Send failed', pid=self.pid, payload=send.payload, error=str(e))
            ctx.note('send-failed', payload=send.payload.decode(errors='replace'), code=code)
            return None
        data = encode_envelope(envelope)
        cost = self.middlebox.service.last_cost_ticks
        for dst in send.to:
            ctx.send(dst, data, delay=cost)
        ctx.note(
            'send',
            payload=send.payload.decode(errors='replace'),
            to=list(send.to),
            clock=envelope.clock.value.to_json_obj(),
        )
        return envelope

    def on_message(self, ctx: Context, src: str, payload: bytes) -> None:
        try:
            envelope = decode_envelope(payload)
        except CodecError as e:
            logger.debug('Malformed envelope', pid=self.pid, src=src, error=str(e))
            ctx.note('discard', src=src, reason=DiscardReason.MALFORMED.value, payload='')
            return

        text = envelope.payload.decode(errors='replace')
        try:
            reason = self.middlebox.ingress(envelope)
        except (FrontendRejected, ProofError) as e:
            logger.warning('Merge failed', pid=self.pid, src=src, error=str(e))
            ctx.note('merge-failed', src=src, payload=text, error=str(e))
            return
        if reason is not None:
            ctx.note(
                'discard',
                src=src,
                sender=envelope.sender,
                reason=reason.value,
                payload=text,
                clock=envelope.clock.value.to_json_obj(),
            )
            return

        self.delivered.append(envelope.payload)
        ctx.note(
            'deliver',
            src=src,
            sender=envelope.sender,
            payload=text,
            clock=envelope.clock.value.to_json_obj(),
        )
        for send in self.reactions.get(envelope.payload, ()):
            self.send(ctx, send)
