from typing import Any

from app.clock import update_value
from app.sim.engine import Context, Interceptor, Process, scripts
from app.store.codec import decode_message, encode_message
from app.store.structures import ReplyStatus, StoreReply, VersionedEntry
from app.validators.structures import Vlc


FORGED_VALUE = b'forged'


@scripts.register('forge-values')
class ForgeValues(Interceptor):
    """
    Byzantine replica: every reply to a client carries a forged value under a
    clock one version ahead, reusing whatever proofs the real entry had.
    """

    def __init__(self, process: Process, params: dict[str, Any]) -> None:
        self.process = process
        self.value = bytes.fromhex(params['value']) if 'value' in params else FORGED_VALUE

    def _forge(self, reply: StoreReply) -> StoreReply:
        real = reply.entry
        base = real.vclock if real else Vlc.genesis()
        vclock = Vlc.model_construct(
            value=update_value(reply.key, base.value), proofs=dict(base.proofs)
        )
        forged = VersionedEntry.model_construct(
            key=reply.key, value=self.value, vclock=vclock, origin=self.process.pid
        )
        return reply.model_copy(update={'entry': forged, 'status': ReplyStatus.OK})

    def outbound(self, ctx: Context, dst: str, payload: bytes) -> list[bytes]:
        msg = decode_message(payload)
        if not isinstance(msg, StoreReply):
            return [payload]
        ctx.note('forge', dst=dst, key=msg.key)
        return [encode_message(self._forge(msg))]
