"""
Byzantine scripts against causal delivery. Each one rewrites the clock of a
target message sent by the process it is attached to.
"""

from typing import Any

import structlog

from app.causal.process import CausalProcess
from app.causal.structures import CausalEnvelope, decode_envelope, encode_envelope
from app.clock import ClockValue
from app.sim.engine import Context, Interceptor, scripts
from app.validators.errors import FrontendRejected
from app.validators.structures import Vlc


logger = structlog.get_logger()


class ClockRewrite(Interceptor):
    """Base for scripts that swap the clock of one target payload"""

    def __init__(self, process: CausalProcess, params: dict[str, Any]) -> None:
        self.process = process
        self.target = params.get('target', 'm3').encode()
        self._forged: bytes | None = None

    def outbound(self, ctx: Context, dst: str, payload: bytes) -> list[bytes]:
        envelope = decode_envelope(payload)
        if envelope.payload != self.target:
            return [payload]
        # a broadcast target is forged once and the same bytes go to every peer
        if self._forged is None:
            clock = self.forge(ctx, envelope)
            if clock is None:
                return [payload]
            ctx.note('forge', payload=self.target.decode(), clock=clock.value.to_json_obj())
            self._forged = encode_envelope(
                CausalEnvelope(sender=envelope.sender, clock=clock, payload=envelope.payload)
            )
        return [self._forged]

    def forge(self, ctx: Context, envelope: CausalEnvelope) -> Vlc | None:
        raise NotImplementedError


@scripts.register('erroneous-clock')
class ErroneousClock(ClockRewrite):
    """Attaches an arbitrary clock value under the proofs of the real one"""

    def __init__(self, process: CausalProcess, params: dict[str, Any]) -> None:
        super().__init__(process, params)
        self.value = ClockValue.of(params.get('value', {'P2': 2, 'P3': 3}))

    def forge(self, ctx: Context, envelope: CausalEnvelope) -> Vlc | None:
        return Vlc.model_construct(value=self.value, proofs=envelope.clock.proofs)


@scripts.register('cherry-pick')
class CherryPick(ClockRewrite):
    """
    Builds a clock from the smallest non-zero counter of each id among the
    received clocks, keeping its own counter; proofs come from the real clock.
    """

    def forge(self, ctx: Context, envelope: CausalEnvelope) -> Vlc | None:
        own = self.process.middlebox.entity.encode()
        picked: dict[bytes, int] = {}
        for vlc in self.process.middlebox.received:
            for entity_id, counter in vlc.value.entries.items():
                if entity_id != own:
                    picked[entity_id] = min(picked.get(entity_id, counter), counter)
        picked[own] = envelope.clock.value[own]
        return Vlc.model_construct(
            value=ClockValue(entries=picked), proofs=envelope.clock.proofs
        )


@scripts.register('stale-base')
class StaleBaseFork(ClockRewrite):
    """
    Forks from the oldest clock the process produced instead of its current
    one. The fork is a legitimately proved clock unless MONO refuses it.
    """

    def forge(self, ctx: Context, envelope: CausalEnvelope) -> Vlc | None:
        middlebox = self.process.middlebox
        if not middlebox.own_clocks:
            return None
        base = middlebox.own_clocks[0]
        try:
            return middlebox.service.update(middlebox.signer, middlebox.entity, base)
        except FrontendRejected as e:
            logger.info('Fork refused', pid=self.process.pid, code=e.code)
            ctx.note('fork-rejected', code=e.code, base=base.value.to_json_obj())
            return None
