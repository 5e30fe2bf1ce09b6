"""
Causal delivery middlebox: attaches the process clock to outgoing messages,
verifies and merges clocks of incoming ones, and discards messages that
happened before something already delivered.
"""

import structlog

from app.backends.service import ClockService
from app.causal.structures import CausalEnvelope, DiscardReason, encode_envelope
from app.clock import Ordering
from app.crypto import KeyPair, digest
from app.validators.structures import Vlc


logger = structlog.get_logger()


class CausalMiddlebox:
    def __init__(self, entity: str, signer: KeyPair, service: ClockService) -> None:
        self.entity = entity
        self.signer = signer
        self.service = service
        self.local: Vlc = service.genesis()
        # every clock this process produced, oldest first
        self.own_clocks: list[Vlc] = []
        self.received: list[Vlc] = []
        self._attached = False
        self._seen: set[bytes] = set()

    def _advance(self, merged: list[Vlc]) -> Vlc:
        self.local = self.service.update(self.signer, self.entity, self.local, merged)
        self.own_clocks.append(self.local)
        return self.local

    def egress(self, payload: bytes) -> CausalEnvelope:
        """
        Attach the current clock; a fresh Update is proved first unless the
        current clock is a merge no message has carried yet.
        """
        if self.local.is_genesis or self._attached:
            self._advance([])
        self._attached = True
        return CausalEnvelope(sender=self.entity, clock=self.local, payload=payload)

    def ingress(self, envelope: CausalEnvelope) -> DiscardReason | None:
        """None when the message is delivered, otherwise why it was discarded"""
        key = digest(encode_envelope(envelope))
        if key in self._seen:
            return DiscardReason.DUPLICATE
        if not self.service.verify(envelope.clock):
            logger.debug(
                'Discarding message with invalid clock',
                entity=self.entity,
                sender=envelope.sender,
                clock=repr(envelope.clock.value),
            )
            return DiscardReason.INVALID_PROOF
        if self.service.compare(envelope.clock, self.local) is Ordering.BF:
            return DiscardReason.STALE

        self._seen.add(key)
        self.received.append(envelope.clock)
        self._advance([envelope.clock])
        self._attached = False
        return None
