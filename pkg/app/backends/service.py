"""
Backend abstraction and the clock service facade processes talk to.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from typing import ClassVar

import structlog

from app.backends.errors import ProofError
from app.backends.structures import ProvedValue
from app.clock import ClockValue, Ordering, compare, total_less, update_value
from app.crypto import KeyPair
from app.validators.errors import InvalidInputClock
from app.validators.structures import FrontendKind, Proof, ProveRequest, Vlc


logger = structlog.get_logger()

CheckFn = Callable[[FrontendKind, Proof, ClockValue], bool]


class ProofBackend(ABC):
    """Produces proofs for prove requests and checks them offline"""

    name: ClassVar[str]

    def __init__(self) -> None:
        # Simulated time spent by the most recent prove call
        self.last_cost_ticks = 0

    @abstractmethod
    def prove(self, req: ProveRequest) -> ProvedValue:
        """Run the frontends behind this backend; raise on rejection"""

    @abstractmethod
    def check(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        """True iff proof attests value under kind; never raises"""

    def close(self) -> None:
        return None


class VlcVerifier:
    """verify(vlc): every enabled kind's proof checks; genesis needs none"""

    def __init__(self, kinds: Sequence[FrontendKind], check: CheckFn) -> None:
        self.kinds = frozenset(kinds)
        self._check = check

    def __call__(self, vlc: Vlc) -> bool:
        if vlc.value.is_genesis:
            return not vlc.proofs
        if set(vlc.proofs) != self.kinds:
            return False
        for kind in self.kinds:
            proof = vlc.proofs[kind]
            try:
                if proof.kind is not kind or not self._check(kind, proof, vlc.value):
                    return False
            except (ValueError, TypeError, AttributeError, KeyError) as e:
                logger.debug('Proof check failed on malformed input', error=str(e))
                return False
        return True


class ClockService:
    """Init, update, verify and compare over verifiable clocks"""

    def __init__(self, backend: ProofBackend, kinds: Sequence[FrontendKind]) -> None:
        if not kinds:
            raise ValueError('at least one frontend kind must be enabled')
        self.backend = backend
        self.kinds = tuple(dict.fromkeys(kinds))
        self._verifier = VlcVerifier(self.kinds, backend.check)
        self.last_cost_ticks = 0

    @staticmethod
    def genesis() -> Vlc:
        return Vlc.genesis()

    def verify(self, vlc: Vlc) -> bool:
        return self._verifier(vlc)

    @property
    def verifier(self) -> VlcVerifier:
        return self._verifier

    def prove(
        self,
        signer: KeyPair,
        kind: FrontendKind,
        entity_id: bytes,
        base: Vlc,
        merged: Sequence[Vlc] = (),
        aux: bytes = b'',
    ) -> ProvedValue:
        """One proof of one kind; the building block of update"""
        req = ProveRequest.build(kind, entity_id, base, list(merged), signer, aux)
        proved = self.backend.prove(req)
        self.last_cost_ticks += self.backend.last_cost_ticks
        return proved

    def update(
        self,
        signer: KeyPair,
        entity_id: bytes | str,
        base: Vlc,
        merged: Sequence[Vlc] = (),
        aux: bytes = b'',
        kinds: Sequence[FrontendKind] | None = None,
    ) -> Vlc:
        """Verified Update: inputs must verify, one proof per enabled kind"""
        if isinstance(entity_id, str):
            entity_id = entity_id.encode()
        for index, vlc in enumerate([base, *merged]):
            if not self.verify(vlc):
                raise InvalidInputClock(f'input {index} does not verify locally')

        expected = update_value(entity_id, base.value, [vlc.value for vlc in merged])
        self.last_cost_ticks = 0  # accumulated by prove() across kinds
        proofs: dict[FrontendKind, Proof] = {}
        for kind in kinds or self.kinds:
            proved = self.prove(signer, kind, entity_id, base, merged, aux)
            if proved.value != expected:
                raise ProofError(
                    f'{kind.value} proof covers {proved.value!r}, expected {expected!r}'
                )
            proofs[kind] = proved.proof
        return Vlc.model_construct(value=expected, proofs=proofs)

    @staticmethod
    def compare(a: Vlc, b: Vlc) -> Ordering:
        return compare(a.value, b.value)

    @staticmethod
    def total_less(a: Vlc, b: Vlc) -> bool:
        return total_less(a.value, b.value)

    def close(self) -> None:
        self.backend.close()
