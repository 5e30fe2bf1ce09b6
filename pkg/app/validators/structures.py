from enum import Enum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field

from app.clock import ClockValue, EntityId, init, serialize
from app.clock.structures import as_entity_id
from app.codec import ByteWriter
from app.crypto import KeyPair, digest


REQUEST_DOMAIN = b'CHRONO/REQ/v1'


class FrontendKind(str, Enum):
    """Proof kinds; a proof of one kind never checks under another"""

    UPDATE = 'update'
    MONO = 'mono'
    APP = 'app'

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> 'FrontendKind':
        for kind, kind_code in _KIND_CODES.items():
            if kind_code == code:
                return kind
        raise ValueError(f'unknown frontend kind code {code}')

    @property
    def stateful(self) -> bool:
        return self is FrontendKind.MONO


_KIND_CODES = {FrontendKind.UPDATE: 1, FrontendKind.MONO: 2, FrontendKind.APP: 3}


class QuorumCert(BaseModel):
    """t-of-N validator signatures over one clock value"""

    model_config = ConfigDict(frozen=True)

    backend: Literal['quorum'] = 'quorum'
    kind: FrontendKind
    value_hash: bytes = Field(description='SHA-256 of the canonical clock bytes')
    sigs: dict[str, bytes] = Field(description='Validator node id to signature')


class Attestation(BaseModel):
    """One emulated enclave's statement about an output clock"""

    model_config = ConfigDict(frozen=True)

    enclave_key: bytes
    endorsement: bytes = Field(description='Root signature over key and measurement')
    measurement: bytes = Field(description='Digest of the frontend code identity')
    user_data: bytes = Field(description='Digest of kind and canonical clock')
    signature: bytes


class AttestedProof(BaseModel):
    model_config = ConfigDict(frozen=True)

    backend: Literal['attested'] = 'attested'
    kind: FrontendKind
    attestations: tuple[Attestation, ...]


class NullProof(BaseModel):
    """Placeholder proof of the unsafe baseline backend"""

    model_config = ConfigDict(frozen=True)

    backend: Literal['none'] = 'none'
    kind: FrontendKind


Proof = Annotated[
    QuorumCert | AttestedProof | NullProof, Field(discriminator='backend')
]


class Vlc(BaseModel):
    """A clock value together with one proof per enabled frontend kind"""

    model_config = ConfigDict(frozen=True)

    value: ClockValue
    proofs: dict[FrontendKind, Proof] = Field(default_factory=dict)

    @classmethod
    def genesis(cls) -> 'Vlc':
        return cls.model_construct(value=init(), proofs={})

    @property
    def is_genesis(self) -> bool:
        return self.value.is_genesis

    def __repr__(self) -> str:
        kinds = ','.join(sorted(kind.value for kind in self.proofs))
        return f'Vlc({self.value!r} [{kinds}])'


class ProveRequest(BaseModel):
    """Inputs of one Update invocation, signed by the invoking process"""

    model_config = ConfigDict(frozen=True)

    kind: FrontendKind
    entity_id: EntityId
    base: Vlc
    merged: tuple[Vlc, ...] = ()
    aux: bytes = b''
    invoker: bytes = Field(description='Public key of the invoking process')
    invoker_sig: bytes = b''

    def signing_payload(self) -> bytes:
        return request_payload(
            self.kind,
            self.entity_id,
            self.base.value,
            [vlc.value for vlc in self.merged],
            self.aux,
        )

    @classmethod
    def build(
        cls,
        kind: FrontendKind,
        entity_id: bytes | str,
        base: Vlc,
        merged: list[Vlc] | tuple[Vlc, ...],
        signer: KeyPair,
        aux: bytes = b'',
    ) -> 'ProveRequest':
        entity_id = as_entity_id(entity_id)
        payload = request_payload(
            kind, entity_id, base.value, [vlc.value for vlc in merged], aux
        )
        return cls(
            kind=kind,
            entity_id=entity_id,
            base=base,
            merged=tuple(merged),
            aux=aux,
            invoker=signer.public_bytes,
            invoker_sig=signer.sign(payload),
        )


def request_payload(
    kind: FrontendKind,
    entity_id: bytes,
    base: ClockValue,
    merged: list[ClockValue],
    aux: bytes,
) -> bytes:
    """Digest of domain tag, kind byte, id and canonical values"""
    writer = ByteWriter().raw(REQUEST_DOMAIN).u8(kind.code).short_bytes(entity_id)
    writer.raw(serialize(base)).u32(len(merged))
    for value in merged:
        writer.raw(serialize(value))
    writer.raw(digest(aux))
    return digest(writer.getvalue())


class RangeGrant(BaseModel):
    """Keys allowed to update every id in [start, end); empty end is unbounded"""

    model_config = ConfigDict(frozen=True)

    start: bytes = b''
    end: bytes = b''
    keys: frozenset[bytes]

    def covers(self, entity_id: bytes) -> bool:
        return self.start <= entity_id and (not self.end or entity_id < self.end)


class PermissionTable(BaseModel):
    """Static map from entity id to the public keys allowed to update it"""

    model_config = ConfigDict(frozen=True)

    grants: dict[EntityId, frozenset[bytes]] = Field(default_factory=dict)
    ranges: tuple[RangeGrant, ...] = ()

    def keys_for(self, entity_id: bytes) -> frozenset[bytes]:
        keys = set(self.grants.get(entity_id, frozenset()))
        for grant in self.ranges:
            if grant.covers(entity_id):
                keys |= grant.keys
        return frozenset(keys)

    def allows(self, entity_id: bytes, public_key: bytes) -> bool:
        if public_key in self.grants.get(entity_id, ()):
            return True
        return any(
            grant.covers(entity_id) and public_key in grant.keys
            for grant in self.ranges
        )


class MonoState(BaseModel):
    """Highest counter issued per id by one validator"""

    model_config = ConfigDict(frozen=True)

    highest: dict[EntityId, int] = Field(default_factory=dict)

    def get(self, entity_id: bytes) -> int:
        return self.highest.get(entity_id, 0)

    def advanced(self, entity_id: bytes, counter: int) -> 'MonoState':
        if counter <= self.get(entity_id):
            return self
        return MonoState.model_construct(highest={**self.highest, entity_id: counter})
