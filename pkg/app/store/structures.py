from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.validators.structures import Vlc


class StoreError(Exception):
    """A store operation was refused; the client may retry"""

    code = 'store-error'

    def __init__(self, detail: str = '') -> None:
        super().__init__(f'{self.code}: {detail}' if detail else self.code)
        self.detail = detail


class StaleRead(StoreError):
    """The returned version is older than the session depends on"""

    code = 'stale-read'


class CausalityViolated(StoreError):
    """A Put reply clock does not follow the session's dependency clock"""

    code = 'causality-violated'


class InvalidProof(StoreError):
    """A reply clock does not verify"""

    code = 'invalid-proof'


class WrongOwner(StoreError):
    code = 'wrong-owner'


class NotUpToDate(StoreError):
    """The server has not installed every version the request depends on"""

    code = 'not-up-to-date'


class VersionedEntry(BaseModel):
    """A stored value; vclock[key] is its version number"""

    model_config = ConfigDict(frozen=True)

    key: str
    value: bytes = b''
    vclock: Vlc
    origin: str = Field(default='', description='Server that issued the version')

    @property
    def version(self) -> int:
        return self.vclock.value[self.key]


class Partition(BaseModel):
    """Keys in [start, end) are written at `owner`; empty end is unbounded"""

    model_config = ConfigDict(frozen=True)

    start: str = ''
    end: str = ''
    owner: str

    def covers(self, key: str) -> bool:
        return self.start <= key and (not self.end or key < self.end)


class PartitionMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    partitions: tuple[Partition, ...]

    @model_validator(mode='after')
    def _contiguous(self) -> 'PartitionMap':
        parts = self.partitions
        if not parts:
            raise ValueError('at least one partition is required')
        if parts[0].start != '' or parts[-1].end != '':
            raise ValueError('partitions must cover the whole key space')
        for left, right in zip(parts, parts[1:], strict=False):
            if left.end != right.start or not left.start < left.end:
                raise ValueError(f'partitions {left.start!r} and {right.start!r} overlap or leave a gap')
        return self

    @classmethod
    def split(cls, servers: list[str] | tuple[str, ...], keys: list[str]) -> 'PartitionMap':
        """Contiguous ranges with an even share of the sorted keys per server"""
        keys = sorted(keys)
        bounds = [''] + [keys[len(keys) * i // len(servers)] for i in range(1, len(servers))] + ['']
        return cls(
            partitions=tuple(
                Partition(start=bounds[i], end=bounds[i + 1], owner=server)
                for i, server in enumerate(servers)
            )
        )

    def owner_of(self, key: str) -> str:
        return next(p.owner for p in self.partitions if p.covers(key))

    @property
    def servers(self) -> tuple[str, ...]:
        return tuple(p.owner for p in self.partitions)


class GetRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    req_id: int
    key: str


class PutRequest(BaseModel):
    """A write carrying the session's frontier of dependency clocks"""

    model_config = ConfigDict(frozen=True)

    req_id: int
    key: str
    value: bytes
    client: str
    deps: tuple[Vlc, ...] = ()


class ReplyStatus(str, Enum):
    OK = 'ok'
    NOT_UP_TO_DATE = 'not-up-to-date'
    WRONG_OWNER = 'wrong-owner'
    REJECTED = 'rejected'

    @property
    def code(self) -> int:
        return list(ReplyStatus).index(self)

    @classmethod
    def from_code(cls, code: int) -> 'ReplyStatus':
        members = list(cls)
        if not 0 <= code < len(members):
            raise ValueError(f'unknown reply status {code}')
        return members[code]


class StoreReply(BaseModel):
    model_config = ConfigDict(frozen=True)

    req_id: int
    key: str
    status: ReplyStatus = ReplyStatus.OK
    entry: VersionedEntry | None = None
    detail: str = ''


class ForkEvidence(BaseModel):
    """Two verified versions of one key that an honest owner never issues together"""

    model_config = ConfigDict(frozen=True)

    key: str
    first: VersionedEntry
    second: VersionedEntry

    @property
    def owner(self) -> str:
        return self.second.origin
