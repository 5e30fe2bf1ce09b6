from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from app.clock import ClockValue
from app.validators.structures import Vlc


class MsgKind(str, Enum):
    REQUEST = 'request'
    REPLY = 'reply'
    RELEASE = 'release'
    QUERY = 'query'
    ACK = 'ack'

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> 'MsgKind':
        for kind, kind_code in _KIND_CODES.items():
            if kind_code == code:
                return kind
        raise ValueError(f'unknown message kind {code}')


_KIND_CODES = {
    MsgKind.REQUEST: 1,
    MsgKind.REPLY: 2,
    MsgKind.RELEASE: 3,
    MsgKind.QUERY: 4,
    MsgKind.ACK: 5,
}


class ReplyEntry(BaseModel):
    """A queued Request the replier saw ordered before the replied one"""

    model_config = ConfigDict(frozen=True)

    requester: str
    clock: ClockValue


class MutexMsg(BaseModel):
    """
    Lock protocol message. Every message carries the sender's verifiable clock
    and the sender's signature over the whole encoding.
    """

    model_config = ConfigDict(frozen=True)

    kind: MsgKind
    sender: str
    clock: Vlc
    target: ClockValue | None = Field(
        default=None, description='Request clock a Reply, Query or Ack refers to'
    )
    entries: tuple[ReplyEntry, ...] = ()
    signature: bytes = b''


class AcquisitionProof(BaseModel):
    """Own Request plus the Replies and Releases that justify holding the lock"""

    model_config = ConfigDict(frozen=True)

    request: MutexMsg
    replies: tuple[MutexMsg, ...] = ()
    releases: tuple[MutexMsg, ...] = ()

    @property
    def requester(self) -> str:
        return self.request.sender

    @property
    def size(self) -> int:
        return 1 + len(self.replies) + len(self.releases)


class MutexError(Exception):
    """Local misuse of the lock protocol"""


class RequestPending(MutexError):
    """A new Request while the previous one is still pending"""


class NotHolder(MutexError):
    """Release by a process that does not hold the lock"""
