from collections.abc import Callable

import structlog

from app.clock import ClockValue, Ordering, compare, merge
from app.store.structures import (
    CausalityViolated,
    GetRequest,
    InvalidProof,
    NotUpToDate,
    PutRequest,
    ReplyStatus,
    StaleRead,
    StoreError,
    StoreReply,
    VersionedEntry,
    WrongOwner,
)
from app.validators.structures import Vlc


logger = structlog.get_logger()

VerifyFn = Callable[[Vlc], bool]

_STATUS_ERRORS = {
    ReplyStatus.NOT_UP_TO_DATE: NotUpToDate,
    ReplyStatus.WRONG_OWNER: WrongOwner,
}


class StoreSession:
    """
    Client side of the store. Every accepted reply clock joins the session
    frontier; the dependency clock is the per-key max over the frontier.
    """

    def __init__(self, client_id: str, verify: VerifyFn) -> None:
        self.client_id = client_id
        self.verify = verify
        self.frontier: list[Vlc] = []
        self._next_id = 0

    @property
    def dep_clock(self) -> ClockValue:
        return merge(vlc.value for vlc in self.frontier)

    def _absorb(self, vlc: Vlc) -> None:
        value = vlc.value
        if any(
            compare(value, kept.value) in (Ordering.BF, Ordering.EQ) for kept in self.frontier
        ):
            return
        self.frontier = [
            kept for kept in self.frontier if compare(kept.value, value) is not Ordering.BF
        ]
        self.frontier.append(vlc)

    def _req_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def get_request(self, key: str) -> GetRequest:
        return GetRequest(req_id=self._req_id(), key=key)

    def put_request(self, key: str, value: bytes) -> PutRequest:
        return PutRequest(
            req_id=self._req_id(),
            key=key,
            value=value,
            client=self.client_id,
            deps=tuple(self.frontier),
        )

    def _checked_entry(self, key: str, reply: StoreReply) -> VersionedEntry | None:
        if reply.status is not ReplyStatus.OK:
            error = _STATUS_ERRORS.get(reply.status, StoreError)
            raise error(reply.detail)
        entry = reply.entry
        if entry is None:
            return None
        if entry.key != key or entry.version < 1 or not self.verify(entry.vclock):
            logger.debug('Reply clock rejected', client=self.client_id, key=key)
            raise InvalidProof(f'reply for {key!r} does not verify')
        return entry

    def accept_get(self, key: str, reply: StoreReply) -> VersionedEntry | None:
        """Accept a Get reply whose version is not below the session's dependency"""
        entry = self._checked_entry(key, reply)
        needed = self.dep_clock[key]
        version = entry.version if entry else 0
        if version < needed:
            raise StaleRead(f'{key!r} at version {version}, session needs {needed}')
        if entry is not None:
            self._absorb(entry.vclock)
        return entry

    def accept_put(self, key: str, reply: StoreReply) -> VersionedEntry:
        """Accept a Put reply whose clock follows the session's dependency clock"""
        entry = self._checked_entry(key, reply)
        if entry is None:
            raise InvalidProof(f'put reply for {key!r} carries no entry')
        ordering = compare(entry.vclock.value, self.dep_clock)
        if ordering is not Ordering.AF:
            raise CausalityViolated(f'reply clock is {ordering.value} the dependency clock')
        self._absorb(entry.vclock)
        return entry
