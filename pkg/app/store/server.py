"""
Store replica. Every server answers Gets from its local state and accepts Puts
for the keys it owns; installed versions propagate asynchronously and wait in a
pending set until their dependencies are installed locally.
"""

from collections import defaultdict
from pathlib import Path

from pydantic import BaseModel
import structlog

from app.backends.errors import ProofError
from app.backends.service import ClockService
from app.clock import ClockValue, Ordering, compare, merge
from app.codec import CodecError
from app.crypto import KeyPair
from app.settings import settings
from app.sim.engine import Context, Process
from app.store.codec import decode_entry, decode_message, encode_entry, encode_message
from app.store.structures import (
    ForkEvidence,
    GetRequest,
    PartitionMap,
    PutRequest,
    ReplyStatus,
    StoreReply,
    VersionedEntry,
)
from app.validators.errors import FrontendRejected


logger = structlog.get_logger()


class SnapshotLine(BaseModel):
    key: str
    version: int
    entry: str  # hex of the binary entry encoding


def append_snapshot(path: Path, entry: VersionedEntry) -> None:
    line = SnapshotLine(key=entry.key, version=entry.version, entry=encode_entry(entry).hex())
    with path.open('a') as fp:
        fp.write(line.model_dump_json() + '\n')


def read_snapshot(path: Path) -> list[VersionedEntry]:
    if not path.exists():
        return []
    entries = []
    for raw in path.read_text().splitlines():
        if raw.strip():
            line = SnapshotLine.model_validate_json(raw)
            entries.append(decode_entry(bytes.fromhex(line.entry)))
    return entries


class StoreServer(Process):
    def __init__(
        self,
        pid: str,
        signer: KeyPair,
        service: ClockService,
        partitions: PartitionMap,
        *,
        get_ticks: int = 1,
        put_ticks: int = 5,
        apply_ticks: int = 1,
        snapshot: Path | None = None,
        max_value_bytes: int | None = None,
    ) -> None:
        super().__init__(pid)
        self.signer = signer
        self.service = service
        self.partitions = partitions
        self.get_ticks = get_ticks
        self.put_ticks = put_ticks
        self.apply_ticks = apply_ticks
        self.snapshot = snapshot
        self.max_value_bytes = max_value_bytes or settings.store_max_value_bytes

        self.entries: dict[str, VersionedEntry] = {}
        # unmet key -> needed version -> entries waiting for it
        self.waiting: dict[str, dict[int, list[VersionedEntry]]] = defaultdict(
            lambda: defaultdict(list)
        )
        self._issued: dict[tuple[str, int], VersionedEntry] = {}
        self.forks: list[ForkEvidence] = []
        self.flagged: set[str] = set()
        self.busy_until = 0

    # local state

    def version(self, key: str) -> int:
        entry = self.entries.get(key)
        return entry.version if entry else 0

    def versions(self) -> dict[str, int]:
        return {key: entry.version for key, entry in sorted(self.entries.items())}

    @property
    def pending(self) -> int:
        return sum(len(entries) for by_version in self.waiting.values() for entries in by_version.values())

    def unmet(self, clock: ClockValue, own_key: str | None = None) -> tuple[str, int] | None:
        """First (key, version) of clock not installed here; own_key needs only its predecessor"""
        for entity_id, counter in clock.entries.items():
            key = entity_id.decode(errors='replace')
            needed = counter - 1 if key == own_key else counter
            if self.version(key) < needed:
                return key, needed
        return None

    def restore(self) -> int:
        """Reload verified entries from the snapshot file"""
        if self.snapshot is None:
            return 0
        restored = 0
        for entry in read_snapshot(self.snapshot):
            if self.service.verify(entry.vclock) and entry.version > self.version(entry.key):
                self.entries[entry.key] = entry
                self._issued[(entry.key, entry.version)] = entry
                restored += 1
        logger.info('Store snapshot restored', server=self.pid, entries=restored)
        return restored

    # requests

    def handle_get(self, req: GetRequest) -> StoreReply:
        return StoreReply(req_id=req.req_id, key=req.key, entry=self.entries.get(req.key))

    def handle_put(self, ctx: Context, req: PutRequest) -> StoreReply:
        def refuse(status: ReplyStatus, detail: str) -> StoreReply:
            logger.debug('Put refused', server=self.pid, key=req.key, status=status.value, detail=detail)
            return StoreReply(req_id=req.req_id, key=req.key, status=status, detail=detail)

        owner = self.partitions.owner_of(req.key)
        if owner != self.pid:
            return refuse(ReplyStatus.WRONG_OWNER, f'{req.key} is owned by {owner}')
        if len(req.value) > self.max_value_bytes:
            return refuse(ReplyStatus.REJECTED, f'value of {len(req.value)} bytes')
        missing = self.unmet(merge(vlc.value for vlc in req.deps))
        if missing is not None:
            key, needed = missing
            return refuse(ReplyStatus.NOT_UP_TO_DATE, f'{key} at {self.version(key)}, needs {needed}')

        current = self.entries.get(req.key)
        base = current.vclock if current else self.service.genesis()
        try:
            vclock = self.service.update(
                self.signer, req.key, base, req.deps, aux=req.client.encode()
            )
        except (FrontendRejected, ProofError) as e:
            return refuse(ReplyStatus.REJECTED, str(e))

        entry = VersionedEntry(key=req.key, value=req.value, vclock=vclock, origin=self.pid)
        self._install(ctx, entry)
        data = encode_message(entry)
        for server in self.partitions.servers:
            if server != self.pid:
                ctx.send(server, data)
        return StoreReply(req_id=req.req_id, key=req.key, entry=entry)

    # propagation

    def apply_remote(self, ctx: Context, entry: VersionedEntry) -> None:
        if entry.version < 1 or not self.service.verify(entry.vclock):
            logger.warning('Propagated entry does not verify', server=self.pid, origin=entry.origin, key=entry.key)
            self.flagged.add(entry.origin)
            ctx.note('invalid-entry', origin=entry.origin, key=entry.key)
            return
        work = [entry]
        while work:
            work.extend(self._apply(ctx, work.pop()))

    def _record_issued(self, ctx: Context, entry: VersionedEntry) -> bool:
        """False when another verified entry already holds this key and version"""
        slot = (entry.key, entry.version)
        known = self._issued.get(slot)
        if known is None:
            self._issued[slot] = entry
            return True
        if known.vclock.value != entry.vclock.value or known.value != entry.value:
            self._fork(ctx, known, entry)
            return False
        return True

    def _fork(self, ctx: Context, first: VersionedEntry, second: VersionedEntry) -> None:
        evidence = ForkEvidence(key=second.key, first=first, second=second)
        self.forks.append(evidence)
        self.flagged.add(second.origin)
        logger.warning('Fork detected', server=self.pid, key=second.key, owner=second.origin)
        ctx.note('fork', key=second.key, owner=second.origin, first=first.version, second=second.version)

    def _apply(self, ctx: Context, entry: VersionedEntry) -> list[VersionedEntry]:
        """Install or park one entry; returns entries woken by the install"""
        if not self._record_issued(ctx, entry):
            return []
        current = self.entries.get(entry.key)
        if current is not None and entry.version <= current.version:
            return []
        missing = self.unmet(entry.vclock.value, own_key=entry.key)
        if missing is not None:
            key, needed = missing
            self.waiting[key][needed].append(entry)
            ctx.note('pending', key=entry.key, version=entry.version, waits_for=key, needs=needed)
            return []
        if current is not None and compare(entry.vclock.value, current.vclock.value) is not Ordering.AF:
            self._fork(ctx, current, entry)
            return []
        self._install(ctx, entry)
        return self._wake(entry.key, entry.version)

    def _wake(self, key: str, version: int) -> list[VersionedEntry]:
        by_version = self.waiting.get(key)
        if not by_version:
            return []
        woken = []
        for needed in sorted(v for v in by_version if v <= version):
            woken.extend(by_version.pop(needed))
        if not by_version:
            del self.waiting[key]
        return woken

    def _install(self, ctx: Context, entry: VersionedEntry) -> None:
        self.entries[entry.key] = entry
        self._issued[(entry.key, entry.version)] = entry
        if self.snapshot is not None:
            append_snapshot(self.snapshot, entry)
        ctx.note('install', key=entry.key, version=entry.version, origin=entry.origin)

    # events

    def _charge(self, ctx: Context, ticks: int) -> int:
        """Serial service cost; returns the delay until the work completes"""
        start = max(ctx.now, self.busy_until)
        self.busy_until = start + ticks
        return self.busy_until - ctx.now

    def on_message(self, ctx: Context, src: str, payload: bytes) -> None:
        try:
            msg = decode_message(payload)
        except CodecError as e:
            logger.debug('Malformed store message', server=self.pid, src=src, error=str(e))
            ctx.note('malformed', src=src)
            return
        match msg:
            case GetRequest():
                reply = self.handle_get(msg)
                ctx.send(src, encode_message(reply), self._charge(ctx, self.get_ticks))
            case PutRequest():
                reply = self.handle_put(ctx, msg)
                cost = self.put_ticks
                if reply.status is ReplyStatus.OK:
                    cost += self.service.last_cost_ticks
                ctx.send(src, encode_message(reply), self._charge(ctx, cost))
            case VersionedEntry():
                self._charge(ctx, self.apply_ticks)
                self.apply_remote(ctx, msg)
            case StoreReply():
                ctx.note('malformed', src=src)
