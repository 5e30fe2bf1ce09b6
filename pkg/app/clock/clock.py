"""
Clock value arithmetic: genesis, update, partial-order comparison, the total
order extending it, and the canonical byte encoding used as signing payload.
"""

from collections.abc import Iterable, Sequence

from app.clock.structures import (
    MAX_ID_LEN,
    U64_MAX,
    ClockValue,
    CounterOverflowError,
    Ordering,
    as_entity_id,
)
from app.codec import ByteReader, ByteWriter, CodecError


def init() -> ClockValue:
    """Genesis clock"""
    return ClockValue.model_construct(entries={})


def merge(values: Iterable[ClockValue]) -> ClockValue:
    """Per-key maximum over all values"""
    merged: dict[bytes, int] = {}
    for value in values:
        for entity_id, counter in value.entries.items():
            if counter > merged.get(entity_id, 0):
                merged[entity_id] = counter
    return ClockValue.model_construct(entries=dict(sorted(merged.items())))


def update_value(
    entity_id: bytes | str, base: ClockValue, others: Sequence[ClockValue] = ()
) -> ClockValue:
    """Per-key max over base and others, then increment entity_id by one"""
    entity_id = as_entity_id(entity_id)
    if not 1 <= len(entity_id) <= MAX_ID_LEN:
        raise ValueError(f'entity id length {len(entity_id)} outside 1..{MAX_ID_LEN}')

    merged = merge([base, *others]).entries
    counter = merged.get(entity_id, 0) + 1
    if counter > U64_MAX:
        raise CounterOverflowError(f'counter for {entity_id!r} exceeds u64')
    merged[entity_id] = counter
    return ClockValue.model_construct(entries=dict(sorted(merged.items())))


def compare(a: ClockValue, b: ClockValue) -> Ordering:
    """Happened-before comparison; absent entries read as zero"""
    a_le_b = True
    b_le_a = True
    for entity_id in a.entries.keys() | b.entries.keys():
        left = a.entries.get(entity_id, 0)
        right = b.entries.get(entity_id, 0)
        if left < right:
            b_le_a = False
        elif left > right:
            a_le_b = False
        if not (a_le_b or b_le_a):
            return Ordering.CC

    if a_le_b and b_le_a:
        return Ordering.EQ
    return Ordering.BF if a_le_b else Ordering.AF


def happened_before(a: ClockValue, b: ClockValue) -> bool:
    return compare(a, b) is Ordering.BF


def counter_sum(c: ClockValue) -> int:
    """Sum of all counters; strictly grows with every update"""
    total = sum(c.entries.values())
    if total > U64_MAX:
        raise CounterOverflowError(f'counter sum {total} exceeds u64')
    return total


def total_key(c: ClockValue) -> tuple[int, bytes]:
    return counter_sum(c), serialize(c)


def total_less(a: ClockValue, b: ClockValue) -> bool:
    """Strict total order extending happened-before: (sum, canonical bytes)"""
    return total_key(a) < total_key(b)


def write_clock(writer: ByteWriter, c: ClockValue) -> ByteWriter:
    writer.u32(len(c.entries))
    for entity_id, counter in c.entries.items():
        writer.short_bytes(entity_id).u64(counter)
    return writer


def read_clock(reader: ByteReader) -> ClockValue:
    """Decode one canonical clock at the reader's cursor"""
    count = reader.u32()
    entries: dict[bytes, int] = {}
    previous: bytes | None = None
    for _ in range(count):
        entity_id = reader.short_bytes()
        counter = reader.u64()
        if not entity_id:
            raise CodecError('empty entity id')
        if len(entity_id) > MAX_ID_LEN:
            raise CodecError(f'entity id longer than {MAX_ID_LEN} bytes')
        if previous is not None and entity_id == previous:
            raise CodecError(f'duplicate entity id {entity_id!r}')
        if previous is not None and entity_id < previous:
            raise CodecError(f'entity ids not sorted at {entity_id!r}')
        if counter == 0:
            raise CodecError(f'zero counter for {entity_id!r}')
        entries[entity_id] = counter
        previous = entity_id
    return ClockValue.model_construct(entries=entries)


def serialize(c: ClockValue) -> bytes:
    return write_clock(ByteWriter(), c).getvalue()


def deserialize(data: bytes) -> ClockValue:
    reader = ByteReader(data)
    value = read_clock(reader)
    reader.expect_end()
    return value
