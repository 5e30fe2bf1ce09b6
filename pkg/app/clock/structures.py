from collections.abc import Mapping
from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator


U64_MAX = 2**64 - 1
MAX_ID_LEN = 64

EntityId = Annotated[bytes, Field(min_length=1, max_length=MAX_ID_LEN)]


class ClockError(Exception):
    """Base class for clock arithmetic errors"""


class CounterOverflowError(ClockError, OverflowError):
    """A counter would exceed the unsigned 64-bit range"""


class Ordering(str, Enum):
    """Outcome of comparing two clocks under happened-before"""

    BF = 'BF'  # left happened before right
    EQ = 'EQ'
    AF = 'AF'  # left happened after right
    CC = 'CC'  # concurrent

    def flipped(self) -> 'Ordering':
        return {Ordering.BF: Ordering.AF, Ordering.AF: Ordering.BF}.get(self, self)


def as_entity_id(value: bytes | str) -> bytes:
    return value.encode() if isinstance(value, str) else value


class ClockValue(BaseModel):
    """Finite map from entity id to update counter; absent ids read as zero"""

    model_config = ConfigDict(frozen=True)

    entries: dict[EntityId, int] = Field(
        default_factory=dict, description='Entity id to counter, zero entries dropped'
    )

    @field_validator('entries')
    @classmethod
    def _canonical_entries(cls, entries: dict[bytes, int]) -> dict[bytes, int]:
        for entity_id, counter in entries.items():
            if counter < 0 or counter > U64_MAX:
                raise ValueError(f'counter for {entity_id!r} out of u64 range')
        return {k: v for k, v in sorted(entries.items()) if v}

    @classmethod
    def of(cls, mapping: Mapping[bytes | str, int] | None = None) -> 'ClockValue':
        """Build a clock from a plain mapping; str ids are utf-8 encoded"""
        mapping = mapping or {}
        return cls(entries={as_entity_id(k): v for k, v in mapping.items()})

    def __getitem__(self, entity_id: bytes | str) -> int:
        return self.entries.get(as_entity_id(entity_id), 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __hash__(self) -> int:
        return hash(tuple(self.entries.items()))

    def __repr__(self) -> str:
        inner = ', '.join(f'{_render_id(k)}:{v}' for k, v in self.entries.items())
        return f'{{{inner}}}'

    __str__ = __repr__

    @property
    def is_genesis(self) -> bool:
        return not self.entries

    def to_json_obj(self) -> dict[str, int]:
        return {k.hex(): v for k, v in self.entries.items()}

    @classmethod
    def from_json_obj(cls, data: Mapping[str, int]) -> 'ClockValue':
        return cls(entries={bytes.fromhex(k): v for k, v in data.items()})


def _render_id(entity_id: bytes) -> str:
    try:
        text = entity_id.decode()
    except UnicodeDecodeError:
        return entity_id.hex()
    return text if text.isprintable() else entity_id.hex()
