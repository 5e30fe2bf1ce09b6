from enum import Enum
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SimEventKind(str, Enum):
    SEND = 'send'
    DELIVER = 'deliver'
    DROP = 'drop'
    TIMER = 'timer'
    NOTE = 'note'  # protocol-level observation recorded for checkers


class SimEvent(BaseModel):
    """One entry of the global trace, totally ordered by (time, seq)"""

    model_config = ConfigDict(frozen=True)

    seq: int
    time: int
    kind: SimEventKind
    src: str
    dst: str = ''
    msg_id: int | None = None
    payload: str = Field(default='', description='Hex payload, on send events')
    name: str = Field(default='', description='Timer or note name')
    fields: dict[str, Any] = Field(default_factory=dict)


class LinkFaults(BaseModel):
    """Delay bounds (ticks) and fault probabilities of one directed link"""

    min_delay: int = Field(default=1, ge=0)
    max_delay: int = Field(default=10, ge=0)
    reorder_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    reorder_extra: int = Field(
        default=50, ge=1, description='Upper bound of extra delay for reordered messages'
    )
    drop_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    duplicate_prob: float = Field(default=0.0, ge=0.0, le=1.0)

    @model_validator(mode='after')
    def _check_bounds(self) -> 'LinkFaults':
        if self.min_delay > self.max_delay:
            raise ValueError('min_delay exceeds max_delay')
        return self

    @classmethod
    def fixed(cls, delay: int) -> 'LinkFaults':
        return cls(min_delay=delay, max_delay=delay)


class ScriptSpec(BaseModel):
    """Byzantine behaviour attached to one process"""

    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class FaultPlan(BaseModel):
    """Seed, per-link faults and Byzantine scripts of one simulation run"""

    seed: int = 0
    default: LinkFaults = Field(default_factory=LinkFaults)
    links: dict[str, LinkFaults] = Field(
        default_factory=dict, description="Overrides keyed 'src->dst'"
    )
    byzantine: dict[str, ScriptSpec] = Field(default_factory=dict)

    def faults_for(self, src: str, dst: str) -> LinkFaults:
        return self.links.get(f'{src}->{dst}', self.default)

    @classmethod
    def load(cls, path: Path) -> 'FaultPlan':
        return cls.model_validate_json(path.read_text())

    def dump(self, path: Path) -> None:
        path.write_text(self.model_dump_json(indent=2))


class Violation(BaseModel):
    """A checker finding, pointing at the trace event that exposed it"""

    checker: str
    seq: int | None = None
    message: str


class Trace:
    """Ordered list of simulation events with JSON-lines persistence"""

    def __init__(self, events: list[SimEvent] | None = None) -> None:
        self.events: list[SimEvent] = events or []

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def append(self, event: SimEvent) -> None:
        self.events.append(event)

    def notes(self, name: str | None = None) -> list[SimEvent]:
        return [
            e
            for e in self.events
            if e.kind is SimEventKind.NOTE and (name is None or e.name == name)
        ]

    def of_kind(self, kind: SimEventKind) -> list[SimEvent]:
        return [e for e in self.events if e.kind is kind]

    def dumps(self) -> str:
        return ''.join(
            json.dumps(e.model_dump(mode='json', exclude_defaults=True), sort_keys=True)
            + '\n'
            for e in self.events
        )

    def write_jsonl(self, path: Path) -> None:
        path.write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> 'Trace':
        return cls(
            [SimEvent.model_validate_json(line) for line in text.splitlines() if line.strip()]
        )

    @classmethod
    def read_jsonl(cls, path: Path) -> 'Trace':
        return cls.loads(path.read_text())
