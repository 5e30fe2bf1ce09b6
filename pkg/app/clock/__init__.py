from app.clock.clock import (
    compare,
    counter_sum,
    deserialize,
    happened_before,
    init,
    merge,
    read_clock,
    serialize,
    total_less,
    update_value,
    write_clock,
)
from app.clock.structures import (
    ClockError,
    ClockValue,
    CounterOverflowError,
    EntityId,
    Ordering,
)


__all__ = [
    'ClockError',
    'ClockValue',
    'CounterOverflowError',
    'EntityId',
    'Ordering',
    'compare',
    'counter_sum',
    'deserialize',
    'happened_before',
    'init',
    'merge',
    'read_clock',
    'serialize',
    'total_less',
    'update_value',
    'write_clock',
]
