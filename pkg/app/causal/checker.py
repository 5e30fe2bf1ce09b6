from collections import defaultdict
from collections.abc import Iterable

from app.clock import ClockValue, Ordering, compare
from app.sim.structures import Trace, Violation


def check_causal_delivery(trace: Trace, honest: Iterable[str]) -> list[Violation]:
    """No honest process delivers a message whose clock precedes one it delivered"""
    honest = set(honest)
    delivered: dict[str, list[tuple[str, ClockValue]]] = defaultdict(list)
    violations = []
    for note in trace.notes('deliver'):
        if note.src not in honest:
            continue
        clock = ClockValue.from_json_obj(note.fields['clock'])
        for earlier_payload, earlier in delivered[note.src]:
            if compare(clock, earlier) is Ordering.BF:
                violations.append(
                    Violation(
                        checker='causal-delivery',
                        seq=note.seq,
                        message=f'{note.src} delivered {note.fields["payload"]} after '
                        f'{earlier_payload} although its clock precedes',
                    )
                )
                break
        delivered[note.src].append((note.fields['payload'], clock))
    return violations


def check_pair_order(trace: Trace, victim: str, before: str, after: str) -> list[Violation]:
    """The victim never delivers `before` once it has delivered `after`"""
    seen_after = None
    for note in trace.notes('deliver'):
        if note.src != victim:
            continue
        if note.fields['payload'] == after:
            seen_after = note
        elif note.fields['payload'] == before and seen_after is not None:
            return [
                Violation(
                    checker='causal-order',
                    seq=note.seq,
                    message=f'{victim} delivered {before} after {after} '
                    f'(seq {seen_after.seq})',
                )
            ]
    return []
