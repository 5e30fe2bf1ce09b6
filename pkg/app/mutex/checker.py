from app.clock import ClockValue, Ordering, compare
from app.clock.clock import total_key
from app.mutex.structures import AcquisitionProof
from app.sim.structures import SimEventKind, Trace, Violation


def _lock_notes(trace: Trace):
    return [
        e for e in trace if e.kind is SimEventKind.NOTE and e.name in ('grant', 'release')
    ]


def check_exclusion(trace: Trace) -> list[Violation]:
    """Holder intervals between grant and release notes never overlap"""
    violations = []
    holder = None
    for note in _lock_notes(trace):
        if note.name == 'grant':
            if holder is not None:
                violations.append(
                    Violation(
                        checker='mutual-exclusion',
                        seq=note.seq,
                        message=f'{note.src} granted while {holder} holds the lock',
                    )
                )
            holder = note.src
        elif note.src == holder:
            holder = None
        else:
            violations.append(
                Violation(
                    checker='mutual-exclusion',
                    seq=note.seq,
                    message=f'{note.src} released a lock it does not hold',
                )
            )
    return violations


def check_grant_order(trace: Trace) -> list[Violation]:
    """A Request that happened before another is granted first"""
    granted: list[tuple[str, ClockValue]] = []
    violations = []
    for note in trace.notes('grant'):
        clock = ClockValue.from_json_obj(note.fields['clock'])
        for pid, earlier in granted:
            if compare(clock, earlier) is Ordering.BF:
                violations.append(
                    Violation(
                        checker='ordered-access',
                        seq=note.seq,
                        message=f'{note.src} granted after {pid} whose request '
                        'happened after its own',
                    )
                )
        granted.append((note.src, clock))
    return violations


def check_all_granted(trace: Trace, expected: int) -> list[Violation]:
    grants = len(trace.notes('grant'))
    if grants == expected:
        return []
    return [
        Violation(
            checker='liveness', message=f'{grants} of {expected} requests granted'
        )
    ]


def _released_before(earlier: AcquisitionProof, later: AcquisitionProof) -> bool:
    requester = earlier.requester
    requested = earlier.request.clock.value
    if later.requester == requester:
        return compare(later.request.clock.value, requested) is Ordering.AF
    if any(
        release.sender == requester and compare(release.clock.value, requested) is Ordering.AF
        for release in later.releases
    ):
        return True
    # a Reply sent after the Request that no longer lists it
    return any(
        reply.sender == requester
        and compare(reply.clock.value, requested) is Ordering.AF
        and not any(
            entry.requester == requester and entry.clock == requested for entry in reply.entries
        )
        for reply in later.replies
    )


def check_proof_exclusion(proofs: list[AcquisitionProof]) -> list[Violation]:
    """
    Cross-checks valid acquisition proofs: of two grants, the later-requested
    one must show that the earlier holder let go of its Request first.
    """
    ordered = sorted(proofs, key=lambda proof: total_key(proof.request.clock.value))
    violations = []
    for index, later in enumerate(ordered):
        for earlier in ordered[:index]:
            if earlier.request.clock.value == later.request.clock.value:
                continue
            if not _released_before(earlier, later):
                violations.append(
                    Violation(
                        checker='proof-exclusion',
                        message=f'proof of {later.requester} does not show that '
                        f'{earlier.requester} released first',
                    )
                )
    return violations
