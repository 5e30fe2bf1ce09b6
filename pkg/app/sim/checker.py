from app.sim.structures import SimEventKind, Trace, Violation


def check_transport(trace: Trace) -> list[Violation]:
    """
    The trace is ordered by (time, seq) and every deliver or drop refers to an
    earlier send on the same link.
    """
    violations = []
    sends: dict[int, tuple[str, str, int]] = {}
    previous = None
    for event in trace:
        if previous is not None and (event.time, event.seq) <= (previous.time, previous.seq):
            violations.append(
                Violation(checker='transport', seq=event.seq, message='trace out of order')
            )
        previous = event
        if event.kind is SimEventKind.SEND and event.msg_id is not None:
            sends[event.msg_id] = (event.src, event.dst, event.time)
        elif event.kind in (SimEventKind.DELIVER, SimEventKind.DROP):
            sent = sends.get(event.msg_id)
            if sent is None:
                violations.append(
                    Violation(
                        checker='transport',
                        seq=event.seq,
                        message=f'{event.kind.value} of message {event.msg_id} never sent',
                    )
                )
            elif sent[:2] != (event.src, event.dst) or sent[2] > event.time:
                violations.append(
                    Violation(
                        checker='transport',
                        seq=event.seq,
                        message=f'{event.kind.value} of message {event.msg_id} does not '
                        'match its send',
                    )
                )
    return violations
