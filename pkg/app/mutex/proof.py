from collections.abc import Callable, Mapping

import structlog

from app.clock import Ordering, compare, total_less
from app.mutex.codec import msg_signed_by
from app.mutex.structures import AcquisitionProof, MsgKind, MutexMsg
from app.validators.structures import Vlc


logger = structlog.get_logger()

VerifyFn = Callable[[Vlc], bool]


def _authentic(msg: MutexMsg, roster: Mapping[str, bytes], verify: VerifyFn) -> bool:
    public_key = roster.get(msg.sender)
    return (
        public_key is not None
        and msg_signed_by(msg, public_key)
        and not msg.clock.is_genesis
        and verify(msg.clock)
    )


def _reject(reason: str, **fields) -> bool:
    logger.debug('Acquisition proof rejected', reason=reason, **fields)
    return False


def check_acquisition(
    roster: Mapping[str, bytes], verify: VerifyFn, proof: AcquisitionProof
) -> bool:
    """
    Offline check a resource owner runs on a lock holder's proof. `roster` maps
    every process id to its public key.
    """
    try:
        return _check(roster, verify, proof)
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        return _reject('malformed', error=str(e))


def _check(roster: Mapping[str, bytes], verify: VerifyFn, proof: AcquisitionProof) -> bool:
    request = proof.request
    if request.kind is not MsgKind.REQUEST or not _authentic(request, roster, verify):
        return _reject('request', sender=request.sender)
    requested = request.clock.value

    covered = set()
    for reply in proof.replies:
        if reply.kind is not MsgKind.REPLY or not _authentic(reply, roster, verify):
            return _reject('reply', sender=reply.sender)
        if reply.sender == request.sender or reply.target != requested:
            return _reject('reply target', sender=reply.sender)
        if compare(reply.clock.value, requested) is not Ordering.AF:
            return _reject('reply not after request', sender=reply.sender)
        covered.add(reply.sender)

    releases: dict[str, list[MutexMsg]] = {}
    for release in proof.releases:
        if release.kind is not MsgKind.RELEASE or not _authentic(release, roster, verify):
            return _reject('release', sender=release.sender)
        if release.sender == request.sender:
            return _reject('own release', sender=release.sender)
        if compare(release.clock.value, requested) is Ordering.AF:
            covered.add(release.sender)
        releases.setdefault(release.sender, []).append(release)

    missing = set(roster) - {request.sender} - covered
    if missing:
        return _reject('uncovered processes', missing=sorted(missing))

    entries = [entry for reply in proof.replies for entry in reply.entries]
    for reply in proof.replies:
        for entry in reply.entries:
            if not any(
                compare(release.clock.value, entry.clock) is Ordering.AF
                for release in releases.get(entry.requester, ())
            ):
                return _reject(
                    'missing release', listed_by=reply.sender, requester=entry.requester
                )

    # a Release ordered before the Request must be demanded by a listed entry
    for release in proof.releases:
        if total_less(requested, release.clock.value):
            continue
        if not any(
            entry.requester == release.sender
            and compare(release.clock.value, entry.clock) is Ordering.AF
            for entry in entries
        ):
            return _reject('release before request', sender=release.sender)
    return True
