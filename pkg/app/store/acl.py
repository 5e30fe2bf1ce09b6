from app.validators.frontends import AppVerdict, predicates
from app.validators.structures import ProveRequest


PRIVATE_PREFIX = b'u/'


@predicates.register('store-acl')
def store_acl(req: ProveRequest, aux: bytes) -> AppVerdict:
    """
    Keys under u/<client>/ are writable only by that client; aux carries the
    client id of the Put. Every other key is shared.
    """
    if not req.entity_id.startswith(PRIVATE_PREFIX):
        return AppVerdict(allowed=True)
    owner = req.entity_id[len(PRIVATE_PREFIX) :].split(b'/', 1)[0]
    if owner == aux:
        return AppVerdict(allowed=True)
    return AppVerdict(
        allowed=False,
        detail=f'{aux.decode(errors="replace")} may not write {req.entity_id.decode(errors="replace")}',
    )
