"""
Signed permission-table files.

File layout (JSON, bytes as lowercase hex):
    {"grants": {id_hex: [pubkey_hex, ...]},
     "ranges": [{"start": hex, "end": hex, "keys": [pubkey_hex, ...]}],
     "signer": admin_pubkey_hex,
     "signature": hex}
The signature covers the canonical JSON of grants and ranges.
"""

import json
from pathlib import Path
from typing import Any

from app.crypto import KeyPair, verify_signature
from app.validators.errors import PermissionFileError
from app.validators.structures import PermissionTable, RangeGrant


def table_to_json_obj(table: PermissionTable) -> dict[str, Any]:
    return {
        'grants': {
            entity_id.hex(): sorted(key.hex() for key in keys)
            for entity_id, keys in sorted(table.grants.items())
        },
        'ranges': [
            {
                'start': grant.start.hex(),
                'end': grant.end.hex(),
                'keys': sorted(key.hex() for key in grant.keys),
            }
            for grant in table.ranges
        ],
    }


def _canonical(body: dict[str, Any]) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(',', ':')).encode()


def table_from_json_obj(body: dict[str, Any]) -> PermissionTable:
    try:
        return PermissionTable(
            grants={
                bytes.fromhex(entity_id): frozenset(bytes.fromhex(k) for k in keys)
                for entity_id, keys in body.get('grants', {}).items()
            },
            ranges=tuple(
                RangeGrant(
                    start=bytes.fromhex(item.get('start', '')),
                    end=bytes.fromhex(item.get('end', '')),
                    keys=frozenset(bytes.fromhex(k) for k in item['keys']),
                )
                for item in body.get('ranges', [])
            ),
        )
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise PermissionFileError(f'malformed permission table: {e}')


def sign_table(table: PermissionTable, admin: KeyPair) -> dict[str, Any]:
    body = table_to_json_obj(table)
    return {
        **body,
        'signer': admin.public_hex,
        'signature': admin.sign(_canonical(body)).hex(),
    }


def load_signed_table(
    document: dict[str, Any], admin_public_key: bytes
) -> PermissionTable:
    """Parse a signed table; rejects foreign signers and bad signatures"""
    try:
        signer = bytes.fromhex(document['signer'])
        signature = bytes.fromhex(document['signature'])
    except (KeyError, ValueError, TypeError) as e:
        raise PermissionFileError(f'missing or malformed signature fields: {e}')

    if signer != admin_public_key:
        raise PermissionFileError('permission table signed by an unknown key')

    body = {
        'grants': document.get('grants', {}),
        'ranges': document.get('ranges', []),
    }
    if not verify_signature(signer, signature, _canonical(body)):
        raise PermissionFileError('permission table signature does not verify')
    return table_from_json_obj(body)


def write_signed_table(path: Path, table: PermissionTable, admin: KeyPair) -> None:
    path.write_text(json.dumps(sign_table(table, admin), indent=2, sort_keys=True))


def read_signed_table(path: Path, admin_public_key: bytes) -> PermissionTable:
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise PermissionFileError(f'{path} is not JSON: {e}')
    return load_signed_table(document, admin_public_key)
