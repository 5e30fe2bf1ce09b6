import json

import pytest

from app.crypto import KeyPair
from app.validators.errors import PermissionFileError
from app.validators.permissions import (
    load_signed_table,
    read_signed_table,
    sign_table,
    write_signed_table,
)
from app.validators.structures import PermissionTable, RangeGrant


@pytest.fixture
def f_admin():
    return KeyPair.from_seed('admin')


@pytest.fixture
def f_table():
    return PermissionTable(
        grants={b'P1': frozenset({KeyPair.from_seed('p1').public_bytes})},
        ranges=(
            RangeGrant(
                start=b'a', end=b'n', keys=frozenset({KeyPair.from_seed('s0').public_bytes})
            ),
        ),
    )


@pytest.mark.unit
def test_signed_file_round_trip(tmp_path, f_admin, f_table):
    path = tmp_path / 'perms.json'
    write_signed_table(path, f_table, f_admin)
    assert read_signed_table(path, f_admin.public_bytes) == f_table


@pytest.mark.unit
def test_tampered_grant_is_rejected(f_admin, f_table):
    document = sign_table(f_table, f_admin)
    mallory = KeyPair.from_seed('mallory').public_hex
    document['grants'][b'P1'.hex()].append(mallory)
    with pytest.raises(PermissionFileError, match='does not verify'):
        load_signed_table(document, f_admin.public_bytes)


@pytest.mark.unit
def test_foreign_signer_is_rejected(f_table):
    document = sign_table(f_table, KeyPair.from_seed('not-admin'))
    with pytest.raises(PermissionFileError, match='unknown key'):
        load_signed_table(document, KeyPair.from_seed('admin').public_bytes)


@pytest.mark.unit
def test_non_json_file(tmp_path, f_admin):
    path = tmp_path / 'perms.json'
    path.write_text('{not json')
    with pytest.raises(PermissionFileError):
        read_signed_table(path, f_admin.public_bytes)


@pytest.mark.unit
def test_missing_signature(f_admin, f_table):
    document = json.loads(json.dumps(sign_table(f_table, f_admin)))
    del document['signature']
    with pytest.raises(PermissionFileError):
        load_signed_table(document, f_admin.public_bytes)
