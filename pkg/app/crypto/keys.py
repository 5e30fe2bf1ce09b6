"""
Ed25519 signing keys and memoized verification
"""

from functools import lru_cache
import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)


PUBLIC_KEY_SIZE = 32
SIGNATURE_SIZE = 64


def digest(*parts: bytes) -> bytes:
    """SHA-256 over the concatenation of parts"""
    hasher = hashlib.sha256()
    for part in parts:
        hasher.update(part)
    return hasher.digest()


class KeyPair:
    """Ed25519 key pair; signatures are deterministic"""

    def __init__(self, private_key: Ed25519PrivateKey) -> None:
        self._private_key = private_key
        self.public_bytes = private_key.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )

    @classmethod
    def generate(cls) -> 'KeyPair':
        return cls(Ed25519PrivateKey.generate())

    @classmethod
    def from_seed(cls, label: str | bytes) -> 'KeyPair':
        """Derive a key from a label so simulated deployments replay identically"""
        if isinstance(label, str):
            label = label.encode()
        seed = digest(b'CHRONO/KEY/v1', label)
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    @classmethod
    def from_private_hex(cls, private_hex: str) -> 'KeyPair':
        return cls(Ed25519PrivateKey.from_private_bytes(bytes.fromhex(private_hex)))

    def private_hex(self) -> str:
        raw = self._private_key.private_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PrivateFormat.Raw,
            encryption_algorithm=serialization.NoEncryption(),
        )
        return raw.hex()

    @property
    def public_hex(self) -> str:
        return self.public_bytes.hex()

    def sign(self, message: bytes) -> bytes:
        return self._private_key.sign(message)

    def __repr__(self) -> str:
        return f'KeyPair(public={self.public_hex[:16]}...)'


@lru_cache(maxsize=1 << 16)
def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    """Check an Ed25519 signature; malformed keys or signatures yield False"""
    if len(public_key) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True
