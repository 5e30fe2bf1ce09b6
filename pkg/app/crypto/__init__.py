from app.crypto.keys import KeyPair, digest, verify_signature


__all__ = ['KeyPair', 'digest', 'verify_signature']
