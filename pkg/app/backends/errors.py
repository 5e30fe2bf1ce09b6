class ProofError(Exception):
    """A backend could not produce a proof"""


class InsufficientQuorum(ProofError):
    """Fewer than the required number of matching replies were collected"""
