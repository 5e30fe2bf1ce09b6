from app.causal.checker import check_causal_delivery, check_pair_order
from app.causal.middlebox import CausalMiddlebox
from app.causal.process import CausalProcess
from app.causal.structures import (
    CausalEnvelope,
    DiscardReason,
    Send,
    decode_envelope,
    encode_envelope,
)


__all__ = [
    'CausalEnvelope',
    'CausalMiddlebox',
    'CausalProcess',
    'DiscardReason',
    'Send',
    'check_causal_delivery',
    'check_pair_order',
    'decode_envelope',
    'encode_envelope',
]
