from enum import Enum

from pydantic import BaseModel, ConfigDict

from app.clock import ClockValue
from app.validators.structures import Attestation, Proof


class BackendName(str, Enum):
    """Proof backends a deployment can run on"""

    QUORUM = 'quorum'
    ATTESTED = 'attested'
    NONE = 'none'  # unsafe baseline: empty proofs, checks always pass


class FaultMode(str, Enum):
    """Behaviour of a validator node, for fault-injection runs"""

    HONEST = 'honest'
    SILENT = 'silent'
    WRONG_VALUE = 'wrong-value'
    EQUIVOCATE = 'equivocate'
    STALE_STATE = 'stale-state'


class NodeReply(BaseModel):
    """One validator's answer to a prove request"""

    model_config = ConfigDict(frozen=True)

    node_id: str
    value: ClockValue | None = None
    signature: bytes = b''
    attestation: Attestation | None = None
    reject_code: str = ''
    reject_detail: str = ''

    @property
    def rejected(self) -> bool:
        return bool(self.reject_code)


class ProvedValue(BaseModel):
    """A clock value together with the backend proof over it"""

    model_config = ConfigDict(frozen=True)

    value: ClockValue
    proof: Proof
