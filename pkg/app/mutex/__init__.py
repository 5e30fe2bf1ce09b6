from app.mutex.checker import (
    check_all_granted,
    check_exclusion,
    check_grant_order,
    check_proof_exclusion,
)
from app.mutex.codec import (
    decode_msg,
    decode_proof,
    encode_msg,
    encode_proof,
    msg_signed_by,
    sign_msg,
)
from app.mutex.process import MutexProcess
from app.mutex.proof import check_acquisition
from app.mutex.runner import MutexPlan, MutexRunResult, fault_plan, run_mutex
from app.mutex.structures import (
    AcquisitionProof,
    MsgKind,
    MutexError,
    MutexMsg,
    NotHolder,
    ReplyEntry,
    RequestPending,
)


__all__ = [
    'AcquisitionProof',
    'MsgKind',
    'MutexError',
    'MutexMsg',
    'MutexPlan',
    'MutexProcess',
    'MutexRunResult',
    'NotHolder',
    'ReplyEntry',
    'RequestPending',
    'check_acquisition',
    'check_all_granted',
    'check_exclusion',
    'check_grant_order',
    'check_proof_exclusion',
    'decode_msg',
    'decode_proof',
    'encode_msg',
    'encode_proof',
    'fault_plan',
    'msg_signed_by',
    'run_mutex',
    'sign_msg',
]
