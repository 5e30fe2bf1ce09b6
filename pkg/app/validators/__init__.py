from app.validators.errors import (
    AppRuleViolation,
    BadSignature,
    FrontendRejected,
    InvalidInputClock,
    KindMismatch,
    PermissionDenied,
    PermissionFileError,
    StaleBase,
)
from app.validators.frontends import (
    AppPredicate,
    AppVerdict,
    FrontendSuite,
    VerifyFn,
    frontend_app,
    frontend_mono,
    frontend_update,
    predicates,
)
from app.validators.structures import (
    Attestation,
    AttestedProof,
    FrontendKind,
    MonoState,
    NullProof,
    PermissionTable,
    Proof,
    ProveRequest,
    QuorumCert,
    RangeGrant,
    Vlc,
)


__all__ = [
    'AppPredicate',
    'AppRuleViolation',
    'AppVerdict',
    'Attestation',
    'AttestedProof',
    'BadSignature',
    'FrontendKind',
    'FrontendRejected',
    'FrontendSuite',
    'InvalidInputClock',
    'KindMismatch',
    'MonoState',
    'NullProof',
    'PermissionDenied',
    'PermissionFileError',
    'PermissionTable',
    'Proof',
    'ProveRequest',
    'QuorumCert',
    'RangeGrant',
    'StaleBase',
    'VerifyFn',
    'Vlc',
    'frontend_app',
    'frontend_mono',
    'frontend_update',
    'predicates',
]
