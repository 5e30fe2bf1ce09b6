"""
Validator frontends: the semantic checks a clock update must pass before any
backend is allowed to prove it.
"""

from collections.abc import Callable

from pydantic import BaseModel
import structlog

from app.clock import ClockValue, update_value
from app.crypto import verify_signature
from app.validators.errors import (
    AppRuleViolation,
    BadSignature,
    FrontendRejected,
    InvalidInputClock,
    KindMismatch,
    PermissionDenied,
    StaleBase,
)
from app.validators.structures import (
    FrontendKind,
    MonoState,
    PermissionTable,
    ProveRequest,
    Vlc,
)


logger = structlog.get_logger()

VerifyFn = Callable[[Vlc], bool]


class AppVerdict(BaseModel):
    """Outcome of an application predicate"""

    allowed: bool
    detail: str = ''


AppPredicate = Callable[[ProveRequest, bytes], AppVerdict]


class PredicateRegistry:
    """Application predicates installed at startup, keyed by application name"""

    def __init__(self) -> None:
        self._predicates: dict[str, AppPredicate] = {}

    def register(self, name: str) -> Callable[[AppPredicate], AppPredicate]:
        def decorator(predicate: AppPredicate) -> AppPredicate:
            if name in self._predicates:
                raise ValueError(f'predicate {name!r} already registered')
            self._predicates[name] = predicate
            return predicate

        return decorator

    def get(self, name: str) -> AppPredicate:
        try:
            return self._predicates[name]
        except KeyError:
            raise ValueError(f'unknown application predicate {name!r}')

    def names(self) -> list[str]:
        return sorted(self._predicates)


predicates = PredicateRegistry()


@predicates.register('allow-all')
def allow_all(req: ProveRequest, aux: bytes) -> AppVerdict:
    return AppVerdict(allowed=True)


def _expect_kind(req: ProveRequest, kind: FrontendKind) -> None:
    if req.kind is not kind:
        raise KindMismatch(f'{req.kind.value} request at {kind.value} frontend')


def check_inputs(req: ProveRequest, verify_fn: VerifyFn) -> None:
    """Every input clock must itself verify"""
    for index, vlc in enumerate([req.base, *req.merged]):
        if not verify_fn(vlc):
            label = 'base' if index == 0 else f'merged[{index - 1}]'
            raise InvalidInputClock(f'{label} clock {vlc.value!r} does not verify')


def check_invoker(req: ProveRequest, perms: PermissionTable) -> None:
    """The invoker key must be granted on the id and must have signed the request"""
    if not perms.allows(req.entity_id, req.invoker):
        raise PermissionDenied(
            f'key {req.invoker.hex()[:16]} has no grant on id {req.entity_id!r}'
        )
    if not verify_signature(req.invoker, req.invoker_sig, req.signing_payload()):
        raise BadSignature(f'invoker signature invalid for id {req.entity_id!r}')


def _output(req: ProveRequest) -> ClockValue:
    return update_value(req.entity_id, req.base.value, [v.value for v in req.merged])


def frontend_update(
    req: ProveRequest, perms: PermissionTable, verify_fn: VerifyFn
) -> ClockValue:
    """Stateless check of a plain Update invocation"""
    _expect_kind(req, FrontendKind.UPDATE)
    check_inputs(req, verify_fn)
    check_invoker(req, perms)
    return _output(req)


def frontend_mono(
    req: ProveRequest,
    perms: PermissionTable,
    state: MonoState,
    verify_fn: VerifyFn,
) -> tuple[ClockValue, MonoState]:
    """Update check plus per-id monotonicity of the base counter"""
    _expect_kind(req, FrontendKind.MONO)
    check_inputs(req, verify_fn)
    check_invoker(req, perms)

    base_counter = req.base.value[req.entity_id]
    highest = state.get(req.entity_id)
    if base_counter < highest:
        raise StaleBase(
            f'base counter {base_counter} for {req.entity_id!r} below issued {highest}'
        )
    return _output(req), state.advanced(req.entity_id, base_counter + 1)


def frontend_app(
    req: ProveRequest, predicate: AppPredicate | None, verify_fn: VerifyFn
) -> ClockValue:
    """Pure application predicate over the request and its aux bytes"""
    _expect_kind(req, FrontendKind.APP)
    check_inputs(req, verify_fn)
    if predicate is None:
        raise AppRuleViolation('no application predicate installed')
    verdict = predicate(req, req.aux)
    if not verdict.allowed:
        raise AppRuleViolation(verdict.detail or 'predicate refused the request')
    return _output(req)


class FrontendSuite:
    """The frontends hosted by one validator, with that validator's MONO state"""

    def __init__(
        self,
        perms: PermissionTable,
        predicate: AppPredicate | None = None,
        mono_state: MonoState | None = None,
    ) -> None:
        self.perms = perms
        self.predicate = predicate
        self.mono_state = mono_state or MonoState()

    def evaluate(
        self, req: ProveRequest, verify_fn: VerifyFn, *, track_mono: bool = True
    ) -> ClockValue:
        """Run the frontend matching req.kind; MONO state advances on success"""
        try:
            return self._evaluate(req, verify_fn, track_mono)
        except FrontendRejected as e:
            logger.debug(
                'Frontend rejected request',
                kind=req.kind.value,
                entity_id=req.entity_id.hex(),
                code=e.code,
                detail=e.detail,
            )
            raise

    def _evaluate(
        self, req: ProveRequest, verify_fn: VerifyFn, track_mono: bool
    ) -> ClockValue:
        match req.kind:
            case FrontendKind.UPDATE:
                return frontend_update(req, self.perms, verify_fn)
            case FrontendKind.APP:
                return frontend_app(req, self.predicate, verify_fn)
            case FrontendKind.MONO:
                if not track_mono:
                    check_inputs(req, verify_fn)
                    check_invoker(req, self.perms)
                    return _output(req)
                value, self.mono_state = frontend_mono(
                    req, self.perms, self.mono_state, verify_fn
                )
                return value
        raise KindMismatch(f'unsupported kind {req.kind}')
