class FrontendRejected(Exception):
    """A validator frontend refused to prove a clock update"""

    code = 'rejected'

    def __init__(self, detail: str = '') -> None:
        super().__init__(f'{self.code}: {detail}' if detail else self.code)
        self.detail = detail

    @staticmethod
    def from_code(code: str, detail: str = '') -> 'FrontendRejected':
        """Rebuild a rejection received over the wire"""
        for cls in FrontendRejected.__subclasses__():
            if cls.code == code:
                return cls(detail)
        return FrontendRejected(f'{code} {detail}'.strip())


class InvalidInputClock(FrontendRejected):
    """An input clock does not verify"""

    code = 'invalid-input-clock'


class PermissionDenied(FrontendRejected):
    """The invoker key holds no permission on the updated id"""

    code = 'permission-denied'


class BadSignature(FrontendRejected):
    """The invoker signature does not cover the request"""

    code = 'bad-signature'


class StaleBase(FrontendRejected):
    """The base counter is older than the highest one already issued"""

    code = 'stale-base'


class AppRuleViolation(FrontendRejected):
    """The application predicate refused the request"""

    code = 'app-rule-violation'


class KindMismatch(FrontendRejected):
    """The request was routed to a frontend of another kind"""

    code = 'kind-mismatch'


class PermissionFileError(ValueError):
    """The signed permission table is malformed or its signature is bad"""
