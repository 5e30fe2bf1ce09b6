from app.backends.service import ProofBackend
from app.backends.structures import ProvedValue
from app.clock import ClockValue, update_value
from app.validators.structures import FrontendKind, NullProof, Proof, ProveRequest


class NullBackend(ProofBackend):
    """Unsafe baseline: no frontend runs, every proof checks"""

    name = 'none'

    def prove(self, req: ProveRequest) -> ProvedValue:
        value = update_value(
            req.entity_id, req.base.value, [vlc.value for vlc in req.merged]
        )
        self.last_cost_ticks = 0
        return ProvedValue(value=value, proof=NullProof(kind=req.kind))

    def check(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        return True
