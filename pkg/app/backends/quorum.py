"""
Quorum-certificate backend: t-of-N validator signatures over the output clock.
"""

from collections.abc import Sequence
import hashlib
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator
import structlog

from app.backends.collector import ReplyCollector, contact_order
from app.backends.service import ProofBackend, VlcVerifier
from app.backends.structures import FaultMode, NodeReply, ProvedValue
from app.backends.transport import NodeTransport
from app.clock import ClockValue, serialize, update_value
from app.codec import ByteWriter
from app.crypto import KeyPair, verify_signature
from app.settings import settings
from app.validators.errors import FrontendRejected
from app.validators.frontends import FrontendSuite
from app.validators.structures import FrontendKind, Proof, ProveRequest, QuorumCert


logger = structlog.get_logger()

QC_DOMAIN = b'CHRONO/QC/v1'


def value_digest(value: ClockValue) -> bytes:
    return hashlib.sha256(serialize(value)).digest()


def sign_payload(kind: FrontendKind, value: ClockValue) -> bytes:
    """SHA-256 of domain tag, kind byte and canonical clock bytes"""
    data = ByteWriter().raw(QC_DOMAIN).u8(kind.code).raw(serialize(value)).getvalue()
    return hashlib.sha256(data).digest()


class QuorumConfig(BaseModel):
    """Validator registry and thresholds of one deployment"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, description='Number of validator nodes')
    f: int = Field(ge=0, description='Maximum number of Byzantine nodes')
    registry: dict[str, bytes] = Field(description='Node id to Ed25519 public key')

    @model_validator(mode='after')
    def _check_sizes(self) -> 'QuorumConfig':
        if len(self.registry) != self.n:
            raise ValueError(f'registry has {len(self.registry)} nodes, expected {self.n}')
        if self.n < self.f + 1:
            raise ValueError(f'n={self.n} cannot tolerate f={self.f}')
        return self

    @property
    def t_stateless(self) -> int:
        return self.f + 1

    @property
    def t_stateful(self) -> int:
        return -(-(self.n + self.f + 1) // 2)

    def threshold(self, kind: FrontendKind) -> int:
        return self.t_stateful if kind.stateful else self.t_stateless

    @property
    def node_ids(self) -> list[str]:
        return sorted(self.registry)

    def to_json_obj(self) -> dict[str, Any]:
        return {
            'n': self.n,
            'f': self.f,
            'registry': {k: v.hex() for k, v in sorted(self.registry.items())},
        }

    @classmethod
    def from_json_obj(cls, data: dict[str, Any]) -> 'QuorumConfig':
        return cls(
            n=data['n'],
            f=data['f'],
            registry={k: bytes.fromhex(v) for k, v in data['registry'].items()},
        )


def check_cert(config: QuorumConfig, cert: Proof, value: ClockValue) -> bool:
    """Threshold met, value hash matches, every signature valid and registered"""
    if not isinstance(cert, QuorumCert):
        return False
    if len(cert.sigs) < config.threshold(cert.kind):
        return False
    if cert.value_hash != value_digest(value):
        return False
    payload = sign_payload(cert.kind, value)
    for node_id, signature in cert.sigs.items():
        public_key = config.registry.get(node_id)
        if public_key is None or not verify_signature(public_key, signature, payload):
            return False
    return True


class ValidatorNode:
    """One validator: runs the frontends and signs the output clock"""

    def __init__(
        self,
        node_id: str,
        key: KeyPair,
        config: QuorumConfig,
        suite: FrontendSuite,
        kinds: Sequence[FrontendKind],
        fault_mode: FaultMode = FaultMode.HONEST,
    ) -> None:
        self.node_id = node_id
        self.key = key
        self.config = config
        self.suite = suite
        self.fault_mode = fault_mode
        self.verify = VlcVerifier(kinds, self._check_input)

    def _check_input(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        return proof.kind is kind and check_cert(self.config, proof, value)

    def handle_prove(self, req: ProveRequest) -> NodeReply | None:
        if self.fault_mode is FaultMode.SILENT:
            return None
        track_mono = self.fault_mode is not FaultMode.STALE_STATE
        try:
            value = self.suite.evaluate(req, self.verify, track_mono=track_mono)
        except FrontendRejected as e:
            return NodeReply(
                node_id=self.node_id, reject_code=e.code, reject_detail=e.detail
            )

        if self._lies_to(req):
            value = update_value(req.entity_id, value)
        signature = self.key.sign(sign_payload(req.kind, value))
        return NodeReply(node_id=self.node_id, value=value, signature=signature)

    def _lies_to(self, req: ProveRequest) -> bool:
        if self.fault_mode is FaultMode.WRONG_VALUE:
            return True
        # Equivocating nodes answer differently depending on the client
        return self.fault_mode is FaultMode.EQUIVOCATE and req.invoker[0] % 2 == 1


class QuorumBackend(ProofBackend):
    name = 'quorum'

    def __init__(
        self,
        config: QuorumConfig,
        transport: NodeTransport,
        timeout_ticks: int | None = None,
        rtt_ticks: int | None = None,
    ) -> None:
        super().__init__()
        self.config = config
        self.transport = transport
        self.timeout_ticks = (
            settings.node_timeout_ticks if timeout_ticks is None else timeout_ticks
        )
        self.rtt_ticks = settings.node_rtt_ticks if rtt_ticks is None else rtt_ticks

    def _partial_sig_valid(self, req: ProveRequest, reply: NodeReply) -> bool:
        public_key = self.config.registry.get(reply.node_id)
        return public_key is not None and verify_signature(
            public_key, reply.signature, sign_payload(req.kind, reply.value)
        )

    def prove(self, req: ProveRequest) -> ProvedValue:
        """Collect t matching partial signatures, widening on mismatch or silence"""
        collector = ReplyCollector(
            self.transport,
            threshold=self.config.threshold(req.kind),
            f=self.config.f,
            reply_is_valid=self._partial_sig_valid,
            rtt_ticks=self.rtt_ticks,
            timeout_ticks=self.timeout_ticks,
        )
        try:
            value, replies = collector.collect(
                req, contact_order(self.config.node_ids, req)
            )
        finally:
            self.last_cost_ticks = collector.cost_ticks

        sigs = {reply.node_id: reply.signature for reply in replies}
        cert = QuorumCert(
            kind=req.kind,
            value_hash=value_digest(value),
            sigs=dict(sorted(sigs.items())),
        )
        return ProvedValue(value=value, proof=cert)

    def check(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        return proof.kind is kind and check_cert(self.config, proof, value)

    def close(self) -> None:
        self.transport.close()
