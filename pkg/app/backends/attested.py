"""
Attested backend: emulated enclaves bind a measurement of the frontend code
to every output clock. An attestation root endorses each enclave key together
with its measurement, standing in for the hardware vendor's certificate.

The enclaves run in-process; isolation is assumed, not enforced.
"""

from collections.abc import Sequence

from pydantic import BaseModel, ConfigDict, Field
import structlog

from app.backends.collector import ReplyCollector, contact_order
from app.backends.service import ProofBackend, VlcVerifier
from app.backends.structures import NodeReply, ProvedValue
from app.backends.transport import NodeTransport
from app.clock import ClockValue, serialize
from app.codec import ByteWriter
from app.crypto import KeyPair, digest, verify_signature
from app.settings import settings
from app.validators.errors import FrontendRejected
from app.validators.frontends import FrontendSuite
from app.validators.structures import (
    Attestation,
    AttestedProof,
    FrontendKind,
    Proof,
    ProveRequest,
)


logger = structlog.get_logger()

MEASURE_DOMAIN = b'CHRONO/MEASURE/v1'
ENDORSE_DOMAIN = b'CHRONO/ENDORSE/v1'
ATTEST_DOMAIN = b'CHRONO/ATTEST/v1'


def compute_measurement(
    version: str, kinds: Sequence[FrontendKind], app_name: str = ''
) -> bytes:
    """Digest of the frontend code identity: version string plus frontend config"""
    config = ','.join(sorted(kind.value for kind in kinds))
    identity = f'{version}|{config}|{app_name}'
    return digest(MEASURE_DOMAIN, identity.encode())


def user_data_for(kind: FrontendKind, value: ClockValue) -> bytes:
    return digest(ByteWriter().u8(kind.code).raw(serialize(value)).getvalue())


def endorsement_payload(enclave_key: bytes, measurement: bytes) -> bytes:
    return ENDORSE_DOMAIN + enclave_key + measurement


def attestation_payload(measurement: bytes, user_data: bytes) -> bytes:
    return ATTEST_DOMAIN + measurement + user_data


class AttestedConfig(BaseModel):
    """What a verifier pins: the root key, the expected measurement, the enclave count"""

    model_config = ConfigDict(frozen=True)

    root_key: bytes
    measurement: bytes
    enclaves: int = Field(ge=1)

    @property
    def majority(self) -> int:
        return self.enclaves // 2 + 1

    def required(self, kind: FrontendKind) -> int:
        """Any single enclave proves stateless kinds; MONO needs a simple majority"""
        return self.majority if kind.stateful else 1


def check_attestation(
    config: AttestedConfig, kind: FrontendKind, att: Attestation, value: ClockValue
) -> bool:
    if not verify_signature(
        config.root_key,
        att.endorsement,
        endorsement_payload(att.enclave_key, att.measurement),
    ):
        return False
    if att.measurement != config.measurement:
        return False
    if att.user_data != user_data_for(kind, value):
        return False
    return verify_signature(
        att.enclave_key,
        att.signature,
        attestation_payload(att.measurement, att.user_data),
    )


def attested_check(
    config: AttestedConfig, kind: FrontendKind, proof: Proof, value: ClockValue
) -> bool:
    """Endorsement, then measurement, then user data, from enough distinct enclaves"""
    if not isinstance(proof, AttestedProof) or proof.kind is not kind:
        return False
    keys = {att.enclave_key for att in proof.attestations}
    if len(keys) != len(proof.attestations) or len(keys) < config.required(kind):
        return False
    return all(check_attestation(config, kind, att, value) for att in proof.attestations)


class AttestationRoot:
    """Stand-in for the vendor key that certifies enclave keys"""

    def __init__(self, key: KeyPair) -> None:
        self.key = key

    @property
    def public_bytes(self) -> bytes:
        return self.key.public_bytes

    def endorse(self, enclave_key: bytes, measurement: bytes) -> bytes:
        return self.key.sign(endorsement_payload(enclave_key, measurement))


class Enclave:
    """Emulated trusted signer running the frontends under a fixed measurement"""

    def __init__(
        self,
        node_id: str,
        key: KeyPair,
        root: AttestationRoot,
        config: AttestedConfig,
        suite: FrontendSuite,
        kinds: Sequence[FrontendKind],
        measurement: bytes | None = None,
    ) -> None:
        self.node_id = node_id
        self.key = key
        self.config = config
        self.suite = suite
        self.measurement = measurement or config.measurement
        self.endorsement = root.endorse(key.public_bytes, self.measurement)
        self.online = True
        self.verify = VlcVerifier(kinds, self._check_input)

    def _check_input(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        return attested_check(self.config, kind, proof, value)

    def attest(self, kind: FrontendKind, value: ClockValue) -> Attestation:
        user_data = user_data_for(kind, value)
        return Attestation(
            enclave_key=self.key.public_bytes,
            endorsement=self.endorsement,
            measurement=self.measurement,
            user_data=user_data,
            signature=self.key.sign(attestation_payload(self.measurement, user_data)),
        )

    def handle_prove(self, req: ProveRequest) -> NodeReply | None:
        if not self.online:
            return None
        try:
            value = self.suite.evaluate(req, self.verify)
        except FrontendRejected as e:
            return NodeReply(
                node_id=self.node_id, reject_code=e.code, reject_detail=e.detail
            )
        return NodeReply(
            node_id=self.node_id, value=value, attestation=self.attest(req.kind, value)
        )


class AttestedBackend(ProofBackend):
    name = 'attested'

    def __init__(
        self,
        config: AttestedConfig,
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

    def _attestation_valid(self, req: ProveRequest, reply: NodeReply) -> bool:
        return reply.attestation is not None and check_attestation(
            self.config, req.kind, reply.attestation, reply.value
        )

    def prove(self, req: ProveRequest) -> ProvedValue:
        collector = ReplyCollector(
            self.transport,
            threshold=self.config.required(req.kind),
            f=self.config.enclaves - self.config.majority,
            reply_is_valid=self._attestation_valid,
            rtt_ticks=self.rtt_ticks,
            timeout_ticks=self.timeout_ticks,
        )
        try:
            value, replies = collector.collect(
                req, contact_order(self.transport.node_ids, req)
            )
        finally:
            self.last_cost_ticks = collector.cost_ticks

        attestations = tuple(
            reply.attestation for reply in sorted(replies, key=lambda r: r.node_id)
        )
        proof = AttestedProof(kind=req.kind, attestations=attestations)
        return ProvedValue(value=value, proof=proof)

    def check(self, kind: FrontendKind, proof: Proof, value: ClockValue) -> bool:
        return attested_check(self.config, kind, proof, value)

    def close(self) -> None:
        self.transport.close()
