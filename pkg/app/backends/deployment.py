"""
Builds a complete in-process deployment (keys, permission table, validators or
enclaves, backend, clock service) from one declarative config. Keys derive from
the config seed, so two builds of the same config are byte-identical.
"""

from pydantic import BaseModel, ConfigDict, Field
import structlog

from app.backends.attested import (
    AttestationRoot,
    AttestedBackend,
    AttestedConfig,
    Enclave,
    compute_measurement,
)
from app.backends.null import NullBackend
from app.backends.quorum import QuorumBackend, QuorumConfig, ValidatorNode
from app.backends.service import ClockService, ProofBackend
from app.backends.structures import BackendName, FaultMode
from app.backends.transport import LocalNodeTransport, NodeTransport
from app.crypto import KeyPair
from app.settings import settings
from app.validators.frontends import FrontendSuite, predicates
from app.validators.structures import FrontendKind, PermissionTable, RangeGrant


logger = structlog.get_logger()


class RangeSpec(BaseModel):
    """Grant an entity's key on every id in [start, end)"""

    start: bytes = b''
    end: bytes = b''
    holder: str


class DeploymentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    backend: BackendName = Field(default_factory=lambda: BackendName(settings.backend))
    kinds: tuple[FrontendKind, ...] = (FrontendKind.UPDATE,)
    entities: tuple[str, ...] = Field(
        default=(), description='Names granted on their own id'
    )
    ranges: tuple[RangeSpec, ...] = ()
    n: int = Field(default_factory=lambda: settings.quorum_n, ge=1)
    f: int = Field(default_factory=lambda: settings.quorum_f, ge=0)
    enclaves: int = Field(default_factory=lambda: settings.attested_enclaves, ge=1)
    fault_modes: dict[str, FaultMode] = Field(default_factory=dict)
    predicate: str | None = None
    app_name: str = ''
    version: str = Field(default_factory=lambda: settings.attested_version)
    seed: str = 'chrono'
    timeout_ticks: int = Field(default_factory=lambda: settings.node_timeout_ticks)
    rtt_ticks: int = Field(default_factory=lambda: settings.node_rtt_ticks)


class Deployment:
    """Everything a simulation needs to mint and check verifiable clocks"""

    def __init__(
        self,
        config: DeploymentConfig,
        service: ClockService,
        signers: dict[str, KeyPair],
        perms: PermissionTable,
        handlers: list,
    ) -> None:
        self.config = config
        self.service = service
        self.signers = signers
        self.perms = perms
        self.handlers = handlers

    def signer(self, name: str) -> KeyPair:
        return self.signers[name]

    def handler(self, node_id: str):
        return next(h for h in self.handlers if h.node_id == node_id)


def entity_key(seed: str, name: str) -> KeyPair:
    return KeyPair.from_seed(f'{seed}/entity/{name}')


def validator_key(seed: str, node_id: str) -> KeyPair:
    return KeyPair.from_seed(f'{seed}/validator/{node_id}')


def root_key(seed: str) -> KeyPair:
    return KeyPair.from_seed(f'{seed}/attestation-root')


def build_permissions(config: DeploymentConfig, signers: dict[str, KeyPair]) -> PermissionTable:
    grants = {
        name.encode(): frozenset({signers[name].public_bytes}) for name in config.entities
    }
    ranges = tuple(
        RangeGrant(
            start=spec.start,
            end=spec.end,
            keys=frozenset({signers[spec.holder].public_bytes}),
        )
        for spec in config.ranges
    )
    return PermissionTable(grants=grants, ranges=ranges)


def _suite(config: DeploymentConfig, perms: PermissionTable) -> FrontendSuite:
    predicate = predicates.get(config.predicate) if config.predicate else None
    return FrontendSuite(perms, predicate=predicate)


def quorum_config(config: DeploymentConfig) -> QuorumConfig:
    registry = {
        f'v{i}': validator_key(config.seed, f'v{i}').public_bytes for i in range(config.n)
    }
    return QuorumConfig(n=config.n, f=config.f, registry=registry)


def attested_config(config: DeploymentConfig) -> AttestedConfig:
    return AttestedConfig(
        root_key=root_key(config.seed).public_bytes,
        measurement=compute_measurement(config.version, config.kinds, config.app_name),
        enclaves=config.enclaves,
    )


def build_handlers(config: DeploymentConfig, perms: PermissionTable) -> list:
    """Validator nodes or enclaves for the configured backend"""
    if config.backend is BackendName.QUORUM:
        qc = quorum_config(config)
        return [
            ValidatorNode(
                node_id,
                validator_key(config.seed, node_id),
                qc,
                _suite(config, perms),
                config.kinds,
                fault_mode=config.fault_modes.get(node_id, FaultMode.HONEST),
            )
            for node_id in qc.node_ids
        ]
    if config.backend is BackendName.ATTESTED:
        ac = attested_config(config)
        root = AttestationRoot(root_key(config.seed))
        return [
            Enclave(
                f'e{i}',
                KeyPair.from_seed(f'{config.seed}/enclave/e{i}'),
                root,
                ac,
                _suite(config, perms),
                config.kinds,
            )
            for i in range(config.enclaves)
        ]
    return []


def build_backend(config: DeploymentConfig, transport: NodeTransport) -> ProofBackend:
    match config.backend:
        case BackendName.QUORUM:
            return QuorumBackend(
                quorum_config(config), transport, config.timeout_ticks, config.rtt_ticks
            )
        case BackendName.ATTESTED:
            return AttestedBackend(
                attested_config(config), transport, config.timeout_ticks, config.rtt_ticks
            )
        case BackendName.NONE:
            return NullBackend()
    raise ValueError(f'unknown backend {config.backend}')


def build_deployment(config: DeploymentConfig) -> Deployment:
    names = {*config.entities, *(spec.holder for spec in config.ranges)}
    signers = {name: entity_key(config.seed, name) for name in sorted(names)}
    perms = build_permissions(config, signers)
    handlers = build_handlers(config, perms)
    backend = build_backend(config, LocalNodeTransport(handlers))
    service = ClockService(backend, config.kinds)
    logger.debug(
        'Deployment built',
        backend=config.backend.value,
        kinds=[kind.value for kind in config.kinds],
        entities=len(signers),
        validators=len(handlers),
    )
    return Deployment(config, service, signers, perms, handlers)
