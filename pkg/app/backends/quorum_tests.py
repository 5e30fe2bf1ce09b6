import itertools

import pytest

from app.backends.deployment import (
    DeploymentConfig,
    build_deployment,
    quorum_config,
    validator_key,
)
from app.backends.errors import InsufficientQuorum
from app.backends.quorum import (
    QuorumConfig,
    ValidatorNode,
    check_cert,
    sign_payload,
)
from app.backends.structures import BackendName, FaultMode
from app.clock import ClockValue
from app.crypto import KeyPair
from app.validators.errors import PermissionDenied, StaleBase
from app.validators.frontends import FrontendSuite
from app.validators.structures import FrontendKind, ProveRequest, QuorumCert, Vlc


UPDATE = FrontendKind.UPDATE
MONO = FrontendKind.MONO


def deploy(n=4, f=1, kinds=(UPDATE,), fault_modes=None, entities=('P1', 'P2')):
    return build_deployment(
        DeploymentConfig(
            backend=BackendName.QUORUM,
            kinds=kinds,
            entities=entities,
            n=n,
            f=f,
            fault_modes=fault_modes or {},
        )
    )


class TestThresholds:
    @pytest.mark.unit
    @pytest.mark.parametrize(
        'n, f, stateless, stateful',
        [(5, 1, 2, 4), (4, 1, 2, 3), (1, 0, 1, 1), (7, 2, 3, 5)],
    )
    def test_thresholds(self, n, f, stateless, stateful):
        registry = {f'v{i}': bytes(32) for i in range(n)}
        config = QuorumConfig(n=n, f=f, registry=registry)
        assert config.t_stateless == stateless
        assert config.t_stateful == stateful
        assert config.threshold(UPDATE) == stateless
        assert config.threshold(MONO) == stateful

    @pytest.mark.unit
    @pytest.mark.parametrize('n, f, overlap', [(4, 1, 2), (5, 1, 3)])
    def test_stateful_quorums_share_an_honest_node(self, n, f, overlap):
        registry = {f'v{i}': bytes(32) for i in range(n)}
        t = QuorumConfig(n=n, f=f, registry=registry).t_stateful
        assert 2 * t - n == overlap
        assert 2 * t - n >= f + 1

    @pytest.mark.unit
    def test_registry_size_must_match(self):
        with pytest.raises(ValueError):
            QuorumConfig(n=3, f=1, registry={'v0': bytes(32)})

    @pytest.mark.unit
    def test_json_round_trip(self):
        config = quorum_config(DeploymentConfig(backend=BackendName.QUORUM, n=3, f=1))
        assert QuorumConfig.from_json_obj(config.to_json_obj()) == config


class TestClientProve:
    @pytest.mark.unit
    def test_stateless_cert_has_exactly_f_plus_one_signatures(self):
        deployment = deploy(n=5, f=1, fault_modes={'v0': FaultMode.SILENT})
        service = deployment.service
        for _ in range(5):
            vlc = service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
            assert len(vlc.proofs[UPDATE].sigs) == 2
            assert 'v0' not in vlc.proofs[UPDATE].sigs
            assert service.verify(vlc)

    @pytest.mark.unit
    def test_stateful_cert_with_one_silent_node(self):
        deployment = deploy(n=5, f=1, kinds=(MONO,), fault_modes={'v3': FaultMode.SILENT})
        vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
        assert len(vlc.proofs[MONO].sigs) == 4
        assert deployment.service.verify(vlc)

    @pytest.mark.unit
    def test_single_node_deployment(self):
        deployment = deploy(n=1, f=0)
        vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
        assert list(vlc.proofs[UPDATE].sigs) == ['v0']

    @pytest.mark.unit
    def test_silent_nodes_cost_timeouts(self):
        deployment = deploy(n=4, f=1, fault_modes={'v0': FaultMode.SILENT, 'v1': FaultMode.SILENT})
        backend = deployment.service.backend
        for _ in range(4):
            deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
            assert backend.last_cost_ticks >= backend.rtt_ticks

    @pytest.mark.unit
    @pytest.mark.parametrize(
        'mode', [FaultMode.WRONG_VALUE, FaultMode.EQUIVOCATE, FaultMode.STALE_STATE]
    )
    def test_faulty_node_never_changes_the_certified_value(self, mode):
        for node_id in ('v0', 'v1', 'v2', 'v3'):
            deployment = deploy(n=4, f=1, kinds=(UPDATE, MONO), fault_modes={node_id: mode})
            current = Vlc.genesis()
            for step in range(1, 4):
                current = deployment.service.update(
                    deployment.signer('P1'), 'P1', current
                )
                assert current.value == ClockValue.of({'P1': step})
                assert deployment.service.verify(current)

    @pytest.mark.unit
    def test_too_many_silent_nodes(self):
        deployment = deploy(
            n=4, f=1, fault_modes={f'v{i}': FaultMode.SILENT for i in range(3)}
        )
        with pytest.raises(InsufficientQuorum):
            deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())

    @pytest.mark.unit
    def test_colluding_wrong_value_nodes_cannot_reach_threshold(self):
        # f wrong-value nodes agree on the same corrupted clock but stay below f+1
        deployment = deploy(
            n=4, f=1, fault_modes={'v0': FaultMode.WRONG_VALUE, 'v1': FaultMode.SILENT}
        )
        vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
        assert vlc.value == ClockValue.of({'P1': 1})

    @pytest.mark.unit
    def test_rejection_passes_through(self):
        deployment = deploy()
        with pytest.raises(PermissionDenied):
            deployment.service.update(KeyPair.from_seed('mallory'), 'P1', Vlc.genesis())

    @pytest.mark.unit
    def test_stale_base_passes_through(self):
        deployment = deploy(kinds=(MONO,))
        signer = deployment.signer('P2')
        first = deployment.service.update(signer, 'P2', Vlc.genesis())
        deployment.service.update(signer, 'P2', first)
        with pytest.raises(StaleBase):
            deployment.service.update(signer, 'P2', Vlc.genesis())


class TestCheckCert:
    @pytest.fixture
    def f_setup(self):
        deployment = deploy(n=5, f=1)
        vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
        return quorum_config(deployment.config), vlc

    @pytest.mark.unit
    def test_valid_cert(self, f_setup):
        config, vlc = f_setup
        assert check_cert(config, vlc.proofs[UPDATE], vlc.value)

    @pytest.mark.unit
    def test_forged_signature_below_threshold(self, f_setup):
        config, vlc = f_setup
        cert = vlc.proofs[UPDATE]
        victim = sorted(cert.sigs)[0]
        forged = KeyPair.from_seed('forger').sign(sign_payload(UPDATE, vlc.value))
        tampered = cert.model_copy(update={'sigs': {**cert.sigs, victim: forged}})
        assert not check_cert(config, tampered, vlc.value)

    @pytest.mark.unit
    def test_value_hash_mismatch(self, f_setup):
        config, vlc = f_setup
        assert not check_cert(config, vlc.proofs[UPDATE], ClockValue.of({'P1': 2}))

    @pytest.mark.unit
    def test_unregistered_signer(self, f_setup):
        config, vlc = f_setup
        cert = vlc.proofs[UPDATE]
        outsider = KeyPair.from_seed('outsider').sign(sign_payload(UPDATE, vlc.value))
        padded = cert.model_copy(update={'sigs': {'v9': outsider}})
        assert not check_cert(config, padded, vlc.value)

    @pytest.mark.unit
    def test_kind_changes_threshold_and_payload(self, f_setup):
        config, vlc = f_setup
        relabeled = vlc.proofs[UPDATE].model_copy(update={'kind': MONO})
        assert not check_cert(config, relabeled, vlc.value)

    @pytest.mark.unit
    def test_not_a_quorum_cert(self, f_setup):
        config, vlc = f_setup
        assert not check_cert(config, None, vlc.value)


def _fresh_nodes(deployment, byzantine: str) -> dict[str, ValidatorNode]:
    config = quorum_config(deployment.config)
    return {
        node_id: ValidatorNode(
            node_id,
            validator_key(deployment.config.seed, node_id),
            config,
            FrontendSuite(deployment.perms),
            deployment.config.kinds,
            fault_mode=FaultMode.STALE_STATE if node_id == byzantine else FaultMode.HONEST,
        )
        for node_id in config.node_ids
    }


@pytest.mark.unit
@pytest.mark.parametrize('n', [4, 5])
def test_two_concurrent_mono_certs_never_both_succeed(n):
    deployment = deploy(n=n, f=1, kinds=(MONO,))
    signer = deployment.signer('P1')
    other = deployment.service.update(deployment.signer('P2'), 'P2', Vlc.genesis())
    fork_a = ProveRequest.build(MONO, 'P1', Vlc.genesis(), [], signer)
    fork_b = ProveRequest.build(MONO, 'P1', Vlc.genesis(), [other], signer)
    t = quorum_config(deployment.config).t_stateful

    # Per node: which forks it sees and in which order
    orders = [(fork_a,), (fork_b,), (fork_a, fork_b), (fork_b, fork_a)]
    successes = 0
    for schedule in itertools.product(orders, repeat=n):
        nodes = _fresh_nodes(deployment, byzantine='v0')
        signed = {id(fork_a): 0, id(fork_b): 0}
        for node, seen in zip(nodes.values(), schedule, strict=True):
            for req in seen:
                reply = node.handle_prove(req)
                if reply is not None and not reply.rejected:
                    signed[id(req)] += 1
        both = signed[id(fork_a)] >= t and signed[id(fork_b)] >= t
        assert not both, schedule
        successes += signed[id(fork_a)] >= t or signed[id(fork_b)] >= t
    assert successes > 0


@pytest.mark.unit
def test_cert_sigs_are_sorted_by_node_id():
    deployment = deploy(n=5, f=2, kinds=(MONO,))
    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    cert = vlc.proofs[MONO]
    assert isinstance(cert, QuorumCert)
    assert list(cert.sigs) == sorted(cert.sigs)
