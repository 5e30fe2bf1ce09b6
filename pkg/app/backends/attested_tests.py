import pytest

from app.backends.attested import (
    AttestationRoot,
    AttestedConfig,
    Enclave,
    attested_check,
    compute_measurement,
    user_data_for,
)
from app.backends.deployment import (
    DeploymentConfig,
    attested_config,
    build_deployment,
)
from app.backends.errors import InsufficientQuorum
from app.backends.structures import BackendName
from app.clock import ClockValue
from app.crypto import KeyPair
from app.validators.errors import InvalidInputClock, StaleBase
from app.validators.frontends import FrontendSuite
from app.validators.structures import AttestedProof, FrontendKind, ProveRequest, Vlc


UPDATE = FrontendKind.UPDATE
MONO = FrontendKind.MONO


def deploy(kinds=(UPDATE,), enclaves=3):
    return build_deployment(
        DeploymentConfig(
            backend=BackendName.ATTESTED,
            kinds=kinds,
            entities=('P1', 'P2'),
            enclaves=enclaves,
        )
    )


@pytest.mark.unit
def test_stateless_proof_has_one_attestation_with_expected_measurement():
    deployment = deploy()
    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    proof = vlc.proofs[UPDATE]
    assert isinstance(proof, AttestedProof)
    assert len(proof.attestations) == 1
    assert proof.attestations[0].measurement == attested_config(
        deployment.config
    ).measurement
    assert deployment.service.verify(vlc)


@pytest.mark.unit
def test_mono_needs_a_majority_of_enclaves():
    deployment = deploy(kinds=(MONO,), enclaves=3)
    config = attested_config(deployment.config)
    assert config.required(MONO) == 2
    assert config.required(UPDATE) == 1

    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    assert len(vlc.proofs[MONO].attestations) == 2

    single = vlc.proofs[MONO].model_copy(
        update={'attestations': vlc.proofs[MONO].attestations[:1]}
    )
    assert not attested_check(config, MONO, single, vlc.value)


@pytest.mark.unit
def test_mono_survives_one_offline_enclave_but_not_two():
    deployment = deploy(kinds=(MONO,), enclaves=3)
    deployment.handler('e0').online = False
    current = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    assert deployment.service.verify(current)

    deployment.handler('e1').online = False
    with pytest.raises(InsufficientQuorum):
        deployment.service.update(deployment.signer('P1'), 'P1', current)


@pytest.mark.unit
def test_mono_fork_is_rejected():
    deployment = deploy(kinds=(MONO,))
    signer = deployment.signer('P2')
    first = deployment.service.update(signer, 'P2', Vlc.genesis())
    deployment.service.update(signer, 'P2', first)
    with pytest.raises(StaleBase):
        deployment.service.update(signer, 'P2', first)


@pytest.mark.unit
def test_measurement_mismatch_fails_check():
    deployment = deploy()
    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    config = attested_config(deployment.config)
    other = config.model_copy(
        update={'measurement': compute_measurement('chrono-frontend/0.9', [UPDATE])}
    )
    assert not attested_check(other, UPDATE, vlc.proofs[UPDATE], vlc.value)


@pytest.mark.unit
def test_input_from_foreign_measurement_is_rejected():
    deployment = deploy()
    config = attested_config(deployment.config)
    rogue = Enclave(
        'rogue',
        KeyPair.from_seed('rogue-enclave'),
        AttestationRoot(KeyPair.from_seed('chrono/attestation-root')),
        config,
        FrontendSuite(deployment.perms),
        [UPDATE],
        measurement=compute_measurement('patched-frontend', [UPDATE]),
    )
    req = ProveRequest.build(UPDATE, 'P2', Vlc.genesis(), [], deployment.signer('P2'))
    reply = rogue.handle_prove(req)
    foreign = Vlc(
        value=reply.value,
        proofs={UPDATE: AttestedProof(kind=UPDATE, attestations=(reply.attestation,))},
    )
    assert not deployment.service.verify(foreign)

    honest = deployment.handler('e0')
    merged = ProveRequest.build(
        UPDATE, 'P1', Vlc.genesis(), [foreign], deployment.signer('P1')
    )
    rejected = honest.handle_prove(merged)
    assert rejected.reject_code == InvalidInputClock.code

    with pytest.raises(InvalidInputClock):
        deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis(), [foreign])


@pytest.mark.unit
def test_forged_signature_fails_check():
    deployment = deploy()
    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    config = attested_config(deployment.config)
    att = vlc.proofs[UPDATE].attestations[0]
    forged = att.model_copy(update={'signature': bytes(64)})
    proof = AttestedProof(kind=UPDATE, attestations=(forged,))
    assert not attested_check(config, UPDATE, proof, vlc.value)


@pytest.mark.unit
def test_enclave_endorsed_by_another_root_fails_check():
    deployment = deploy()
    config = attested_config(deployment.config)
    impostor_root = AttestationRoot(KeyPair.from_seed('impostor-root'))
    impostor = Enclave(
        'impostor',
        KeyPair.from_seed('impostor-enclave'),
        impostor_root,
        config,
        FrontendSuite(deployment.perms),
        [UPDATE],
    )
    value = ClockValue.of({'P1': 1})
    proof = AttestedProof(kind=UPDATE, attestations=(impostor.attest(UPDATE, value),))
    assert not attested_check(config, UPDATE, proof, value)


@pytest.mark.unit
def test_user_data_binds_kind():
    value = ClockValue.of({'P1': 1})
    assert user_data_for(UPDATE, value) != user_data_for(MONO, value)


@pytest.mark.unit
def test_duplicate_enclave_attestations_do_not_count_twice():
    deployment = deploy(kinds=(MONO,))
    vlc = deployment.service.update(deployment.signer('P1'), 'P1', Vlc.genesis())
    config = attested_config(deployment.config)
    first = vlc.proofs[MONO].attestations[0]
    doubled = AttestedProof(kind=MONO, attestations=(first, first))
    assert not attested_check(config, MONO, doubled, vlc.value)


@pytest.mark.unit
def test_measurement_depends_on_frontend_config():
    assert compute_measurement('v1', [UPDATE]) != compute_measurement('v1', [UPDATE, MONO])
    assert compute_measurement('v1', [MONO, UPDATE]) == compute_measurement('v1', [UPDATE, MONO])
    assert isinstance(
        AttestedConfig(root_key=bytes(32), measurement=b'm', enclaves=5).majority, int
    )
