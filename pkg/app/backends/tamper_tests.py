import random

import pytest

from app.backends.deployment import DeploymentConfig, build_deployment
from app.backends.structures import BackendName
from app.codec import CodecError
from app.validators.codec import decode_vlc, encode_vlc
from app.validators.structures import FrontendKind


MUTATIONS = 10_000


def flip_bit(data: bytes, position: int) -> bytes:
    mutated = bytearray(data)
    mutated[position // 8] ^= 1 << (position % 8)
    return bytes(mutated)


@pytest.mark.slow
@pytest.mark.parametrize('backend', [BackendName.QUORUM, BackendName.ATTESTED])
@pytest.mark.parametrize('kind', [FrontendKind.UPDATE, FrontendKind.MONO])
def test_single_bit_mutations_never_verify(backend, kind):
    deployment = build_deployment(
        DeploymentConfig(backend=backend, kinds=(kind,), entities=('P1', 'P2'), n=5, f=1)
    )
    service = deployment.service
    p1 = service.update(deployment.signer('P1'), 'P1', service.genesis())
    vlc = service.update(deployment.signer('P2'), 'P2', service.genesis(), [p1])
    encoded = encode_vlc(vlc)
    assert service.verify(decode_vlc(encoded))

    rng = random.Random(f'{backend.value}-{kind.value}')
    false_accepts = []
    for _ in range(MUTATIONS // 4):
        position = rng.randrange(len(encoded) * 8)
        try:
            candidate = decode_vlc(flip_bit(encoded, position))
        except CodecError:
            continue
        if service.verify(candidate):
            false_accepts.append(position)

    assert false_accepts == []
