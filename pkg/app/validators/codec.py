"""
Binary encoding of proofs, Vlcs and prove requests
"""

from pydantic import ValidationError

from app.clock import read_clock, write_clock
from app.codec import ByteReader, ByteWriter, CodecError
from app.validators.structures import (
    Attestation,
    AttestedProof,
    FrontendKind,
    NullProof,
    Proof,
    ProveRequest,
    QuorumCert,
    Vlc,
)


PROOF_TAG_NONE = 0
PROOF_TAG_QUORUM = 1
PROOF_TAG_ATTESTED = 2


def _read_kind(reader: ByteReader) -> FrontendKind:
    try:
        return FrontendKind.from_code(reader.u8())
    except ValueError as e:
        raise CodecError(str(e))


def write_proof(writer: ByteWriter, proof: Proof) -> ByteWriter:
    match proof:
        case QuorumCert():
            writer.u8(PROOF_TAG_QUORUM).u8(proof.kind.code)
            writer.short_bytes(proof.value_hash).u8(len(proof.sigs))
            for node_id in sorted(proof.sigs):
                writer.short_bytes(node_id.encode()).short_bytes(proof.sigs[node_id])
        case AttestedProof():
            writer.u8(PROOF_TAG_ATTESTED).u8(proof.kind.code)
            writer.u8(len(proof.attestations))
            for att in proof.attestations:
                writer.short_bytes(att.enclave_key).short_bytes(att.endorsement)
                writer.short_bytes(att.measurement).short_bytes(att.user_data)
                writer.short_bytes(att.signature)
        case NullProof():
            writer.u8(PROOF_TAG_NONE).u8(proof.kind.code)
        case _:
            raise CodecError(f'unsupported proof type {type(proof).__name__}')
    return writer


def read_proof(reader: ByteReader) -> Proof:
    tag = reader.u8()
    kind = _read_kind(reader)
    try:
        if tag == PROOF_TAG_QUORUM:
            value_hash = reader.short_bytes()
            sigs: dict[str, bytes] = {}
            for _ in range(reader.u8()):
                node_id = reader.short_bytes().decode()
                if node_id in sigs:
                    raise CodecError(f'duplicate signer {node_id}')
                sigs[node_id] = reader.short_bytes()
            return QuorumCert(kind=kind, value_hash=value_hash, sigs=sigs)
        if tag == PROOF_TAG_ATTESTED:
            attestations = tuple(
                Attestation(
                    enclave_key=reader.short_bytes(),
                    endorsement=reader.short_bytes(),
                    measurement=reader.short_bytes(),
                    user_data=reader.short_bytes(),
                    signature=reader.short_bytes(),
                )
                for _ in range(reader.u8())
            )
            return AttestedProof(kind=kind, attestations=attestations)
        if tag == PROOF_TAG_NONE:
            return NullProof(kind=kind)
    except (UnicodeDecodeError, ValidationError) as e:
        raise CodecError(f'malformed proof: {e}')
    raise CodecError(f'unknown proof tag {tag}')


def write_vlc(writer: ByteWriter, vlc: Vlc) -> ByteWriter:
    write_clock(writer, vlc.value)
    writer.u8(len(vlc.proofs))
    for kind in sorted(vlc.proofs, key=lambda k: k.code):
        write_proof(writer, vlc.proofs[kind])
    return writer


def read_vlc(reader: ByteReader) -> Vlc:
    value = read_clock(reader)
    proofs: dict[FrontendKind, Proof] = {}
    for _ in range(reader.u8()):
        proof = read_proof(reader)
        if proof.kind in proofs:
            raise CodecError(f'duplicate {proof.kind.value} proof')
        proofs[proof.kind] = proof
    return Vlc.model_construct(value=value, proofs=proofs)


def encode_vlc(vlc: Vlc) -> bytes:
    return write_vlc(ByteWriter(), vlc).getvalue()


def decode_vlc(data: bytes) -> Vlc:
    reader = ByteReader(data)
    vlc = read_vlc(reader)
    reader.expect_end()
    return vlc


def encode_request(req: ProveRequest) -> bytes:
    writer = ByteWriter().u8(req.kind.code).short_bytes(req.entity_id)
    write_vlc(writer, req.base)
    writer.u16(len(req.merged))
    for vlc in req.merged:
        write_vlc(writer, vlc)
    writer.blob(req.aux).short_bytes(req.invoker).short_bytes(req.invoker_sig)
    return writer.getvalue()


def decode_request(data: bytes) -> ProveRequest:
    reader = ByteReader(data)
    kind = _read_kind(reader)
    entity_id = reader.short_bytes()
    base = read_vlc(reader)
    merged = tuple(read_vlc(reader) for _ in range(reader.u16()))
    aux = reader.blob()
    invoker = reader.short_bytes()
    invoker_sig = reader.short_bytes()
    reader.expect_end()
    try:
        return ProveRequest(
            kind=kind,
            entity_id=entity_id,
            base=base,
            merged=merged,
            aux=aux,
            invoker=invoker,
            invoker_sig=invoker_sig,
        )
    except ValidationError as e:
        raise CodecError(f'malformed prove request: {e}')
