"""
Lock message encoding:

    kind u8 | sender | clock+proofs | target flag u8 [clock] |
    u16 entry count, (requester, clock)* | signature

Strings and the signature are u8-length-prefixed. The signature covers a
domain tag and every byte before it.
"""

from app.clock import read_clock, write_clock
from app.codec import ByteReader, ByteWriter, CodecError
from app.crypto import KeyPair, digest, verify_signature
from app.mutex.structures import AcquisitionProof, MsgKind, MutexMsg, ReplyEntry
from app.validators.codec import read_vlc, write_vlc


MUTEX_DOMAIN = b'CHRONO/MUTEX/v1'


def _write_body(writer: ByteWriter, msg: MutexMsg) -> ByteWriter:
    writer.u8(msg.kind.code).short_bytes(msg.sender.encode())
    write_vlc(writer, msg.clock)
    if msg.target is None:
        writer.u8(0)
    else:
        write_clock(writer.u8(1), msg.target)
    writer.u16(len(msg.entries))
    for entry in msg.entries:
        write_clock(writer.short_bytes(entry.requester.encode()), entry.clock)
    return writer


def signing_payload(msg: MutexMsg) -> bytes:
    return digest(MUTEX_DOMAIN, _write_body(ByteWriter(), msg).getvalue())


def sign_msg(msg: MutexMsg, signer: KeyPair) -> MutexMsg:
    return msg.model_copy(update={'signature': signer.sign(signing_payload(msg))})


def msg_signed_by(msg: MutexMsg, public_key: bytes) -> bool:
    return verify_signature(public_key, msg.signature, signing_payload(msg))


def write_msg(writer: ByteWriter, msg: MutexMsg) -> ByteWriter:
    return _write_body(writer, msg).short_bytes(msg.signature)


def read_msg(reader: ByteReader) -> MutexMsg:
    try:
        kind = MsgKind.from_code(reader.u8())
        sender = reader.short_bytes().decode()
        clock = read_vlc(reader)
        flag = reader.u8()
        if flag not in (0, 1):
            raise CodecError(f'bad target flag {flag}')
        target = read_clock(reader) if flag else None
        entries = tuple(
            ReplyEntry(requester=reader.short_bytes().decode(), clock=read_clock(reader))
            for _ in range(reader.u16())
        )
    except CodecError:
        raise
    except ValueError as e:
        # unknown kind codes and non-utf-8 names
        raise CodecError(str(e)) from e
    signature = reader.short_bytes()
    return MutexMsg.model_construct(
        kind=kind,
        sender=sender,
        clock=clock,
        target=target,
        entries=entries,
        signature=signature,
    )


def encode_msg(msg: MutexMsg) -> bytes:
    return write_msg(ByteWriter(), msg).getvalue()


def decode_msg(data: bytes) -> MutexMsg:
    reader = ByteReader(data)
    msg = read_msg(reader)
    reader.expect_end()
    return msg


def encode_proof(proof: AcquisitionProof) -> bytes:
    writer = ByteWriter()
    write_msg(writer, proof.request)
    for group in (proof.replies, proof.releases):
        writer.u16(len(group))
        for msg in group:
            write_msg(writer, msg)
    return writer.getvalue()


def decode_proof(data: bytes) -> AcquisitionProof:
    reader = ByteReader(data)
    request = read_msg(reader)
    replies = tuple(read_msg(reader) for _ in range(reader.u16()))
    releases = tuple(read_msg(reader) for _ in range(reader.u16()))
    reader.expect_end()
    return AcquisitionProof.model_construct(
        request=request, replies=replies, releases=releases
    )
