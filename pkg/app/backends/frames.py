"""
Validator wire protocol. Every frame is a u32 big-endian length followed by a
type byte and the body:

    PROVE  encoded prove request
    SIG    node id, canonical clock, signature
    REJECT node id, reject code, detail
    ATTEST node id, canonical clock, attestation fields
"""

import asyncio
from enum import IntEnum
import struct

from pydantic import ValidationError

from app.backends.structures import NodeReply
from app.clock import read_clock, write_clock
from app.codec import ByteReader, ByteWriter, CodecError
from app.validators.codec import decode_request, encode_request
from app.validators.structures import Attestation, ProveRequest


MAX_FRAME_BYTES = 16 * 1024 * 1024


class FrameType(IntEnum):
    PROVE = 1
    SIG = 2
    REJECT = 3
    ATTEST = 4


def encode_frame(frame_type: FrameType, body: bytes) -> bytes:
    return struct.pack('>IB', len(body) + 1, frame_type) + body


def _split(payload: bytes) -> tuple[FrameType, bytes]:
    if not payload:
        raise CodecError('empty frame')
    try:
        return FrameType(payload[0]), payload[1:]
    except ValueError:
        raise CodecError(f'unknown frame type {payload[0]}')


def encode_prove(req: ProveRequest) -> bytes:
    return encode_frame(FrameType.PROVE, encode_request(req))


def encode_reply(reply: NodeReply) -> bytes:
    writer = ByteWriter().short_bytes(reply.node_id.encode())
    if reply.rejected:
        writer.short_bytes(reply.reject_code.encode()).blob(reply.reject_detail.encode())
        return encode_frame(FrameType.REJECT, writer.getvalue())

    write_clock(writer, reply.value)
    if reply.attestation is not None:
        att = reply.attestation
        writer.short_bytes(att.enclave_key).short_bytes(att.endorsement)
        writer.short_bytes(att.measurement).short_bytes(att.user_data)
        writer.short_bytes(att.signature)
        return encode_frame(FrameType.ATTEST, writer.getvalue())

    writer.short_bytes(reply.signature)
    return encode_frame(FrameType.SIG, writer.getvalue())


def decode_reply(frame_type: FrameType, body: bytes) -> NodeReply:
    reader = ByteReader(body)
    try:
        node_id = reader.short_bytes().decode()
        if frame_type is FrameType.REJECT:
            code = reader.short_bytes().decode()
            detail = reader.blob().decode()
            reader.expect_end()
            return NodeReply(node_id=node_id, reject_code=code, reject_detail=detail)

        value = read_clock(reader)
        if frame_type is FrameType.ATTEST:
            attestation = Attestation(
                enclave_key=reader.short_bytes(),
                endorsement=reader.short_bytes(),
                measurement=reader.short_bytes(),
                user_data=reader.short_bytes(),
                signature=reader.short_bytes(),
            )
            reader.expect_end()
            return NodeReply(node_id=node_id, value=value, attestation=attestation)
        if frame_type is FrameType.SIG:
            signature = reader.short_bytes()
            reader.expect_end()
            return NodeReply(node_id=node_id, value=value, signature=signature)
    except (UnicodeDecodeError, ValidationError) as e:
        raise CodecError(f'malformed reply frame: {e}')
    raise CodecError(f'unexpected reply frame {frame_type.name}')


def decode_prove(frame_type: FrameType, body: bytes) -> ProveRequest:
    if frame_type is not FrameType.PROVE:
        raise CodecError(f'expected PROVE frame, got {frame_type.name}')
    return decode_request(body)


async def read_frame(reader: asyncio.StreamReader) -> tuple[FrameType, bytes]:
    (length,) = struct.unpack('>I', await reader.readexactly(4))
    if length > MAX_FRAME_BYTES:
        raise CodecError(f'frame of {length} bytes exceeds limit')
    return _split(await reader.readexactly(length))


def read_frame_blocking(sock) -> tuple[FrameType, bytes]:
    (length,) = struct.unpack('>I', _recv_exact(sock, 4))
    if length > MAX_FRAME_BYTES:
        raise CodecError(f'frame of {length} bytes exceeds limit')
    return _split(_recv_exact(sock, length))


def _recv_exact(sock, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError('connection closed mid-frame')
        chunks.append(chunk)
        remaining -= len(chunk)
    return b''.join(chunks)
