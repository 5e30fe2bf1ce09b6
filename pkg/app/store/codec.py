"""
Store wire format: a tag byte followed by the message body. Strings are utf-8
with a u8 length, values are u32 length-prefixed.
"""

from enum import IntEnum

from app.codec import ByteReader, ByteWriter, CodecError
from app.store.structures import (
    GetRequest,
    PutRequest,
    ReplyStatus,
    StoreReply,
    VersionedEntry,
)
from app.validators.codec import read_vlc, write_vlc


class MessageTag(IntEnum):
    GET = 1
    PUT = 2
    REPLY = 3
    ENTRY = 4


StoreMessage = GetRequest | PutRequest | StoreReply | VersionedEntry


def _write_str(writer: ByteWriter, text: str) -> ByteWriter:
    return writer.short_bytes(text.encode())


def _read_str(reader: ByteReader) -> str:
    try:
        return reader.short_bytes().decode()
    except UnicodeDecodeError as e:
        raise CodecError(f'string field is not utf-8: {e}') from e


def write_entry(writer: ByteWriter, entry: VersionedEntry) -> ByteWriter:
    _write_str(writer, entry.key).blob(entry.value)
    write_vlc(writer, entry.vclock)
    return _write_str(writer, entry.origin)


def read_entry(reader: ByteReader) -> VersionedEntry:
    key = _read_str(reader)
    value = reader.blob()
    vclock = read_vlc(reader)
    origin = _read_str(reader)
    return VersionedEntry.model_construct(key=key, value=value, vclock=vclock, origin=origin)


def encode_entry(entry: VersionedEntry) -> bytes:
    return write_entry(ByteWriter(), entry).getvalue()


def decode_entry(data: bytes) -> VersionedEntry:
    reader = ByteReader(data)
    entry = read_entry(reader)
    reader.expect_end()
    return entry


def encode_message(msg: StoreMessage) -> bytes:
    writer = ByteWriter()
    match msg:
        case GetRequest():
            _write_str(writer.u8(MessageTag.GET).u64(msg.req_id), msg.key)
        case PutRequest():
            _write_str(writer.u8(MessageTag.PUT).u64(msg.req_id), msg.key).blob(msg.value)
            _write_str(writer, msg.client).u16(len(msg.deps))
            for vlc in msg.deps:
                write_vlc(writer, vlc)
        case StoreReply():
            _write_str(writer.u8(MessageTag.REPLY).u64(msg.req_id), msg.key)
            writer.u8(msg.status.code).u8(msg.entry is not None)
            if msg.entry is not None:
                write_entry(writer, msg.entry)
            _write_str(writer, msg.detail[:255])
        case VersionedEntry():
            write_entry(writer.u8(MessageTag.ENTRY), msg)
        case _:
            raise TypeError(f'not a store message: {type(msg).__name__}')
    return writer.getvalue()


def decode_message(data: bytes) -> StoreMessage:
    reader = ByteReader(data)
    tag = reader.u8()
    try:
        msg = _read_body(reader, tag)
    except ValueError as e:
        if isinstance(e, CodecError):
            raise
        raise CodecError(f'malformed store message: {e}') from e
    reader.expect_end()
    return msg


def _read_body(reader: ByteReader, tag: int) -> StoreMessage:
    match tag:
        case MessageTag.GET:
            return GetRequest(req_id=reader.u64(), key=_read_str(reader))
        case MessageTag.PUT:
            req_id = reader.u64()
            key = _read_str(reader)
            value = reader.blob()
            client = _read_str(reader)
            deps = tuple(read_vlc(reader) for _ in range(reader.u16()))
            return PutRequest.model_construct(
                req_id=req_id, key=key, value=value, client=client, deps=deps
            )
        case MessageTag.REPLY:
            req_id = reader.u64()
            key = _read_str(reader)
            status = ReplyStatus.from_code(reader.u8())
            entry = read_entry(reader) if reader.u8() else None
            detail = _read_str(reader)
            return StoreReply.model_construct(
                req_id=req_id, key=key, status=status, entry=entry, detail=detail
            )
        case MessageTag.ENTRY:
            return read_entry(reader)
    raise CodecError(f'unknown store message tag {tag}')
