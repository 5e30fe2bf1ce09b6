from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from app.codec import ByteReader, ByteWriter, CodecError
from app.validators.codec import read_vlc, write_vlc
from app.validators.structures import Vlc


class DiscardReason(str, Enum):
    INVALID_PROOF = 'invalid-proof'
    STALE = 'stale'
    DUPLICATE = 'duplicate'
    MALFORMED = 'malformed'


class CausalEnvelope(BaseModel):
    """Application payload with the sender's verifiable clock attached"""

    model_config = ConfigDict(frozen=True)

    sender: str
    clock: Vlc
    payload: bytes = b''


class Send(BaseModel):
    """One scripted application send"""

    model_config = ConfigDict(frozen=True)

    to: tuple[str, ...]
    payload: bytes
    at: int = Field(default=0, ge=0, description='Tick of the send; ignored for reactions')


def encode_envelope(envelope: CausalEnvelope) -> bytes:
    writer = ByteWriter().short_bytes(envelope.sender.encode())
    write_vlc(writer, envelope.clock)
    return writer.blob(envelope.payload).getvalue()


def decode_envelope(data: bytes) -> CausalEnvelope:
    reader = ByteReader(data)
    try:
        sender = reader.short_bytes().decode()
    except UnicodeDecodeError as e:
        raise CodecError(f'sender is not utf-8: {e}') from e
    clock = read_vlc(reader)
    payload = reader.blob()
    reader.expect_end()
    return CausalEnvelope.model_construct(sender=sender, clock=clock, payload=payload)
