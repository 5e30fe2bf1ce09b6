"""
Length-prefixed binary codec helpers shared by every wire format
"""

import struct


class CodecError(ValueError):
    """Raised when bytes do not decode into a well-formed structure"""


class ByteWriter:
    """Append-only big-endian encoder"""

    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, value: int) -> 'ByteWriter':
        self._parts.append(struct.pack('>B', value))
        return self

    def u16(self, value: int) -> 'ByteWriter':
        self._parts.append(struct.pack('>H', value))
        return self

    def u32(self, value: int) -> 'ByteWriter':
        self._parts.append(struct.pack('>I', value))
        return self

    def u64(self, value: int) -> 'ByteWriter':
        self._parts.append(struct.pack('>Q', value))
        return self

    def raw(self, data: bytes) -> 'ByteWriter':
        self._parts.append(data)
        return self

    def short_bytes(self, data: bytes) -> 'ByteWriter':
        """u8 length followed by the bytes"""
        if len(data) > 0xFF:
            raise CodecError(f'field too long for u8 length: {len(data)}')
        return self.u8(len(data)).raw(data)

    def blob(self, data: bytes) -> 'ByteWriter':
        """u32 length followed by the bytes"""
        return self.u32(len(data)).raw(data)

    def getvalue(self) -> bytes:
        return b''.join(self._parts)


class ByteReader:
    """Cursor over a byte string; every read checks for truncation"""

    def __init__(self, data: bytes, offset: int = 0) -> None:
        self.data = data
        self.offset = offset

    def _take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CodecError(
                f'truncated input: need {size} bytes at offset {self.offset}'
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack('>H', self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack('>I', self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack('>Q', self._take(8))[0]

    def raw(self, size: int) -> bytes:
        return self._take(size)

    def short_bytes(self) -> bytes:
        return self._take(self.u8())

    def blob(self) -> bytes:
        return self._take(self.u32())

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self.data)

    def expect_end(self) -> None:
        if not self.exhausted:
            raise CodecError(f'{len(self.data) - self.offset} trailing bytes')
