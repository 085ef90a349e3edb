"""Modbus RTU frames with a chaotically encrypted CRC field.

Only the two CRC bytes are encrypted; address, function and data stay in
the clear. The CRC goes through the same DNA encode / combine / decode steps
as an image block, using two keystream positions per frame. Position ``2 *
nonce`` is the first one used, so the caller must advance ``nonce`` for every
frame sent under a key. Reusing a nonce reuses keystream and is not detected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .crc import crc16
from .dna import INVERSE_OP, N_RULES, combine, decode, encode
from .errors import FrameTooLong, FrameTooShort, InvalidArg
from .keystream import CipherKey, index_stream, quantize_bytes, sequences_at_least

__all__ = [
    "ModbusFrame", "Verdict", "FrameStreams", "crc16", "build_frame", "parse_frame",
    "frame_streams", "encrypt_crc", "decrypt_crc", "verify_frame",
]

MAX_FRAME = 256
MAX_DATA = MAX_FRAME - 4


class Verdict(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"

    def __bool__(self):
        return self is Verdict.ACCEPT


@dataclass(frozen=True)
class ModbusFrame:
    address: int
    function: int
    data: bytes
    crc: int  # as a 16-bit value; sent low byte first

    def __post_init__(self):
        object.__setattr__(self, "data", bytes(self.data))
        if not (0 <= self.address <= 0xFF and 0 <= self.function <= 0xFF):
            raise InvalidArg("address and function must be single bytes")
        if not 0 <= self.crc <= 0xFFFF:
            raise InvalidArg("crc must be a 16-bit value")
        if len(self.data) > MAX_DATA:
            raise FrameTooLong(f"data field holds at most {MAX_DATA} bytes")

    @property
    def body(self) -> bytes:
        return bytes([self.address, self.function]) + self.data

    @property
    def crc_bytes(self) -> bytes:
        return self.crc.to_bytes(2, "little")

    def to_bytes(self) -> bytes:
        return self.body + self.crc_bytes

    def hex(self) -> str:
        return self.to_bytes().hex().upper()

    def with_crc(self, crc: int) -> "ModbusFrame":
        return ModbusFrame(self.address, self.function, self.data, crc)


def build_frame(address: int, function: int, data: bytes = b"") -> ModbusFrame:
    body = bytes([address, function]) + bytes(data)
    return ModbusFrame(address, function, data, crc16(body))


def parse_frame(raw: bytes) -> ModbusFrame:
    raw = bytes(raw)
    if len(raw) < 4:
        raise FrameTooShort(f"a Modbus RTU frame needs at least 4 bytes, got {len(raw)}")
    if len(raw) > MAX_FRAME:
        raise FrameTooLong(f"a Modbus RTU frame holds at most {MAX_FRAME} bytes")
    return ModbusFrame(raw[0], raw[1], raw[2:-2], int.from_bytes(raw[-2:], "little"))


class FrameStreams(NamedTuple):
    key_bytes: np.ndarray  # (2,) uint8
    rule_x: np.ndarray  # (2,) 0-based rule indices
    rule_y: np.ndarray
    ops: np.ndarray


def frame_streams(key: CipherKey, nonce: int) -> FrameStreams:
    if nonce < 0:
        raise InvalidArg("nonce must be non-negative")
    j = 2 * int(nonce)
    seqs = sequences_at_least(key, j + 2)
    s = key.quantizer_scale
    return FrameStreams(
        quantize_bytes(seqs.A[j:j + 2], s),
        index_stream(seqs.X[j:j + 2], N_RULES, s),
        index_stream(seqs.Y[j:j + 2], N_RULES, s),
        index_stream(seqs.H[j:j + 2], 3, s),
    )


def _transform(crc: int, st: FrameStreams, inverse: bool) -> int:
    crc_b = np.frombuffer(crc.to_bytes(2, "little"), dtype=np.uint8)
    ops = np.asarray(st.ops)
    if inverse:
        ops = INVERSE_OP[ops]
    mixed = combine(encode(crc_b, st.rule_x), encode(st.key_bytes, st.rule_y), ops, st.rule_x)
    return int.from_bytes(decode(mixed, st.rule_x).astype(np.uint8).tobytes(), "little")


def encrypt_crc(frame: ModbusFrame, key: CipherKey | None, nonce: int,
                streams: FrameStreams | None = None) -> ModbusFrame:
    st = streams if streams is not None else frame_streams(key, nonce)
    return frame.with_crc(_transform(frame.crc, st, inverse=False))


def decrypt_crc(frame: ModbusFrame, key: CipherKey | None, nonce: int,
                streams: FrameStreams | None = None) -> ModbusFrame:
    st = streams if streams is not None else frame_streams(key, nonce)
    return frame.with_crc(_transform(frame.crc, st, inverse=True))


def verify_frame(frame: ModbusFrame, key: CipherKey | None, nonce: int,
                 streams: FrameStreams | None = None) -> Verdict:
    plain = decrypt_crc(frame, key, nonce, streams)
    return Verdict.ACCEPT if plain.crc == crc16(frame.body) else Verdict.REJECT
