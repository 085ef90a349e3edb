"""CRC-16/MODBUS (init 0xFFFF, reflected polynomial 0xA001, no final xor)."""

import numpy as np


def _make_table() -> np.ndarray:
    table = np.zeros(256, dtype=np.uint16)
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1
        table[i] = crc
    return table


_TABLE = [int(v) for v in _make_table()]


def crc16(data: bytes) -> int:
    crc = 0xFFFF
    for byte in bytes(data):
        crc = (crc >> 8) ^ _TABLE[(crc ^ byte) & 0xFF]
    return crc
