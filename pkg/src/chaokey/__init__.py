"""Chaos-based cipher toolkit built on a 9D quaternion Chen system."""

__version__ = "0.1.0"

from .errors import (ChaokeyError, DegenerateInput, DimensionMismatch, FormatError,
                     FrameTooLong, FrameTooShort, InvalidArg, KeyMissing, NonFinite)
from .system import SystemParams, Trajectory, derivative, jacobian, rk4_step, simulate
from .keystream import CipherKey, derive_key, generate_sequences
from .dna import CipherImage, decrypt_image, encrypt_image
from .modbus import ModbusFrame, Verdict, crc16, encrypt_crc, decrypt_crc, verify_frame

__all__ = [
    "ChaokeyError", "DegenerateInput", "DimensionMismatch", "FormatError", "FrameTooLong",
    "FrameTooShort", "InvalidArg", "KeyMissing", "NonFinite",
    "SystemParams", "Trajectory", "derivative", "jacobian", "rk4_step", "simulate",
    "CipherKey", "derive_key", "generate_sequences",
    "CipherImage", "decrypt_image", "encrypt_image",
    "ModbusFrame", "Verdict", "crc16", "encrypt_crc", "decrypt_crc", "verify_frame",
]
