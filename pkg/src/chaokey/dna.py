"""DNA-coding image cipher.

Each channel of the selected region is zero-padded to a multiple of 4, cut
into 4x4 blocks and DNA-encoded with a per-block rule taken from the X
sequence. A keystream image built from sequence A is encoded with rules from
Y, the two are combined base-wise (add, subtract or xor, chosen by H),
decoded, and finally the rows and columns are shuffled by the sort orders of
V and M.

Bases are stored as small integers: A=0, C=1, G=2, T=3, so the Watson-Crick
complement of ``b`` is ``3 - b``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import FormatError, InvalidArg
from .keystream import (CipherKey, Sequences, generate_sequences, index_stream,
                        inverse_permutation, quantize_bytes, sort_permutation)

BASES = "ACGT"
BLOCK = 4

# RULES[r, v] is the base for 2-bit value v under rule r + 1
RULES = np.array([
    [0, 1, 2, 3],  # 1: 00A 01C 10G 11T
    [0, 2, 1, 3],  # 2: 00A 01G 10C 11T
    [1, 0, 3, 2],  # 3: 00C 01A 10T 11G
    [1, 3, 0, 2],  # 4: 00C 01T 10A 11G
    [2, 0, 3, 1],  # 5: 00G 01A 10T 11C
    [2, 3, 0, 1],  # 6: 00G 01T 10A 11C
    [3, 1, 2, 0],  # 7: 00T 01C 10G 11A
    [3, 2, 1, 0],  # 8: 00T 01G 10C 11A
], dtype=np.uint8)
RULES_INV = np.argsort(RULES, axis=1).astype(np.uint8)
N_RULES = len(RULES)


class DnaOp(IntEnum):
    ADD = 0
    SUB = 1
    XOR = 2

    @property
    def inverse(self) -> "DnaOp":
        return {DnaOp.ADD: DnaOp.SUB, DnaOp.SUB: DnaOp.ADD, DnaOp.XOR: DnaOp.XOR}[self]


INVERSE_OP = np.array([DnaOp.SUB, DnaOp.ADD, DnaOp.XOR], dtype=np.uint8)


def _rule_index(rule_id) -> np.ndarray:
    r = np.asarray(rule_id)
    if np.any((r < 1) | (r > N_RULES)):
        raise InvalidArg("DNA rule ids run from 1 to 8")
    return (r - 1).astype(np.intp)


# --- array-level transforms (rules given as 0-based indices) ---------------


def encode(data, rules) -> np.ndarray:
    """Bytes of any shape -> bases with a trailing axis of 4 (MSB pair first)."""
    data = np.asarray(data, dtype=np.uint8)
    pairs = np.stack([(data >> s) & 3 for s in (6, 4, 2, 0)], axis=-1)
    return RULES[np.asarray(rules)[..., None], pairs]


def decode(bases, rules) -> np.ndarray:
    vals = RULES_INV[np.asarray(rules)[..., None], bases].astype(np.uint8)
    return (vals[..., 0] << 6) | (vals[..., 1] << 4) | (vals[..., 2] << 2) | vals[..., 3]


def combine(x, y, ops, rules) -> np.ndarray:
    """Base-wise add/sub/xor in the value space of ``rules``."""
    r = np.asarray(rules)[..., None]
    ops = np.asarray(ops)[..., None]
    xv = RULES_INV[r, x].astype(np.int16)
    yv = RULES_INV[r, y].astype(np.int16)
    out = np.where(ops == DnaOp.ADD, (xv + yv) % 4,
                   np.where(ops == DnaOp.SUB, (xv - yv) % 4, xv ^ yv))
    return RULES[r, out]


# --- block-level API ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DnaBlock:
    bases: np.ndarray  # (4, 4, 4) base codes
    rule_id: int

    def __str__(self):
        return "".join(BASES[b] for b in self.bases.ravel())


def dna_encode(block, rule_id: int) -> DnaBlock:
    block = np.asarray(block, dtype=np.uint8)
    return DnaBlock(encode(block, _rule_index(rule_id)), int(rule_id))


def dna_decode(block: DnaBlock, rule_id: int | None = None) -> np.ndarray:
    rid = block.rule_id if rule_id is None else rule_id
    return decode(block.bases, _rule_index(rid))


def dna_op(x: DnaBlock, y: DnaBlock, op: DnaOp, rule_id: int) -> DnaBlock:
    if x.bases.shape != y.bases.shape:
        raise InvalidArg("DNA blocks must have the same shape")
    return DnaBlock(combine(x.bases, y.bases, int(op), _rule_index(rule_id)), int(rule_id))


# --- channel pipeline -----------------------------------------------------------


class ChannelStreams(NamedTuple):
    """Quantized keystream material for one padded channel."""

    key_bytes: np.ndarray  # (H', W') uint8, the A2 image
    rule_x: np.ndarray  # (n_blocks,) 0-based rule indices
    rule_y: np.ndarray
    ops: np.ndarray  # (n_blocks,) DnaOp values
    row_perm: np.ndarray  # (H',)
    col_perm: np.ndarray  # (W',)


def padded_shape(h: int, w: int) -> tuple[int, int]:
    return -(-h // BLOCK) * BLOCK, -(-w // BLOCK) * BLOCK


def channel_streams(seqs: Sequences, hp: int, wp: int, n_channels: int = 3,
                    scale: int = 10**4) -> list[ChannelStreams]:
    """Cut the six sequences into consecutive per-channel segments.

    Channel ch uses A[ch*H'W' : (ch+1)*H'W'], X/Y/H[ch*nb : (ch+1)*nb],
    V[ch*H' : (ch+1)*H'] and M[ch*W' : (ch+1)*W'], nb = H'W'/16.
    """
    npix = hp * wp
    nb = npix // (BLOCK * BLOCK)
    out = []
    for ch in range(n_channels):
        a = seqs.A[ch * npix:(ch + 1) * npix]
        x = seqs.X[ch * nb:(ch + 1) * nb]
        y = seqs.Y[ch * nb:(ch + 1) * nb]
        hs = seqs.H[ch * nb:(ch + 1) * nb]
        v = seqs.V[ch * hp:(ch + 1) * hp]
        m = seqs.M[ch * wp:(ch + 1) * wp]
        if len(a) < npix or len(x) < nb or len(v) < hp or len(m) < wp:
            raise InvalidArg("sequences too short for this image")
        out.append(ChannelStreams(
            key_bytes=quantize_bytes(a, scale).reshape(hp, wp),
            rule_x=index_stream(x, N_RULES, scale),
            rule_y=index_stream(y, N_RULES, scale),
            ops=index_stream(hs, 3, scale),
            row_perm=sort_permutation(v),
            col_perm=sort_permutation(m),
        ))
    return out


def sequence_length(hp: int, wp: int, n_channels: int = 3) -> int:
    return n_channels * hp * wp


def key_streams(key: CipherKey, hp: int, wp: int) -> list[ChannelStreams]:
    seqs = generate_sequences(key, sequence_length(hp, wp))
    return channel_streams(seqs, hp, wp, scale=key.quantizer_scale)


def _per_pixel(values, hp, wp):
    blocks = np.asarray(values).reshape(hp // BLOCK, wp // BLOCK)
    return np.repeat(np.repeat(blocks, BLOCK, axis=0), BLOCK, axis=1)


def encrypt_channel(plain, st: ChannelStreams) -> np.ndarray:
    hp, wp = plain.shape
    rx = _per_pixel(st.rule_x, hp, wp)
    ry = _per_pixel(st.rule_y, hp, wp)
    ops = _per_pixel(st.ops, hp, wp)
    b1 = encode(plain, rx)
    b2 = encode(st.key_bytes, ry)
    c1 = decode(combine(b1, b2, ops, rx), rx)
    return c1[st.row_perm][:, st.col_perm]


def decrypt_channel(cipher, st: ChannelStreams) -> np.ndarray:
    hp, wp = cipher.shape
    c1 = cipher[inverse_permutation(st.row_perm)][:, inverse_permutation(st.col_perm)]
    rx = _per_pixel(st.rule_x, hp, wp)
    ry = _per_pixel(st.rule_y, hp, wp)
    ops = INVERSE_OP[_per_pixel(st.ops, hp, wp)]
    b2 = encode(st.key_bytes, ry)
    return decode(combine(encode(c1, rx), b2, ops, rx), rx)


# --- images and container -------------------------------------------------------

MAGIC = b"CHK1"
VERSION = 1
_HEADER = struct.Struct("<4sB6I")


@dataclass(frozen=True, eq=False)
class CipherImage:
    channels: np.ndarray  # (3, H', W') uint8
    region: tuple  # (x, y, w, h) within the original
    original_size: tuple  # (W, H)
    version: int = VERSION

    @property
    def padded_shape(self) -> tuple[int, int]:
        return self.channels.shape[1], self.channels.shape[2]

    def as_image(self) -> np.ndarray:
        """Padded cipher as an (H', W', 3) array for viewing and metrics."""
        return np.ascontiguousarray(np.moveaxis(self.channels, 0, -1))

    def to_bytes(self) -> bytes:
        x, y, w, h = self.region
        W, H = self.original_size
        return _HEADER.pack(MAGIC, self.version, x, y, w, h, W, H) + self.channels.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherImage":
        if len(data) < _HEADER.size:
            raise FormatError("cipher container truncated in header")
        magic, version, x, y, w, h, W, H = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError("not a cipher container (bad magic)")
        if version != VERSION:
            raise FormatError(f"unsupported container version {version}")
        if w == 0 or h == 0 or x + w > W or y + h > H:
            raise FormatError("region metadata out of bounds")
        hp, wp = padded_shape(h, w)
        body = data[_HEADER.size:]
        if len(body) != 3 * hp * wp:
            raise FormatError(f"expected {3 * hp * wp} channel bytes, found {len(body)}")
        chans = np.frombuffer(body, dtype=np.uint8).reshape(3, hp, wp).copy()
        return cls(chans, (x, y, w, h), (W, H), version)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "CipherImage":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def as_rgb(img) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise InvalidArg("images must be uint8")
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise InvalidArg(f"expected an (H, W, 3) image, got shape {img.shape}")
    return img[..., :3]


def encrypt_image(img, key: CipherKey, region=None,
                  streams: list[ChannelStreams] | None = None) -> CipherImage:
    """Encrypt ``region`` = (x, y, w, h) of ``img`` (default: whole image).

    ``streams`` overrides the key-derived keystream; used by test harnesses.
    """
    img = as_rgb(img)
    H, W = img.shape[:2]
    if H == 0 or W == 0:
        raise InvalidArg("empty image")
    x, y, w, h = (0, 0, W, H) if region is None else (int(v) for v in region)
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > W or y + h > H:
        raise InvalidArg(f"region {(x, y, w, h)} does not fit a {W}x{H} image")
    hp, wp = padded_shape(h, w)
    if streams is None:
        streams = key_streams(key, hp, wp)
    out = np.empty((3, hp, wp), dtype=np.uint8)
    for ch in range(3):
        plain = np.zeros((hp, wp), dtype=np.uint8)
        plain[:h, :w] = img[y:y + h, x:x + w, ch]
        out[ch] = encrypt_channel(plain, streams[ch])
    return CipherImage(out, (x, y, w, h), (W, H))


def decrypt_image(c: CipherImage, key: CipherKey,
                  streams: list[ChannelStreams] | None = None) -> np.ndarray:
    """Recover the encrypted region as an (h, w, 3) array.

    A wrong key is not detected; it simply yields noise.
    """
    hp, wp = c.padded_shape
    _, _, w, h = c.region
    if c.channels.shape != (3,) + padded_shape(h, w):
        raise FormatError("channel dimensions disagree with region metadata")
    if streams is None:
        streams = key_streams(key, hp, wp)
    out = np.empty((h, w, 3), dtype=np.uint8)
    for ch in range(3):
        out[..., ch] = decrypt_channel(c.channels[ch], streams[ch])[:h, :w]
    return out
