"""Cipher keys, chaotic sequence generation and quantization to bytes, bits,
indices and permutations."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .crc import crc16
from .errors import FormatError, InvalidArg
from .system import DEFAULT_DT, DEFAULT_TRANSIENT, DIM, SystemParams, simulate

DEFAULT_SCALE = 10**4
DEFAULT_SEQ_INDICES = (0, 1, 2, 4, 5, 8)
SEQUENCE_NAMES = ("A", "X", "Y", "H", "V", "M")
KEY_FORMAT = "chaokey-key-1"


@dataclass(frozen=True)
class CipherKey:
    """Everything the decryptor needs to regenerate the keystream."""

    params: SystemParams = field(default_factory=SystemParams)
    init: tuple = (0.1,) * DIM
    seq_indices: tuple = DEFAULT_SEQ_INDICES
    transient_steps: int = DEFAULT_TRANSIENT
    dt: float = DEFAULT_DT
    quantizer_scale: int = DEFAULT_SCALE

    def __post_init__(self):
        init = tuple(float(v) for v in self.init)
        idx = tuple(int(i) for i in self.seq_indices)
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "seq_indices", idx)
        if len(init) != DIM or not all(np.isfinite(v) and 0.0 < v <= 1.0 for v in init):
            raise InvalidArg("init must hold 9 values in (0, 1]")
        if len(idx) != 6 or len(set(idx)) != 6 or not all(0 <= i < DIM for i in idx):
            raise InvalidArg("seq_indices must be 6 distinct integers in [0, 8]")
        if not self.dt > 0:
            raise InvalidArg("dt must be positive")
        if self.transient_steps < 0 or self.quantizer_scale < 1:
            raise InvalidArg("transient_steps must be >= 0 and quantizer_scale >= 1")

    def perturbed(self, delta: float) -> "CipherKey":
        """Copy with ``delta`` added to every initial condition."""
        return self.replace(init=tuple(v + delta for v in self.init))

    def replace(self, **changes) -> "CipherKey":
        fields = {k: getattr(self, k) for k in
                  ("params", "init", "seq_indices", "transient_steps", "dt", "quantizer_scale")}
        fields.update(changes)
        return CipherKey(**fields)

    # serialization -----------------------------------------------------------

    def dumps(self) -> str:
        p = self.params
        lines = [
            f"format={KEY_FORMAT}",
            f"a={p.a:.17g}",
            f"b={p.b:.17g}",
            f"c={p.c:.17g}",
            f"include_u4u8={int(p.include_u4u8)}",
        ]
        lines += [f"u{i + 1}={v:.17g}" for i, v in enumerate(self.init)]
        lines += [
            "seq_indices=" + ",".join(str(i) for i in self.seq_indices),
            f"transient_steps={self.transient_steps}",
            f"dt={self.dt:.17g}",
            f"quantizer_scale={self.quantizer_scale}",
        ]
        body = "".join(line + "\n" for line in lines)
        return body + f"checksum={crc16(body.encode()):04X}\n"

    @classmethod
    def loads(cls, text: str) -> "CipherKey":
        lines = text.splitlines(keepends=True)
        if not lines or not lines[-1].startswith("checksum="):
            raise FormatError("key file has no trailing checksum line")
        body = "".join(lines[:-1])
        try:
            expected = int(lines[-1].strip().split("=", 1)[1], 16)
        except ValueError:
            raise FormatError("malformed checksum line") from None
        if crc16(body.encode()) != expected:
            raise FormatError("key file checksum mismatch")
        kv = {}
        for line in lines[:-1]:
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"malformed key line: {line!r}")
            k, v = line.split("=", 1)
            kv[k.strip()] = v.strip()
        if kv.get("format") != KEY_FORMAT:
            raise FormatError(f"unsupported key format {kv.get('format')!r}")
        try:
            params = SystemParams(float(kv["a"]), float(kv["b"]), float(kv["c"]),
                                  bool(int(kv.get("include_u4u8", "0"))))
            return cls(
                params=params,
                init=tuple(float(kv[f"u{i + 1}"]) for i in range(DIM)),
                seq_indices=tuple(int(s) for s in kv["seq_indices"].split(",")),
                transient_steps=int(kv["transient_steps"]),
                dt=float(kv["dt"]),
                quantizer_scale=int(kv["quantizer_scale"]),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"invalid key file: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "CipherKey":
        return cls.loads(Path(path).read_text())


def derive_key(image, user_seed: bytes | None = None) -> CipherKey:
    """Key whose initial conditions come from the mean pixel value of ``image``.

    ``u_i(0) = frac(m/255 + 0.0101 i)`` for i = 1..9, where m is the mean over
    every byte of every channel. An optional seed shifts component i by
    ``seed[i-1]/256`` (seed bytes reused cyclically).
    """
    img = np.asarray(image)
    if img.size == 0:
        raise InvalidArg("cannot derive a key from an empty image")
    m = float(np.mean(img, dtype=np.float64))
    init = np.array([(m / 255.0 + i * 0.0101) % 1.0 for i in range(1, DIM + 1)])
    init[init == 0.0] = 0.5
    if user_seed:
        seed = bytes(user_seed)
        shift = np.array([seed[i % len(seed)] / 256.0 for i in range(DIM)])
        init = (init + shift) % 1.0
        init[init == 0.0] = 0.5
    return CipherKey(init=tuple(init))


class Sequences(NamedTuple):
    A: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    H: np.ndarray
    V: np.ndarray
    M: np.ndarray


def generate_sequences(key: CipherKey, length: int) -> Sequences:
    if length <= 0:
        raise InvalidArg("sequence length must be positive")
    traj = simulate(key.init, key.params, key.dt, int(length), key.transient_steps)
    return Sequences(*(np.ascontiguousarray(traj.samples[:, i]) for i in key.seq_indices))


@lru_cache(maxsize=8)
def _cached_sequences(key: CipherKey, length: int) -> Sequences:
    return generate_sequences(key, length)


def sequences_at_least(key: CipherKey, length: int) -> Sequences:
    """Sequences of length >= ``length``, memoized in power-of-two chunks."""
    n = 64
    while n < length:
        n *= 2
    return _cached_sequences(key, n)


def quantize_bytes(x, scale: int = DEFAULT_SCALE) -> np.ndarray:
    """byte = floor(frac(|x| * scale) * 256)."""
    x = np.asarray(x, dtype=np.float64)
    frac = np.modf(np.abs(x) * scale)[0]
    return np.minimum(np.floor(frac * 256.0), 255).astype(np.uint8)


def quantize_bits(x, scale: int = DEFAULT_SCALE) -> np.ndarray:
    """Eight bits per value, most significant first."""
    return np.unpackbits(quantize_bytes(x, scale))


def sort_permutation(x) -> np.ndarray:
    x = np.asarray(x)
    if x.size < 1:
        raise InvalidArg("cannot build a permutation from an empty sequence")
    return np.argsort(x, kind="stable")


def inverse_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return inv


def index_stream(x, m: int, scale: int = DEFAULT_SCALE) -> np.ndarray:
    if m < 1:
        raise InvalidArg("modulus must be >= 1")
    return (quantize_bytes(x, scale) % m).astype(np.uint8)


def keystream_bits(key: CipherKey, n_bits: int, which: str = "A") -> np.ndarray:
    """First ``n_bits`` bits of the quantized sequence ``which``."""
    n_values = -(-n_bits // 8)
    seqs = generate_sequences(key, n_values)
    return quantize_bits(getattr(seqs, which), key.quantizer_scale)[:n_bits]
