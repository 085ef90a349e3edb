"""Security metrics for cipher images and keystreams."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import erfc, sqrt
from pathlib import Path

import numpy as np
from scipy.special import gammaincc

from .errors import DegenerateInput, DimensionMismatch, InvalidArg

ALPHA = 0.01
CHI2_CRIT_255 = 310.457  # chi-square 0.99 quantile, 255 dof
DIRECTIONS = {"H": (0, 1), "V": (1, 0), "D": (1, 1)}


def _channel(x) -> np.ndarray:
    x = np.asarray(x)
    if x.size == 0:
        raise InvalidArg("empty channel")
    return x


def histogram(channel) -> np.ndarray:
    return np.bincount(_channel(channel).astype(np.uint8).ravel(), minlength=256)


def chi_square(channel) -> float:
    """Pearson statistic of the gray-level histogram against uniform (255 dof)."""
    h = histogram(channel).astype(float)
    e = h.sum() / 256.0
    return float(np.sum((h - e) ** 2) / e)


def correlation(u, v) -> float:
    """Pearson r with population (1/N) moments."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    du = u - u.mean()
    dv = v - v.mean()
    var_u = np.mean(du * du)
    var_v = np.mean(dv * dv)
    if var_u == 0 or var_v == 0:
        raise DegenerateInput("zero variance: correlation is undefined")
    r = np.mean(du * dv) / (sqrt(var_u) * sqrt(var_v))
    return float(np.clip(r, -1.0, 1.0))


def adjacent_pairs(channel, direction: str, n_pairs: int | None = 3000, rng_seed: int = 0):
    """Sample ``n_pairs`` distinct pixels and their neighbour in ``direction``.

    ``n_pairs=None`` returns every adjacent pair.
    """
    x = _channel(channel)
    if x.ndim != 2:
        raise InvalidArg("adjacent correlation works on a single 2-d channel")
    try:
        dr, dc = DIRECTIONS[direction]
    except KeyError:
        raise InvalidArg(f"direction must be one of {list(DIRECTIONS)}") from None
    h, w = x.shape
    rows, cols = h - dr, w - dc
    total = rows * cols
    if n_pairs is None:
        idx = np.arange(total)
    else:
        if total < n_pairs:
            raise InvalidArg(f"channel too small for {n_pairs} distinct {direction} pairs")
        idx = np.random.default_rng(rng_seed).choice(total, size=n_pairs, replace=False)
    r, c = np.divmod(idx, cols)
    return x[r, c], x[r + dr, c + dc]


def adjacent_correlation(channel, direction: str = "H", n_pairs: int | None = 3000,
                         rng_seed: int = 0) -> float:
    return correlation(*adjacent_pairs(channel, direction, n_pairs, rng_seed))


def information_entropy(channel) -> float:
    h = histogram(channel)
    p = h[h > 0] / h.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


def _ssim_channel(x, y, L=255.0):
    x = x.astype(float)
    y = y.astype(float)
    d1 = (0.01 * L) ** 2
    d2 = (0.03 * L) ** 2
    d3 = d1 / 2
    kx, ky = x.mean(), y.mean()
    sx, sy = x.std(), y.std()
    sxy = np.mean((x - kx) * (y - ky))
    lum = (2 * kx * ky + d1) / (kx * kx + ky * ky + d1)
    con = (2 * sx * sy + d2) / (sx * sx + sy * sy + d2)
    struct = (sxy + d3) / (sx * sy + d3)
    return lum * con * struct


def ssim(x, y) -> float:
    """Whole-image SSIM (one global window); RGB inputs average the channels.

    The structure term uses D3 = D1 / 2.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise InvalidArg("empty image")
    if x.ndim == 3:
        return float(np.mean([_ssim_channel(x[..., c], y[..., c]) for c in range(x.shape[2])]))
    return float(_ssim_channel(x, y))


def pixel_diff(x, y) -> tuple[int, int]:
    """(max absolute difference, number of differing elements)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    d = np.abs(x.astype(np.int64) - y.astype(np.int64))
    return int(d.max(initial=0)), int(np.count_nonzero(d))


# --- NIST SP 800-22 subset ---------------------------------------------------------


@dataclass(frozen=True)
class NistResult:
    name: str
    p_value: float | None  # None when the test does not apply
    passed: bool
    note: str = ""


def _bits(bits) -> np.ndarray:
    b = np.asarray(bits).astype(np.int64).ravel()
    if np.any((b != 0) & (b != 1)):
        raise InvalidArg("bit sequences may only contain 0 and 1")
    return b


def monobit_test(bits) -> NistResult:
    b = _bits(bits)
    n = len(b)
    s = 2 * int(b.sum()) - n
    p = erfc(abs(s) / sqrt(2 * n))
    return NistResult("Frequency", p, p >= ALPHA)


def block_frequency_test(bits, block_size: int = 128) -> NistResult:
    b = _bits(bits)
    nblocks = len(b) // block_size
    if nblocks < 1:
        raise InvalidArg("sequence shorter than one block")
    pi = b[:nblocks * block_size].reshape(nblocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * np.sum((pi - 0.5) ** 2)
    p = float(gammaincc(nblocks / 2.0, chi2 / 2.0))
    return NistResult("Block Frequency", p, p >= ALPHA)


def runs_test(bits) -> NistResult:
    b = _bits(bits)
    n = len(b)
    pi = b.mean()
    if abs(pi - 0.5) >= 2.0 / sqrt(n):
        return NistResult("Runs", None, False, "not applicable: frequency precondition failed")
    v_obs = 1 + int(np.count_nonzero(np.diff(b)))
    p = erfc(abs(v_obs - 2 * n * pi * (1 - pi)) / (2 * sqrt(2 * n) * pi * (1 - pi)))
    return NistResult("Runs", p, p >= ALPHA)


def nist_subset(bits, min_bits: int = 100_000) -> list[NistResult]:
    b = _bits(bits)
    if len(b) < min_bits:
        raise InvalidArg(f"need at least {min_bits} bits, got {len(b)}")
    return [monobit_test(b), block_frequency_test(b, 128), runs_test(b)]


def export_bits(bits, destination) -> None:
    """Write ASCII '0'/'1' with no separators, as read by the reference NIST suite."""
    b = np.asarray(bits).astype(np.uint8).ravel()
    Path(destination).write_bytes((b + ord("0")).tobytes())


def read_bits(path) -> np.ndarray:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    raw = raw[(raw == ord("0")) | (raw == ord("1"))]
    return (raw - ord("0")).astype(np.uint8)


# --- report ---------------------------------------------------------------------------


@dataclass
class ChannelReport:
    histogram: list
    chi_square: float
    entropy: float
    correlation: dict  # direction -> r, or None when undefined


@dataclass
class MetricsReport:
    channels: dict = field(default_factory=dict)  # "R"/"G"/"B" -> ChannelReport
    ssim: float | None = None
    pixel_diff: dict | None = None
    nist: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def channel_report(channel, n_pairs: int = 3000, rng_seed: int = 0) -> ChannelReport:
    corr = {}
    for d in DIRECTIONS:
        try:
            corr[d] = adjacent_correlation(channel, d, n_pairs, rng_seed)
        except DegenerateInput:
            corr[d] = None
    return ChannelReport(histogram(channel).tolist(), chi_square(channel),
                         information_entropy(channel), corr)


def image_report(img, other=None, n_pairs: int = 3000, rng_seed: int = 0,
                 bits=None) -> MetricsReport:
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[..., None]
    names = "RGB" if img.shape[2] == 3 else [str(i) for i in range(img.shape[2])]
    rows, cols = img.shape[:2]
    pairs = min(n_pairs, (rows - 1) * (cols - 1)) if rows > 1 and cols > 1 else 0
    report = MetricsReport(config={"n_pairs": pairs, "rng_seed": rng_seed})
    for i, name in enumerate(names):
        ch = img[..., i]
        if pairs:
            report.channels[name] = channel_report(ch, pairs, rng_seed)
        else:
            report.channels[name] = ChannelReport(histogram(ch).tolist(), chi_square(ch),
                                                  information_entropy(ch), {})
    if other is not None:
        other = np.asarray(other)
        if other.ndim == 2:
            other = other[..., None]
        report.ssim = ssim(img, other)
        mx, cnt = pixel_diff(img, other)
        report.pixel_diff = {"max": mx, "count": cnt}
    if bits is not None:
        report.nist = [asdict(r) for r in nist_subset(bits)]
    return report
