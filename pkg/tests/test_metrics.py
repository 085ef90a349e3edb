import json
import time

import numpy as np
import pytest

from chaokey.errors import DegenerateInput, DimensionMismatch, InvalidArg
from chaokey.metrics import (adjacent_correlation, block_frequency_test, chi_square,
                             correlation, export_bits, histogram, image_report,
                             information_entropy, monobit_test, nist_subset, pixel_diff,
                             read_bits, runs_test, ssim)


def test_histogram_ramp():
    ramp = np.arange(256, dtype=np.uint8).repeat(4)
    assert np.all(histogram(ramp) == 4)
    assert chi_square(ramp) == 0.0
    assert information_entropy(ramp) == pytest.approx(8.0)


def test_entropy_constant():
    assert information_entropy(np.full((10, 10), 9, np.uint8)) == 0.0


def test_entropy_two_levels():
    x = np.array([0, 255] * 50, np.uint8)
    assert information_entropy(x) == pytest.approx(1.0)


def test_correlation_basics(rng):
    u = rng.normal(size=1000)
    assert correlation(u, u) == pytest.approx(1.0)
    assert correlation(u, -u) == pytest.approx(-1.0)
    v = rng.normal(size=1000)
    assert correlation(3 * u + 7, 0.5 * v - 2) == pytest.approx(correlation(u, v))
    with pytest.raises(DegenerateInput):
        correlation(np.ones(10), u[:10])


def test_adjacent_correlation_gradient_and_noise(rng):
    grad = np.add.outer(np.arange(100), np.arange(100)).astype(np.uint8)
    assert adjacent_correlation(grad, "H") > 0.99
    noise = rng.integers(0, 256, (256, 256), dtype=np.uint8)
    for d in "HVD":
        assert abs(adjacent_correlation(noise, d)) < 0.06
    with pytest.raises(InvalidArg):
        adjacent_correlation(grad, "Q")
    with pytest.raises(InvalidArg):
        adjacent_correlation(np.zeros((10, 10)), "H", n_pairs=3000)


def test_adjacent_sampling_is_seeded(photo256):
    ch = photo256[..., 0]
    assert adjacent_correlation(ch, "V", rng_seed=3) == adjacent_correlation(ch, "V", rng_seed=3)


def test_ssim_properties(photo256):
    assert ssim(photo256, photo256) == pytest.approx(1.0)
    noisy = np.clip(photo256.astype(int) + 20, 0, 255).astype(np.uint8)
    assert ssim(photo256, noisy) == pytest.approx(ssim(noisy, photo256))
    assert ssim(photo256, 255 - photo256) < 0.3
    with pytest.raises(DimensionMismatch):
        ssim(photo256, photo256[:10])


def test_pixel_diff():
    a = np.zeros((4, 4), np.uint8)
    b = a.copy()
    assert pixel_diff(a, b) == (0, 0)
    b[1, 2] = 200
    b[3, 3] = 5
    assert pixel_diff(a, b) == (200, 2)
    with pytest.raises(DimensionMismatch):
        pixel_diff(a, b[:2])


def test_nist_reference_example():
    # SP 800-22 worked example for the frequency test
    bits = [int(c) for c in "1011010101"]
    assert monobit_test(bits).p_value == pytest.approx(0.527089, abs=1e-6)
    bits = [int(c) for c in "1001101011"]
    assert runs_test(bits).p_value == pytest.approx(0.147232, abs=1e-6)
    bits = [int(c) for c in "0110011010"]
    assert block_frequency_test(bits, 3).p_value == pytest.approx(0.801252, abs=1e-6)


def test_nist_degenerate_sequences():
    ones = np.ones(100_000, np.uint8)
    assert not monobit_test(ones).passed
    r = runs_test(ones)
    assert r.p_value is None and not r.passed
    alt = np.tile([0, 1], 50_000)
    assert monobit_test(alt).p_value == pytest.approx(1.0)
    assert not runs_test(alt).passed


def test_nist_random_bits_pass(rng):
    bits = rng.integers(0, 2, 1_000_000)
    res = nist_subset(bits)
    assert [r.name for r in res] == ["Frequency", "Block Frequency", "Runs"]
    assert all(r.passed for r in res)
    with pytest.raises(InvalidArg):
        nist_subset(bits[:1000])
    with pytest.raises(InvalidArg):
        monobit_test([0, 1, 2])


def test_bits_export_roundtrip(tmp_path, rng):
    bits = rng.integers(0, 2, 1_000_000).astype(np.uint8)
    path = tmp_path / "bits.txt"
    t0 = time.perf_counter()
    export_bits(bits, path)
    assert time.perf_counter() - t0 < 5.0
    assert path.stat().st_size == 1_000_000
    assert set(path.read_bytes()) <= {ord("0"), ord("1")}
    np.testing.assert_array_equal(read_bits(path), bits)


def test_report_json_is_stable(photo256):
    a = image_report(photo256, photo256).to_json()
    b = image_report(photo256, photo256).to_json()
    assert a == b
    d = json.loads(a)
    assert set(d["channels"]) == {"R", "G", "B"}
    assert d["ssim"] == pytest.approx(1.0)
    assert d["pixel_diff"] == {"max": 0, "count": 0}


def test_report_constant_channel_has_null_correlation():
    img = np.full((64, 64, 3), 4, np.uint8)
    d = json.loads(image_report(img).to_json())
    assert d["channels"]["R"]["correlation"]["H"] is None
    assert d["channels"]["R"]["entropy"] == 0.0


def test_ssim_constant_images_equal():
    c = np.full((32, 32), 90, np.uint8)
    assert ssim(c, c) == pytest.approx(1.0)


def test_pixel_diff_plus_one():
    x = np.random.default_rng(1).integers(0, 255, (16, 16)).astype(np.uint8)
    y = x.copy()
    y[3, 4] += 1
    assert pixel_diff(x, y) == (1, 1)
    assert pixel_diff(x, x + 1) == (1, x.size)


def test_cipher_entropy_512(photo512):
    from chaokey.dna import encrypt_image
    from chaokey.keystream import derive_key
    cimg = encrypt_image(photo512, derive_key(photo512)).as_image()
    for ch in range(3):
        assert information_entropy(cimg[..., ch]) >= 7.9989 - 0.003
