# SPDX-License-Identifier: Apache-2.0
import numpy as np
import pytest

import ulb


def random_codes(m, k, bits, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2**bits, size=(m, k), dtype=np.uint8)


def test_pack_decode_round_trip():
    codes = random_codes(64, 32, 2, seed=1)
    packed = ulb.pack_int2(codes)
    assert packed.bit_width == 2
    assert packed.rows_m == 64 and packed.cols_k == 32
    assert len(packed.payload) == 64 * 32 // 4
    np.testing.assert_array_equal(ulb.decode_codes(packed), codes)

    codes1 = random_codes(64, 32, 1, seed=2)
    packed1 = ulb.pack_int1(codes1)
    np.testing.assert_array_equal(ulb.decode_codes(packed1), codes1)


def test_decode_weights_applies_codebook():
    codes = random_codes(32, 8, 2, seed=3)
    cb = ulb.Codebook4([-2, -1, 0, 1])
    packed = ulb.pack_int2(codes, codebook=cb)
    weights = ulb.decode_weights(packed)
    lut = np.array([-2, -1, 0, 1], dtype=np.int8)
    np.testing.assert_array_equal(weights, lut[codes])


def test_gemv_matches_numpy():
    codes = random_codes(96, 64, 2, seed=4)
    packed = ulb.pack_int2(codes)
    rng = np.random.default_rng(5)
    act = ulb.QuantizedVector(rng.integers(-127, 128, size=64, dtype=np.int8), 1.0)

    acc = ulb.gemv_int2(packed, act)
    ref = ulb.decode_weights(packed).astype(np.int64) @ act.values.astype(np.int64)
    np.testing.assert_array_equal(acc.astype(np.int64), ref)

    par = ulb.parallel_gemv(packed, act, workers=4, chunk_blocks=1)
    np.testing.assert_array_equal(par, acc)

    packed1 = ulb.pack_int1(random_codes(96, 64, 1, seed=6))
    acc1 = ulb.gemv_int1(packed1, act)
    ref1 = ulb.decode_weights(packed1).astype(np.int64) @ act.values.astype(np.int64)
    np.testing.assert_array_equal(acc1.astype(np.int64), ref1)


def test_variants_agree_when_simd_present():
    if not ulb.simd_available():
        pytest.skip("no simd on this host")
    codes = random_codes(128, 128, 2, seed=7)
    packed = ulb.pack_int2(codes)
    rng = np.random.default_rng(8)
    act = ulb.QuantizedVector(rng.integers(-127, 128, size=128, dtype=np.int8), 1.0)
    np.testing.assert_array_equal(
        ulb.gemv_int2(packed, act, variant=ulb.Variant.scalar),
        ulb.gemv_int2(packed, act, variant=ulb.Variant.simd),
    )


def test_quantize_round_trip_error_bound():
    rng = np.random.default_rng(9)
    x = rng.uniform(-5.0, 5.0, size=1024).astype(np.float32)
    q = ulb.quantize_activations(x)
    assert q.scale > 0
    assert q.values.min() >= -127 and q.values.max() <= 127
    err = np.abs(x - q.values.astype(np.float64) * q.scale)
    assert err.max() <= q.scale / 2 + 1e-6

    y = ulb.dequantize_output(np.array([10, -10], dtype=np.int32), 0.5)
    np.testing.assert_allclose(y, [5.0, -5.0])


def test_file_round_trip(tmp_path):
    codes = random_codes(32, 16, 2, seed=10)
    scales = np.linspace(0.5, 1.5, 32, dtype=np.float32)
    packed = ulb.pack_int2(codes, row_scales=scales)
    path = str(tmp_path / "weights.ulbw")
    ulb.write_packed(packed, path)
    back = ulb.read_packed(path)
    assert back.payload == packed.payload
    np.testing.assert_array_equal(back.row_scales, scales)
    np.testing.assert_array_equal(ulb.decode_codes(back), codes)


def test_roofline_constants():
    int2 = ulb.builtin_profile("int2")
    assert ulb.effective_bw(1e9, int2.bytes_per_vector_b, int2.gamma_p) == pytest.approx(6.4)
    assert ulb.effective_bw(1e9, int2.bytes_per_vector_b, int2.gamma_e) == pytest.approx(3.68, abs=5e-3)
    report = ulb.modeled_aggregate_bw(ulb.builtin_platform("arl"), int2)
    assert report.aggregate_gbs == pytest.approx(98.0)
    assert report.bound_p == ulb.Bound.bandwidth_bound

    assert ulb.amdahl_speedup(0.96, 16) == pytest.approx(10.0)
    assert ulb.amdahl_speedup(0.5, 1) == pytest.approx(1.0)

    assert ulb.ideal_seconds(1600, 1600, 2, 98.0) * 1e6 == pytest.approx(6.53, abs=5e-3)


def test_upconvert_primitives():
    out = ulb.upconvert_word_int1(0)
    np.testing.assert_array_equal(out, np.ones(32, dtype=np.int8))
    out = ulb.upconvert_word_int1(0xFFFFFFFF)
    np.testing.assert_array_equal(out, -np.ones(32, dtype=np.int8))

    unit = bytes(32)
    vals = ulb.upconvert_block_int2(unit, ulb.Codebook4([-2, -1, 0, 1]))
    np.testing.assert_array_equal(vals, np.full(128, -2, dtype=np.int8))


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        ulb.pack_int2(random_codes(31, 4, 2))  # rows not divisible by 32
    with pytest.raises(RuntimeError):
        ulb.read_packed("/nonexistent/path.ulbw")
    with pytest.raises(ValueError):
        ulb.amdahl_speedup(1.5, 8)
