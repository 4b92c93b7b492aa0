"""CNN forward pass against a naive direct-convolution oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vestbed.vision import cnn, kernels


def conv_oracle(x, kernel, bias):
    """Naive 6-loop zero-padded cross-correlation in float64."""
    x = x.astype(np.float64)
    kernel = kernel.astype(np.float64)
    h, w, c_in = x.shape
    kh, kw, _, c_out = kernel.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros((h, w, c_out))
    for y in range(h):
        for xx in range(w):
            for co in range(c_out):
                acc = float(bias[co])
                for dy in range(kh):
                    for dx in range(kw):
                        sy, sx = y + dy - ry, xx + dx - rx
                        if 0 <= sy < h and 0 <= sx < w:
                            for ci in range(c_in):
                                acc += x[sy, sx, ci] * kernel[dy, dx, ci, co]
                out[y, xx, co] = acc
    return out


def rel_error(fast, oracle):
    scale = max(1.0, float(np.max(np.abs(oracle))))
    return float(np.max(np.abs(fast - oracle))) / scale


class TestConv2d:
    def test_identity_kernel(self):
        x = np.array([[[2.0]]], dtype=np.float32)
        k = np.zeros((3, 3, 1, 1), dtype=np.float32)
        k[1, 1, 0, 0] = 1.0
        out = kernels.conv2d_same(x, k, np.zeros(1, dtype=np.float32))
        assert out[0, 0, 0] == 2.0

    def test_zero_kernel_bias_only(self):
        x = np.ones((4, 4, 2), dtype=np.float32)
        k = np.zeros((3, 3, 2, 3), dtype=np.float32)
        out = kernels.conv2d_same(x, k, np.full(3, 0.5, dtype=np.float32))
        assert np.allclose(out, 0.5)

    def test_random_tensor_matches_oracle(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((8, 8, 2)).astype(np.float32)
        k = rng.standard_normal((3, 3, 2, 3)).astype(np.float32)
        b = rng.standard_normal(3).astype(np.float32)
        fast = kernels.conv2d_same(x, k, b)
        assert rel_error(fast, conv_oracle(x, k, b)) <= 1e-5

    def test_numpy_path_matches_oracle(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((6, 7, 3)).astype(np.float32)
        k = rng.standard_normal((3, 3, 3, 4)).astype(np.float32)
        b = rng.standard_normal(4).astype(np.float32)
        fast = kernels.conv2d_same_numpy(x, k, b)
        assert rel_error(fast, conv_oracle(x, k, b)) <= 1e-5

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 6), st.integers(2, 6), st.integers(1, 3),
           st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_property_fast_equals_oracle(self, h, w, c_in, c_out, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((h, w, c_in)).astype(np.float32)
        k = rng.standard_normal((3, 3, c_in, c_out)).astype(np.float32)
        b = rng.standard_normal(c_out).astype(np.float32)
        assert rel_error(kernels.conv2d_same(x, k, b), conv_oracle(x, k, b)) <= 1e-5


class TestMaxpool:
    def test_two_by_two(self):
        x = np.array([[1, 2], [3, 4]], dtype=np.float32).reshape(2, 2, 1)
        assert kernels.maxpool2(x)[0, 0, 0] == 4.0

    def test_constant_halves_resolution(self):
        x = np.full((8, 8, 3), 2.5, dtype=np.float32)
        out = kernels.maxpool2(x)
        assert out.shape == (4, 4, 3)
        assert np.all(out == 2.5)

    def test_table_row_two_shape(self):
        x = np.zeros((128, 128, 8), dtype=np.float32)
        assert kernels.maxpool2(x).shape == (64, 64, 8)


class TestForward:
    def test_zero_final_layer_gives_uniform_probs(self):
        w = cnn.generate_weights(0)
        w.fc2_w = np.zeros_like(w.fc2_w)
        w.fc2_b = np.zeros_like(w.fc2_b)
        rng = np.random.default_rng(0)
        probs = cnn.forward(rng.random((128, 128)), w)
        assert np.allclose(probs, 1.0 / 6.0, atol=1e-9)

    def test_shape_trace_is_table(self):
        trace = []
        cnn.forward(np.zeros((128, 128, 1), dtype=np.float32),
                    cnn.generate_weights(0), trace)
        assert trace == cnn.expected_output_sizes()
        assert len(trace) == 16

    def test_probs_sum_to_one(self):
        probs = cnn.forward(np.ones((128, 128)), cnn.generate_weights(3))
        assert abs(probs.sum() - 1.0) <= 1e-6
        assert np.all(probs >= 0)

    def test_bad_input_shape(self):
        with pytest.raises(cnn.ShapeError):
            cnn.forward(np.zeros((64, 64)), cnn.generate_weights(0))

    def test_shape_error_names_layer(self):
        w = cnn.generate_weights(0)
        w.conv_kernels[2] = w.conv_kernels[2][:, :, :4, :]
        with pytest.raises(cnn.ShapeError, match="layer 5"):
            cnn.forward(np.zeros((128, 128)), w)

    def test_deterministic(self):
        w = cnn.generate_weights(1)
        x = np.random.default_rng(9).random((128, 128))
        assert np.array_equal(cnn.forward(x, w), cnn.forward(x, w))


def count_oracle():
    """Independent parameter counting from the layer table alone."""
    conv_channels = [(1, 8), (8, 16), (16, 32), (32, 64), (64, 128),
                     (128, 256), (256, 512)]
    counts = [3 * 3 * ci * co + co for ci, co in conv_channels]
    counts += [512 * 128 + 128, 128 * 6 + 6]
    return counts


class TestParameterCounts:
    def test_per_layer_counts(self):
        assert cnn.parameter_counts() == count_oracle()

    def test_frozen_anchors(self):
        counts = count_oracle()
        assert counts[0] == 80
        assert counts[6] == 1_180_160
        assert counts[7] == 65_664
        assert counts[8] == 774

    def test_total(self):
        assert cnn.total_parameter_count() == sum(count_oracle())


class TestWeightsFile:
    def test_roundtrip(self, tmp_path):
        w = cnn.generate_weights(4)
        path = tmp_path / "w.bin"
        cnn.save_weights(path, w)
        loaded = cnn.load_weights(path)
        for a, b in zip(w.conv_kernels, loaded.conv_kernels):
            assert np.array_equal(a, b)
        assert np.array_equal(w.fc1_w, loaded.fc1_w)
        assert np.array_equal(w.fc2_b, loaded.fc2_b)

    def test_float_count_matches_parameters(self, tmp_path):
        path = tmp_path / "w.bin"
        cnn.save_weights(path, cnn.generate_weights(0))
        blob = path.read_bytes()
        assert len(blob) == 8 + 4 * cnn.total_parameter_count()

    def test_truncated_file_names_counts(self, tmp_path):
        path = tmp_path / "w.bin"
        cnn.save_weights(path, cnn.generate_weights(0))
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) // 2])
        # half of (8 + 4*1640006) bytes leaves 820002 whole floats after magic
        with pytest.raises(cnn.WeightsFormatError,
                           match=r"expected 1640006 floats, found 820002"):
            cnn.load_weights(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(cnn.WeightsFormatError, match="magic"):
            cnn.load_weights(path)

    def test_roundtrip_preserves_forward(self, tmp_path):
        w = cnn.generate_weights(5)
        path = tmp_path / "w.bin"
        cnn.save_weights(path, w)
        x = np.random.default_rng(2).random((128, 128))
        assert np.array_equal(cnn.forward(x, w),
                              cnn.forward(x, cnn.load_weights(path)))


class TestClassify:
    def test_tie_breaks_to_lowest_class(self):
        probs = np.array([0.25, 0.25, 0.2, 0.1, 0.1, 0.1])
        assert int(np.argmax(probs)) == 0

    def test_full_chain_deterministic(self):
        rng = np.random.default_rng(6)
        raw = rng.random((360, 640, 3)) * 255
        w = cnn.generate_weights(0)
        a = cnn.classify(raw, w)
        b = cnn.classify(raw, w)
        assert a[0] == b[0]
        assert np.array_equal(a[1], b[1])
        assert 0 <= a[0] <= 5

    def test_grayscale_pgm_fixture(self, tmp_path):
        from vestbed.vision import image_io
        rng = np.random.default_rng(13)
        frame = (rng.random((360, 640)) * 255).round()
        path = tmp_path / "frame.pgm"
        image_io.save_image(path, frame)
        label, probs = cnn.classify(image_io.load_image(path),
                                    cnn.generate_weights(0))
        assert 0 <= label <= 5
        assert abs(probs.sum() - 1.0) <= 1e-6


class TestSoftmax:
    def test_permutation_equivariant(self):
        logits = np.array([0.3, -1.2, 2.0, 0.0, 1.1, -0.4])
        perm = np.array([3, 1, 4, 0, 5, 2])
        assert np.allclose(cnn.softmax(logits)[perm], cnn.softmax(logits[perm]))

    def test_shift_invariant(self):
        logits = np.array([1.0, 2.0, 3.0, -1.0, 0.0, 0.5])
        assert np.allclose(cnn.softmax(logits), cnn.softmax(logits + 10.0))

    def test_permuting_final_fc_columns_permutes_probs(self):
        w = cnn.generate_weights(8)
        x = np.random.default_rng(4).random((128, 128))
        base = cnn.forward(x, w)
        perm = np.array([5, 3, 0, 1, 4, 2])
        w.fc2_w = np.ascontiguousarray(w.fc2_w[:, perm])
        w.fc2_b = np.ascontiguousarray(w.fc2_b[perm])
        assert np.allclose(cnn.forward(x, w), base[perm], atol=1e-7)
