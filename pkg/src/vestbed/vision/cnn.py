"""From-scratch CNN forward pass for 6-class hand-sign recognition.

Seven 3x3 conv+ReLU stages, each followed by 2x2 max pooling, collapse the
128x128 binary input to a 512-vector; two fully connected layers produce the
softmax over classes 0-5. Inference only; weights come from a file or a
seeded initializer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, preprocess

N_CLASSES = 6
INPUT_SIZE = 128
CONV_FILTERS = (8, 16, 32, 64, 128, 256, 512)
FC1_IN, FC1_OUT = 512, 128
FC2_IN, FC2_OUT = 128, N_CLASSES
KERNEL_SIZE = 3

WEIGHTS_MAGIC = b"VESTCNN1"

CLASS_WORDS = ("zero", "one", "two", "three", "four", "five")


class ShapeError(Exception):
    pass


class WeightsFormatError(Exception):
    pass


@dataclass
class CnnWeights:
    conv_kernels: list  # (3, 3, c_in, c_out) float32 per stage
    conv_biases: list   # (c_out,) float32
    fc1_w: np.ndarray   # (512, 128)
    fc1_b: np.ndarray
    fc2_w: np.ndarray   # (128, 6)
    fc2_b: np.ndarray


def conv_shapes() -> list[tuple[int, int]]:
    """(c_in, c_out) per conv stage."""
    chans = (1,) + CONV_FILTERS
    return list(zip(chans[:-1], chans[1:]))


def expected_output_sizes() -> list[str]:
    """The 16 per-layer output sizes, conv/pool pairs then the two FC layers."""
    sizes = []
    side = INPUT_SIZE
    for c_out in CONV_FILTERS:
        sizes.append(f"{side} x {side} x {c_out}")
        side //= 2
        sizes.append(f"{side} x {side} x {c_out}")
    sizes.append(f"1 x 1 x {FC1_OUT}")
    sizes.append(f"1 x 1 x {FC2_OUT}")
    return sizes


def parameter_counts() -> list[int]:
    """Learnable parameter count per weighted layer (7 convs, 2 FCs)."""
    counts = [KERNEL_SIZE * KERNEL_SIZE * c_in * c_out + c_out
              for c_in, c_out in conv_shapes()]
    counts.append(FC1_IN * FC1_OUT + FC1_OUT)
    counts.append(FC2_IN * FC2_OUT + FC2_OUT)
    return counts


def total_parameter_count() -> int:
    return sum(parameter_counts())


def generate_weights(seed: int = 0) -> CnnWeights:
    """Deterministic He-scaled random weights for tests and demos."""
    rng = np.random.default_rng(seed)
    conv_kernels, conv_biases = [], []
    for c_in, c_out in conv_shapes():
        fan_in = KERNEL_SIZE * KERNEL_SIZE * c_in
        k = rng.standard_normal((KERNEL_SIZE, KERNEL_SIZE, c_in, c_out))
        conv_kernels.append((k * np.sqrt(2.0 / fan_in)).astype(np.float32))
        conv_biases.append(np.zeros(c_out, dtype=np.float32))
    fc1_w = (rng.standard_normal((FC1_IN, FC1_OUT)) / np.sqrt(FC1_IN)).astype(np.float32)
    fc2_w = (rng.standard_normal((FC2_IN, FC2_OUT)) / np.sqrt(FC2_IN)).astype(np.float32)
    return CnnWeights(conv_kernels, conv_biases,
                      fc1_w, np.zeros(FC1_OUT, dtype=np.float32),
                      fc2_w, np.zeros(FC2_OUT, dtype=np.float32))


def save_weights(path: str | Path, weights: CnnWeights) -> None:
    """Little-endian float32 blob: per conv, kernel (c_out slowest) then bias;
    per FC, matrix (in x out) then bias."""
    chunks = [WEIGHTS_MAGIC]
    for k, b in zip(weights.conv_kernels, weights.conv_biases):
        chunks.append(np.ascontiguousarray(
            k.transpose(3, 0, 1, 2), dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    for m, b in ((weights.fc1_w, weights.fc1_b), (weights.fc2_w, weights.fc2_b)):
        chunks.append(np.ascontiguousarray(m, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_weights(path: str | Path) -> CnnWeights:
    data = Path(path).read_bytes()
    if data[:8] != WEIGHTS_MAGIC:
        raise WeightsFormatError(
            f"bad magic at byte 0: {data[:8]!r}, expected {WEIGHTS_MAGIC!r}")
    floats = np.frombuffer(data, dtype="<f4", offset=8)
    expected = total_parameter_count()
    if len(floats) != expected:
        raise WeightsFormatError(
            f"expected {expected} floats, found {len(floats)}")
    pos = 0

    def take(n: int) -> np.ndarray:
        nonlocal pos
        chunk = floats[pos:pos + n]
        pos += n
        return np.array(chunk, dtype=np.float32)

    conv_kernels, conv_biases = [], []
    for c_in, c_out in conv_shapes():
        k = take(KERNEL_SIZE * KERNEL_SIZE * c_in * c_out)
        k = k.reshape(c_out, KERNEL_SIZE, KERNEL_SIZE, c_in).transpose(1, 2, 3, 0)
        conv_kernels.append(np.ascontiguousarray(k))
        conv_biases.append(take(c_out))
    fc1_w = take(FC1_IN * FC1_OUT).reshape(FC1_IN, FC1_OUT)
    fc1_b = take(FC1_OUT)
    fc2_w = take(FC2_IN * FC2_OUT).reshape(FC2_IN, FC2_OUT)
    fc2_b = take(FC2_OUT)
    return CnnWeights(conv_kernels, conv_biases, fc1_w, fc1_b, fc2_w, fc2_b)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64) - float(np.max(logits))
    e = np.exp(z)
    return e / e.sum()


def forward(image01: np.ndarray, weights: CnnWeights,
            trace: list | None = None) -> np.ndarray:
    """Run the network on a 128x128(x1) input; returns the 6 class probs.

    When `trace` is given, each layer appends its output size string.
    """
    x = np.asarray(image01, dtype=np.float32)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.shape != (INPUT_SIZE, INPUT_SIZE, 1):
        raise ShapeError(f"input: expected 128x128x1, got {x.shape}")

    def note(t: np.ndarray) -> None:
        if trace is not None:
            trace.append(f"{t.shape[0]} x {t.shape[1]} x {t.shape[2]}")

    for i, (kernel, bias) in enumerate(zip(weights.conv_kernels,
                                           weights.conv_biases)):
        c_in, c_out = conv_shapes()[i]
        if kernel.shape != (KERNEL_SIZE, KERNEL_SIZE, c_in, c_out):
            raise ShapeError(
                f"conv layer {2 * i + 1}: kernel {kernel.shape}, "
                f"expected {(KERNEL_SIZE, KERNEL_SIZE, c_in, c_out)}")
        x = kernels.conv2d_same(x, kernel, bias)
        np.maximum(x, 0.0, out=x)  # ReLU
        note(x)
        x = kernels.maxpool2(x)
        note(x)

    flat = x.reshape(-1)
    if flat.shape[0] != FC1_IN or weights.fc1_w.shape != (FC1_IN, FC1_OUT):
        raise ShapeError(f"fc layer 15: weight {weights.fc1_w.shape}, "
                         f"expected {(FC1_IN, FC1_OUT)}")
    hidden = np.maximum(flat @ weights.fc1_w + weights.fc1_b, 0.0)
    if trace is not None:
        trace.append(f"1 x 1 x {hidden.shape[0]}")
    if weights.fc2_w.shape != (FC2_IN, FC2_OUT):
        raise ShapeError(f"fc layer 16: weight {weights.fc2_w.shape}, "
                         f"expected {(FC2_IN, FC2_OUT)}")
    probs = softmax(hidden @ weights.fc2_w + weights.fc2_b)
    if trace is not None:
        trace.append(f"1 x 1 x {probs.shape[0]}")
    return probs


def classify(raw_image: np.ndarray, weights: CnnWeights,
             trace: list | None = None) -> tuple[int, np.ndarray]:
    """Full chain: preprocess then forward; ties go to the lowest class."""
    binary = preprocess.preprocess(raw_image)
    probs = forward(binary, weights, trace)
    return int(np.argmax(probs)), probs
