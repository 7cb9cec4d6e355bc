"""Self-contained synthetic classification task.

Ten overlapping prototype patterns stand in for digit classes: each is
a mix of one shared base field and a class-specific field, so classes
share most of their ON pixels and the margin is carried by the
class-specific remainder.  Dataset images are noisy binarized copies
and the golden weight set is the centered prototype template bank.
Everything is deterministic in the seed, so tests and the CLI demo
need no external data.

Pixel 0 is reserved as a dark scale anchor: it is forced OFF in every
image and carries the largest weight magnitude, which pins the global
quantization scale and keeps template currents just above the firing
onset of the integer cell.  Narrow widths then starve the drive,
because the dropped low bits floor every weight downward, and that is
what produces the sharp accuracy cliff at small bit widths.
"""

from __future__ import annotations

import numpy as np

from .idx import IdxImageSet
from .weights import IrWeightBits

SHAPE = (28, 28)
N_PIXELS = SHAPE[0] * SHAPE[1]
N_CLASSES = 10
BLUR_PASSES = 3
PROTO_DENSITY = 0.30
CLASS_MIX = 0.50  # weight of the class-specific field vs the shared base
FLIP_PROB = 0.05
INHIB_FRAC = 0.70  # off-template weight depth relative to the template level
TEMPLATE_GAIN = 0.64  # template level relative to the anchor magnitude
JITTER = 0.01
ANCHOR = 0  # dark pixel index that pins the quantization scale


def _blur(a: np.ndarray, passes: int) -> np.ndarray:
    k = np.ones(5) / 5.0
    for _ in range(passes):
        a = np.apply_along_axis(lambda r: np.convolve(r, k, mode="same"), 1, a)
        a = np.apply_along_axis(lambda c: np.convolve(c, k, mode="same"), 0, a)
    return a


def prototype_fields(seed: int = 7) -> np.ndarray:
    """(10, 28, 28) smooth fields in [0, 1], one per class, heavily shared."""
    rng = np.random.default_rng((seed, 0))
    base = _blur(rng.normal(size=SHAPE), BLUR_PASSES)
    protos = np.empty((N_CLASSES,) + SHAPE)
    for c in range(N_CLASSES):
        f = (1.0 - CLASS_MIX) * base + CLASS_MIX * _blur(rng.normal(size=SHAPE), BLUR_PASSES)
        f -= f.min()
        f /= f.max()
        protos[c] = f
    return protos


def prototype_masks(protos: np.ndarray) -> np.ndarray:
    """Binary ON masks at the target density, anchor pixel forced dark."""
    masks = np.empty_like(protos, dtype=np.uint8)
    for c in range(protos.shape[0]):
        cut = np.quantile(protos[c], 1.0 - PROTO_DENSITY)
        masks[c] = (protos[c] >= cut).astype(np.uint8)
    masks.reshape(protos.shape[0], -1)[:, ANCHOR] = 0
    return masks


def golden_float_weights(n_per_class: int = 3, seed: int = 7) -> tuple[np.ndarray, IrWeightBits]:
    """Template bank (n_per_class*10, 784) plus the class-membership k bits."""
    masks = prototype_masks(prototype_fields(seed)).reshape(N_CLASSES, -1).astype(np.float64)
    rng = np.random.default_rng((seed, 1))
    n = n_per_class * N_CLASSES
    w = np.empty((n, N_PIXELS))
    for j in range(n):
        c = j % N_CLASSES
        row = TEMPLATE_GAIN * (masks[c] - INHIB_FRAC)
        row += rng.normal(scale=JITTER, size=row.shape)
        w[j] = row
    w[:, ANCHOR] = -1.0
    k_bits = np.zeros((N_CLASSES, n), dtype=np.uint8)
    for j in range(n):
        k_bits[j % N_CLASSES, j] = 1
    return w, IrWeightBits(N_CLASSES, n, k_bits)


def synthetic_dataset(n_images: int, seed: int = 7) -> IdxImageSet:
    """Noisy prototype copies, classes round-robin, pixels 0 or 255."""
    masks = prototype_masks(prototype_fields(seed))
    rng = np.random.default_rng((seed, 2))
    images = np.empty((n_images,) + SHAPE, dtype=np.uint8)
    labels = np.empty(n_images, dtype=np.uint8)
    for i in range(n_images):
        c = i % N_CLASSES
        bits = masks[c] ^ (rng.random(SHAPE) < FLIP_PROB)
        bits.reshape(-1)[ANCHOR] = 0
        images[i] = bits.astype(np.uint8) * 255
        labels[i] = c
    return IdxImageSet(images=images, labels=labels)
