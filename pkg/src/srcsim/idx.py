"""IDX image/label container parsing (the classic big-endian format).

Images file: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, then
count*rows*cols unsigned bytes.  Labels file: u32 magic 0x00000801,
u32 count, then count unsigned bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class IdxImageSet:
    images: np.ndarray  # uint8, shape (count, rows, cols)
    labels: np.ndarray  # uint8, shape (count,)

    @property
    def count(self) -> int:
        return self.images.shape[0]


def parse_idx(images_path: str, labels_path: str) -> IdxImageSet:
    with open(images_path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16:
            raise ValueError("truncated file")
        magic, count, rows, cols = struct.unpack(">IIII", head)
        if magic != IMAGE_MAGIC:
            raise ValueError("magic mismatch")
        body = fh.read()
    if len(body) != count * rows * cols:
        raise ValueError("truncated file")
    images = np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols)

    with open(labels_path, "rb") as fh:
        head = fh.read(8)
        if len(head) < 8:
            raise ValueError("truncated file")
        magic, lcount = struct.unpack(">II", head)
        if magic != LABEL_MAGIC:
            raise ValueError("magic mismatch")
        lbody = fh.read()
    if len(lbody) != lcount:
        raise ValueError("truncated file")
    if lcount != count:
        raise ValueError("count mismatch")
    labels = np.frombuffer(lbody, dtype=np.uint8)
    return IdxImageSet(images=images.copy(), labels=labels.copy())


def write_idx(image_set: IdxImageSet, images_path: str, labels_path: str) -> None:
    """Inverse of parse_idx, mainly for tests and synthetic datasets."""
    n, rows, cols = image_set.images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        fh.write(image_set.images.astype(np.uint8).tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, n))
        fh.write(image_set.labels.astype(np.uint8).tobytes())
