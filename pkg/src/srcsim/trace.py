"""Spiking input traces: generation, binary container, COE export.

A trace is the frame-by-frame stimulus fed to the network: per frame a
binary pixel vector plus three sideband fields, u_reset (hold the
network in reset), u_cmp (capture the prediction this frame) and
cmp_val (the 4-bit target digit).

Generation from a binary image: n_reset all-zero frames with u_reset
asserted, then n_active frames where each ON pixel fires Bernoulli(p)
with a one-frame refractory veto (a pixel never fires in consecutive
frames).  u_cmp is asserted on the final frame only.  The draw matrix
is consumed for every pixel of every active frame regardless of the ON
mask, so the stream layout is fixed by (width, n_active) alone.

SPT container (little-endian):

    offset  size  field
    0       4     magic "SPT1"
    4       4     u32 frame_count
    8       4     u32 pixel_count
    12      4     u32 reset_frames
    16      8     u64 seed
    24      1     u8  label
    25      ...   frame_count records of ceil((pixel_count+6)/8) bytes

Frame record bit layout, LSB-first within each byte: bits 0..P-1 the
pixels, bit P u_reset, bit P+1 u_cmp, bits P+2..P+5 cmp_val with the
MSB at bit P+2.

COE export writes one radix-2 word per frame, MSB (= highest bit
index) first, plus a leading comment that carries the generation
fields so the text form round-trips losslessly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

SPT_MAGIC = b"SPT1"
_HEADER = struct.Struct("<4sIIIQB")
CTRL_BITS = 6  # u_reset, u_cmp, 4-bit cmp_val


@dataclass(frozen=True)
class FrameCtrl:
    u_reset: int = 0
    u_cmp: int = 0
    cmp_val: int = 0


@dataclass(frozen=True)
class TraceMeta:
    reset_frames: int
    active_frames: int
    p_max: Fraction | None = None


@dataclass
class SpikingTrace:
    frames: np.ndarray  # uint8, shape (frame_count, pixel_count), values 0/1
    ctrl: list[FrameCtrl]
    seed: int
    meta: TraceMeta = field(default=TraceMeta(0, 0))

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def pixel_count(self) -> int:
        return self.frames.shape[1]

    @property
    def label(self) -> int:
        return self.ctrl[-1].cmp_val

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpikingTrace):
            return NotImplemented
        return (
            self.frames.shape == other.frames.shape
            and bool(np.array_equal(self.frames, other.frames))
            and self.ctrl == other.ctrl
            and self.seed == other.seed
            and self.meta.reset_frames == other.meta.reset_frames
        )


def binarize(image: np.ndarray) -> np.ndarray:
    """Flatten row-major and threshold at half intensity: byte >= 128 -> 1."""
    return (np.asarray(image).ravel() >= 128).astype(np.uint8)


def generate_spt(
    binary: np.ndarray,
    label: int,
    n_active: int = 200,
    n_reset: int = 20,
    p_max: Fraction = Fraction(1, 4),
    seed: int = 0,
    pixel_probs: np.ndarray | None = None,
) -> SpikingTrace:
    """Build the stochastic trace for one binary image.  Deterministic in seed."""
    on = np.asarray(binary, dtype=np.uint8).ravel()
    if on.size == 0:
        raise ValueError("empty trace")
    if not 0 <= label <= 9:
        raise ValueError("invalid label")
    if n_active < 1 or n_reset < 0:
        raise ValueError("invalid frame counts")
    if not 0 < p_max <= 1:
        raise ValueError("invalid firing probability")
    probs = np.full(on.size, float(p_max)) if pixel_probs is None else np.asarray(pixel_probs, float)
    if probs.shape != on.shape:
        raise ValueError("dimension mismatch")

    rng = np.random.default_rng(seed)
    draws = rng.random((n_active, on.size)) < probs

    frames = np.zeros((n_reset + n_active, on.size), dtype=np.uint8)
    prev = np.zeros(on.size, dtype=bool)
    on_mask = on.astype(bool)
    for t in range(n_active):
        fire = draws[t] & on_mask & ~prev
        frames[n_reset + t] = fire
        prev = fire

    ctrl = [
        FrameCtrl(u_reset=1 if t < n_reset else 0,
                  u_cmp=1 if t == n_reset + n_active - 1 else 0,
                  cmp_val=label)
        for t in range(n_reset + n_active)
    ]
    return SpikingTrace(frames=frames, ctrl=ctrl, seed=seed,
                        meta=TraceMeta(n_reset, n_active, p_max))


# ============================================================
# bit packing shared by the binary and COE forms
# ============================================================


def _frame_bits(trace: SpikingTrace) -> np.ndarray:
    """(frame_count, pixel_count+6) 0/1 matrix in bit-index order."""
    f, p = trace.frames.shape
    bits = np.zeros((f, p + CTRL_BITS), dtype=np.uint8)
    bits[:, :p] = trace.frames
    for t, c in enumerate(trace.ctrl):
        bits[t, p] = c.u_reset
        bits[t, p + 1] = c.u_cmp
        for k in range(4):  # MSB of cmp_val at the lowest of the four bit indices
            bits[t, p + 2 + k] = (c.cmp_val >> (3 - k)) & 1
    return bits


def _bits_to_trace(bits: np.ndarray, seed: int, reset_frames: int,
                   p_max: Fraction | None) -> SpikingTrace:
    p = bits.shape[1] - CTRL_BITS
    ctrl = []
    for t in range(bits.shape[0]):
        cmp_val = 0
        for k in range(4):
            cmp_val = (cmp_val << 1) | int(bits[t, p + 2 + k])
        ctrl.append(FrameCtrl(int(bits[t, p]), int(bits[t, p + 1]), cmp_val))
    frames = np.ascontiguousarray(bits[:, :p])
    return SpikingTrace(frames=frames, ctrl=ctrl, seed=seed,
                        meta=TraceMeta(reset_frames, bits.shape[0] - reset_frames, p_max))


def serialize_spt(trace: SpikingTrace, path: str) -> None:
    if trace.frame_count == 0:
        raise ValueError("empty trace")
    bits = _frame_bits(trace)
    packed = np.packbits(bits, axis=1, bitorder="little")
    header = _HEADER.pack(SPT_MAGIC, trace.frame_count, trace.pixel_count,
                          trace.meta.reset_frames, trace.seed, trace.label)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(packed.tobytes())


def parse_spt(path: str) -> SpikingTrace:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != SPT_MAGIC:
        raise ValueError("bad magic")
    if len(blob) < _HEADER.size:
        raise ValueError("malformed header")
    _, frame_count, pixel_count, reset_frames, seed, label = _HEADER.unpack_from(blob)
    if frame_count == 0:
        raise ValueError("empty trace")
    if reset_frames > frame_count:
        raise ValueError("malformed header")
    rec = (pixel_count + CTRL_BITS + 7) // 8
    body = blob[_HEADER.size:]
    if len(body) != frame_count * rec:
        raise ValueError("truncated frame")
    raw = np.frombuffer(body, dtype=np.uint8).reshape(frame_count, rec)
    bits = np.unpackbits(raw, axis=1, bitorder="little")[:, : pixel_count + CTRL_BITS]
    trace = _bits_to_trace(bits, seed, reset_frames, None)
    for c in trace.ctrl:
        if c.cmp_val > 9:
            raise ValueError("bad label")
    if trace.label != label:
        raise ValueError("label mismatch")
    if [c.u_reset for c in trace.ctrl] != [1] * reset_frames + [0] * (frame_count - reset_frames):
        raise ValueError("reset window mismatch")
    return trace


# ============================================================
# COE text form
# ============================================================


def export_coe(trace: SpikingTrace, path: str) -> None:
    if trace.frame_count == 0:
        raise ValueError("empty trace")
    bits = _frame_bits(trace)
    p = "none" if trace.meta.p_max is None else str(trace.meta.p_max)
    lines = [
        f"; spt frames={trace.frame_count} pixels={trace.pixel_count}"
        f" reset={trace.meta.reset_frames} seed={trace.seed}"
        f" label={trace.label} p={p}",
        "memory_initialization_radix=2;",
        "memory_initialization_vector=",
    ]
    last = trace.frame_count - 1
    for t in range(trace.frame_count):
        word = "".join("1" if b else "0" for b in bits[t, ::-1])
        lines.append(word + (";" if t == last else ","))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_coe(path: str) -> SpikingTrace:
    meta = {}
    words = []
    radix = None
    in_vector = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith(";"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            if line.startswith("memory_initialization_radix"):
                radix = int(line.split("=")[1].rstrip(";"))
                continue
            if line.startswith("memory_initialization_vector"):
                in_vector = True
                continue
            if in_vector:
                words.extend(w for w in line.rstrip(";").split(",") if w)
    if radix != 2:
        raise ValueError("unsupported radix")
    if not words:
        raise ValueError("empty trace")
    width = len(words[0])
    if any(len(w) != width or set(w) - {"0", "1"} for w in words):
        raise ValueError("malformed word")
    bits = np.array([[1 if ch == "1" else 0 for ch in w[::-1]] for w in words], dtype=np.uint8)
    seed = int(meta.get("seed", 0))
    reset = int(meta.get("reset", 0))
    p_raw = meta.get("p", "none")
    p_max = None if p_raw == "none" else Fraction(p_raw)
    return _bits_to_trace(bits, seed, reset, p_max)
