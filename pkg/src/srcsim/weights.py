"""Weight quantization, containers and hardware export.

Quantization maps a float matrix to signed integers with a single
global scale: s = 255 / max|w|, v9 = sat(round_half_away(w*s), -256,
+255), and narrower widths drop low bits, v_b = v9 >> (9-b).  The
scale is exposed separately so alternative mappings can be tested
against the same containers.

Binary containers (little-endian):

    WMF1  float matrix:  "WMF1", u32 rows, u32 cols, rows*cols f32
    WMQ1  quant matrix:  "WMQ1", u32 rows, u32 cols, u8 bit_width,
                         rows*cols i16

Hardware export emits deterministic text: a VHDL constant package or a
radix-2 COE image, one matrix row per word, column 0 leftmost, each
value as a bit_width-wide two's-complement field.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, field

import numpy as np

FLOAT_MAGIC = b"WMF1"
QUANT_MAGIC = b"WMQ1"
_FLOAT_HEADER = struct.Struct("<4sII")
_QUANT_HEADER = struct.Struct("<4sIIB")

Q_FULL_BITS = 9
Q_MIN, Q_MAX = -256, 255

_IDENT = re.compile(r"^[A-Za-z](_?[A-Za-z0-9])*$")  # VHDL basic identifier


@dataclass
class WeightMatrix:
    rows: int
    cols: int
    bit_width: int
    values: np.ndarray  # int16, shape (rows, cols)

    def __post_init__(self) -> None:
        if not 2 <= self.bit_width <= Q_FULL_BITS:
            raise ValueError("bit width out of range")
        if self.values.shape != (self.rows, self.cols):
            raise ValueError("dimension mismatch")
        lo, hi = -(1 << (self.bit_width - 1)), (1 << (self.bit_width - 1)) - 1
        if self.values.min(initial=0) < lo or self.values.max(initial=0) > hi:
            raise ValueError("value out of range")

    def sha256(self) -> str:
        return hashlib.sha256(self.values.astype("<i2").tobytes()).hexdigest()


@dataclass
class IrWeightBits:
    rows: int
    cols: int
    bits: np.ndarray  # uint8, shape (rows, cols), values 0/1

    def __post_init__(self) -> None:
        if self.bits.shape != (self.rows, self.cols):
            raise ValueError("dimension mismatch")
        if np.any(self.bits > 1):
            raise ValueError("value out of range")


def global_scale(float_matrix: np.ndarray) -> float:
    a = np.asarray(float_matrix, dtype=np.float64)
    if not np.isfinite(a).all():
        raise ValueError("non-finite weight")
    m = float(np.max(np.abs(a))) if a.size else 0.0
    if m == 0.0:
        raise ValueError("degenerate scale")
    return 255.0 / m


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))


def quantize(float_matrix: np.ndarray, bit_width: int) -> WeightMatrix:
    """Global max-abs scaling to 9 bits, then arithmetic shift to bit_width."""
    if not 2 <= bit_width <= Q_FULL_BITS:
        raise ValueError("bit width out of range")
    a = np.asarray(float_matrix, dtype=np.float64)
    s = global_scale(a)
    v9 = np.clip(_round_half_away(a * s), Q_MIN, Q_MAX).astype(np.int64)
    v = v9 >> (Q_FULL_BITS - bit_width)
    return WeightMatrix(a.shape[0], a.shape[1], bit_width, v.astype(np.int16))


# ============================================================
# binary containers
# ============================================================


def save_float_matrix(matrix: np.ndarray, path: str) -> None:
    a = np.asarray(matrix, dtype=np.float32)
    if not np.isfinite(a).all():
        raise ValueError("non-finite weight")
    with open(path, "wb") as fh:
        fh.write(_FLOAT_HEADER.pack(FLOAT_MAGIC, a.shape[0], a.shape[1]))
        fh.write(a.astype("<f4").tobytes())


def load_float_matrix(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FLOAT_MAGIC:
        raise ValueError("bad magic")
    if len(blob) < _FLOAT_HEADER.size:
        raise ValueError("corrupt header")
    _, rows, cols = _FLOAT_HEADER.unpack_from(blob)
    body = blob[_FLOAT_HEADER.size:]
    if len(body) != rows * cols * 4:
        raise ValueError("truncated matrix")
    a = np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(a).all():
        raise ValueError("non-finite weight")
    return a


def save_matrix(matrix: WeightMatrix, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(_QUANT_HEADER.pack(QUANT_MAGIC, matrix.rows, matrix.cols, matrix.bit_width))
        fh.write(matrix.values.astype("<i2").tobytes())


def load_matrix(path: str, expected_sha256: str | None = None) -> WeightMatrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != QUANT_MAGIC:
        raise ValueError("bad magic")
    if len(blob) < _QUANT_HEADER.size:
        raise ValueError("corrupt header")
    _, rows, cols, bit_width = _QUANT_HEADER.unpack_from(blob)
    if not 2 <= bit_width <= Q_FULL_BITS:
        raise ValueError("bit width out of range")
    body = blob[_QUANT_HEADER.size:]
    if len(body) != rows * cols * 2:
        raise ValueError("truncated matrix")
    values = np.frombuffer(body, dtype="<i2").reshape(rows, cols).astype(np.int16)
    m = WeightMatrix(rows, cols, bit_width, values)
    if expected_sha256 is not None and m.sha256() != expected_sha256:
        raise ValueError("hash mismatch")
    return m


# ============================================================
# store with provenance
# ============================================================


@dataclass
class WeightStore:
    _entries: dict = field(default_factory=dict)

    def add(self, matrix_id: str, matrix, provenance: dict | None = None) -> None:
        if matrix_id in self._entries:
            raise ValueError("duplicate matrix id")
        self._entries[matrix_id] = (matrix, dict(provenance or {}))

    def get(self, matrix_id: str):
        try:
            return self._entries[matrix_id][0]
        except KeyError:
            raise ValueError("unknown matrix id") from None

    def provenance(self, matrix_id: str) -> dict:
        try:
            return self._entries[matrix_id][1]
        except KeyError:
            raise ValueError("unknown matrix id") from None

    def ids(self) -> list[str]:
        return list(self._entries)


# ============================================================
# hardware text export
# ============================================================


def _check_identifier(name: str) -> str:
    if not _IDENT.match(name):
        raise ValueError("invalid identifier")
    return name


def _bin_field(value: int, width: int) -> str:
    return format(value & ((1 << width) - 1), f"0{width}b")


def emit_vhdl_pkg(matrix: WeightMatrix | IrWeightBits, name: str) -> str:
    """Deterministic VHDL package holding the matrix as a constant ROM."""
    _check_identifier(name)
    up = name.upper()
    if isinstance(matrix, IrWeightBits):
        width = 1
        sha = hashlib.sha256(matrix.bits.astype("<u1").tobytes()).hexdigest()
        rows = ['"' + "".join("1" if b else "0" for b in r) + '"' for r in matrix.bits]
        row_type = f"  type {name}_rom_t is array (0 to {matrix.rows - 1}) of std_logic_vector({matrix.cols - 1} downto 0);"
    else:
        width = matrix.bit_width
        sha = matrix.sha256()
        rows = [
            "(" + ", ".join(f'{i} => "{_bin_field(int(v), width)}"' for i, v in enumerate(r)) + ")"
            for r in matrix.values
        ]
        row_type = (
            f"  type {name}_row_t is array (0 to {matrix.cols - 1}) of signed({width - 1} downto 0);\n"
            f"  type {name}_rom_t is array (0 to {matrix.rows - 1}) of {name}_row_t;"
        )
    body = ",\n".join(f"    {i} => {r}" for i, r in enumerate(rows))
    return (
        f"-- {name} : weight ROM {matrix.rows} x {matrix.cols},"
        f" {width}-bit entries\n"
        f"-- sha256 : {sha}\n"
        "library ieee;\n"
        "use ieee.std_logic_1164.all;\n"
        "use ieee.numeric_std.all;\n"
        "\n"
        f"package {name}_pkg is\n"
        f"  constant {up}_ROWS  : natural := {matrix.rows};\n"
        f"  constant {up}_COLS  : natural := {matrix.cols};\n"
        f"  constant {up}_WIDTH : natural := {width};\n"
        f"{row_type}\n"
        f"  constant {up}_ROM : {name}_rom_t := (\n"
        f"{body}\n"
        "  );\n"
        f"end package {name}_pkg;\n"
    )


def emit_coe(matrix: WeightMatrix | IrWeightBits) -> str:
    """Radix-2 COE image, one word per matrix row, column 0 leftmost."""
    if isinstance(matrix, IrWeightBits):
        sha = hashlib.sha256(matrix.bits.astype("<u1").tobytes()).hexdigest()
        width = 1
        words = ["".join("1" if b else "0" for b in r) for r in matrix.bits]
    else:
        sha = matrix.sha256()
        width = matrix.bit_width
        words = ["".join(_bin_field(int(v), width) for v in r) for r in matrix.values]
    lines = [
        f"; rom rows={len(words)} cols={matrix.cols} width={width} sha256={sha}",
        "memory_initialization_radix=2;",
        "memory_initialization_vector=",
    ]
    lines.extend(w + ("," if i < len(words) - 1 else ";") for i, w in enumerate(words))
    return "\n".join(lines) + "\n"
