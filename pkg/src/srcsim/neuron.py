"""Spiking recurrent cell (SRC): float reference model and integer hardware twin.

Float cell, the reference dynamical system:

    h[t]   = tanh(I[t] + r*h[t-1] + r_s*h_s[t-1] + b_h)
    h_s[t] = z_s[t]*h_s[t-1] + (1 - z_s[t])*h[t-1]
    z_s[t] = z_hyp - (z_hyp - z_deep) / (1 + exp(-10*(h[t-1] - 0.5)))

Integer cell, the shift-and-add form implemented by the accelerator.
Every signal is scaled by 1000 and held in signed 32-bit registers; the
slow-gate sigmoid collapses to a threshold and the bias/feedback terms
are folded so that only shifts and adds remain:

    z_s[t] = z_hyp_i  if h[t-1] < v_th  else  z_deep_i        (z scaled by 1024)
    h_s[t] = ((z_s[t] * (h_s[t-1] - h[t-1])) >> 10) + h[t-1]
    x[t]   = I[t] + ((h[t-1] - (h_s[t-1] << 2) - 3000) << 1)
    h[t]   = clamp(((x[t] << 1) + x[t]) >> 2, -1000, +1000)

All right shifts are arithmetic (floor division by the power of two).
The scalar steps below run checked arithmetic: any intermediate outside
signed 32-bit raises OverflowError.  Vectorized layer kernels live in
_kernels_py / _kernels_cy and must agree bit for bit with these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1

H_MAX = 1000  # |h| bound after the saturating activation
Z_SCALE_SHIFT = 10  # z factors are scaled by 2**10
BIAS_I = -3000  # folded bias term, half of b_h * 1000
SPIKE_THRESHOLD_INT = 500
SPIKE_THRESHOLD_FLOAT = 0.5

IR_DECODE = (-1, 10)  # k-bit 0 -> -1, 1 -> +10


def _ck(v: int) -> int:
    """Checked 32-bit intermediate: raise instead of silently wrapping."""
    if not INT32_MIN <= v <= INT32_MAX:
        raise OverflowError("integer overflow")
    return v


# ============================================================
# parameter and state containers
# ============================================================


@dataclass(frozen=True)
class SrcParamsFloat:
    r: float = 2.0
    r_s: float = -7.0
    b_h: float = -6.0
    z_hyp: float = 0.910
    z_deep: float = 0.000

    def __post_init__(self) -> None:
        if not (0.0 <= self.z_deep <= self.z_hyp <= 1.0):
            raise ValueError("invalid z parameters")


@dataclass(frozen=True)
class SrcParamsInt:
    z_hyp_i: int = 902
    z_deep_i: int = 100
    v_th: int = 500
    bias_i: int = BIAS_I

    def __post_init__(self) -> None:
        if not (0 <= self.z_deep_i <= self.z_hyp_i <= 1 << Z_SCALE_SHIFT):
            raise ValueError("invalid z parameters")
        if not -H_MAX <= self.v_th <= H_MAX:
            raise ValueError("invalid threshold")


@dataclass
class SrcStateFloat:
    h: float = 0.0
    h_s: float = 0.0
    i_cur: float = 0.0


@dataclass
class SrcStateInt:
    h: int = 0
    h_s: int = 0
    i_cur: int = 0


@dataclass
class IrState:
    s_out: int = 0


@dataclass(frozen=True)
class LeakFactor:
    """Current leak factor beta = num / 2**shift, applied in integer math."""

    num: int = 0
    shift: int = 0

    def __post_init__(self) -> None:
        if self.num < 0 or self.shift < 0:
            raise ValueError("invalid leak factor")
        if self.num > (1 << self.shift):
            raise ValueError("invalid leak factor")  # beta must be <= 1

    @classmethod
    def parse(cls, text: str) -> "LeakFactor":
        f = Fraction(text)
        if f.denominator & (f.denominator - 1):
            raise ValueError("invalid leak factor")  # denominator not a power of two
        return cls(f.numerator, f.denominator.bit_length() - 1)

    def as_float(self) -> float:
        return self.num / (1 << self.shift)

    def apply(self, i_prev: int) -> int:
        return _ck(i_prev * self.num) >> self.shift


BETA_ZERO = LeakFactor(0, 0)
BETA_ONE = LeakFactor(1, 0)


# ============================================================
# float reference step
# ============================================================


def slow_gate_float(h_prev: float, params: SrcParamsFloat) -> float:
    """Sigmoid blend between the two z factors, centred on h = 0.5."""
    return params.z_hyp - (params.z_hyp - params.z_deep) / (1.0 + math.exp(-10.0 * (h_prev - 0.5)))


def src_step_float(
    state: SrcStateFloat, input_current: float, params: SrcParamsFloat = SrcParamsFloat()
) -> SrcStateFloat:
    """One frame of the float cell.  i_cur is stored as given (no leak here)."""
    if not (math.isfinite(input_current) and math.isfinite(state.h) and math.isfinite(state.h_s)):
        raise ValueError("non-finite dynamics")
    z_s = slow_gate_float(state.h, params)
    h_new = math.tanh(input_current + params.r * state.h + params.r_s * state.h_s + params.b_h)
    hs_new = z_s * state.h_s + (1.0 - z_s) * state.h
    if not (math.isfinite(h_new) and math.isfinite(hs_new)):
        raise ValueError("non-finite dynamics")
    return SrcStateFloat(h=h_new, h_s=hs_new, i_cur=input_current)


# ============================================================
# integer hardware step, decomposed like the RTL datapath
# ============================================================


def slow_gate_int(h_prev: int, params: SrcParamsInt) -> int:
    """Threshold rule that replaces the sigmoid: hyper z below v_th, deep z at/above."""
    return params.z_hyp_i if h_prev < params.v_th else params.z_deep_i


def refractory_update(z_s: int, h_prev: int, hs_prev: int) -> int:
    """h_s update: ((z_s * (h_s - h)) >> 10) + h with checked intermediates."""
    prod = _ck(z_s * _ck(hs_prev - h_prev))
    return _ck((prod >> Z_SCALE_SHIFT) + h_prev)


def input_mix(input_current: int, h_prev: int, hs_prev: int, bias: int = BIAS_I) -> int:
    """Drive term x = I + ((h - 4*h_s + bias) << 1) with checked intermediates."""
    inner = _ck(h_prev - _ck(hs_prev << 2) + bias)
    return _ck(input_current + _ck(inner << 1))


def pwf(x: int) -> int:
    """Piecewise activation clamp(floor(3*x/4), -1000, +1000), replaces 1000*tanh(x/1000)."""
    y = _ck(_ck(x << 1) + x) >> 2
    if y > H_MAX:
        return H_MAX
    if y < -H_MAX:
        return -H_MAX
    return y


def src_step_int(
    state: SrcStateInt, input_current: int, params: SrcParamsInt = SrcParamsInt()
) -> SrcStateInt:
    """One frame of the integer cell.  Matches the layer kernels bit for bit."""
    if abs(state.h) > H_MAX or abs(state.h_s) > H_MAX:
        raise ValueError("state out of range")
    z_s = slow_gate_int(state.h, params)
    hs_new = refractory_update(z_s, state.h, state.h_s)
    x = input_mix(input_current, state.h, state.h_s, params.bias_i)
    h_new = pwf(x)
    return SrcStateInt(h=h_new, h_s=hs_new, i_cur=input_current)


# ============================================================
# synapse current, readout and spike extraction
# ============================================================


def current_step(
    i_prev: int,
    beta: LeakFactor,
    weights_row: Sequence[int],
    spikes: Sequence[int],
) -> int:
    """Synaptic current I[t] = beta*I[t-1] + sum(w_i * s_i), beta in integer math."""
    if len(weights_row) != len(spikes):
        raise ValueError("dimension mismatch")
    acc = beta.apply(i_prev)
    for w, s in zip(weights_row, spikes):
        if s:
            acc += w * s
    return acc


def ir_step(state: IrState, spikes: Sequence[int], k_bits: Sequence[int]) -> IrState:
    """Integrate-readout accumulation: s_out += sum over firing inputs of decode(k)."""
    if len(spikes) != len(k_bits):
        raise ValueError("dimension mismatch")
    acc = state.s_out
    for s, k in zip(spikes, k_bits):
        if s:
            acc += s * IR_DECODE[k]
    return IrState(s_out=acc)


def spike_detect(h_prev: float | int, h_now: float | int, threshold: float | int) -> int:
    """Rising-edge detector: 1 iff h crossed the threshold upward this frame."""
    return 1 if h_prev < threshold <= h_now else 0
