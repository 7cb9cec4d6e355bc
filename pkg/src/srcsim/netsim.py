"""Frame-synchronous network simulator.

Topology: input pixels -> one or more SRC layers -> integrate-readout
(IR) accumulators, one per class.  Every level latches its output
spikes for one frame, so an input applied at frame t can first
influence layer k's spikes at frame t+k-1, and the IR consumes the
last SRC layer's previous-frame spikes.

Per frame, all levels compute from the latches of the previous frame
and then commit together.  A frame with u_reset asserted zeroes every
register (neuron states, currents, latches, IR accumulators) and
produces no spikes.  The prediction is the argmax of the IR
accumulators (ties to the lowest class index), captured at the end of
the frame whose u_cmp bit is set.

Integer mode runs the bit-exact hardware arithmetic; float mode runs
the reference dynamics with the same latch structure.  Quantized
weights of width b enter the integer datapath pre-shifted by 9-b so
narrow weights keep the full current range.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .neuron import (
    BETA_ZERO,
    LeakFactor,
    SrcParamsFloat,
    SrcParamsInt,
    SPIKE_THRESHOLD_INT,
)
from .trace import SpikingTrace
from .weights import IrWeightBits, Q_FULL_BITS, WeightMatrix, WeightStore


@dataclass(frozen=True)
class SrcLayerSpec:
    size: int
    weights_ref: str
    params: SrcParamsInt | SrcParamsFloat


@dataclass(frozen=True)
class IrSpec:
    size: int
    k_bits_ref: str


@dataclass(frozen=True)
class NetworkConfig:
    input_width: int
    src_layers: tuple[SrcLayerSpec, ...]
    ir: IrSpec
    spike_threshold: int = SPIKE_THRESHOLD_INT
    arithmetic: str = "integer"
    beta: LeakFactor = BETA_ZERO

    def __post_init__(self) -> None:
        if self.arithmetic not in ("integer", "float"):
            raise ValueError("invalid arithmetic mode")
        if not self.src_layers:
            raise ValueError("no layers")


class _SrcLevel:
    def __init__(self, size: int, w_eff: np.ndarray, params, fan_in: int, is_float: bool):
        self.size = size
        self.w_eff = w_eff
        self.params = params
        self.fan_in = fan_in
        dtype = np.float64 if is_float else np.int64
        self.h = np.zeros(size, dtype=dtype)
        self.hs = np.zeros(size, dtype=dtype)
        self.icur = np.zeros(size, dtype=dtype)
        self.out_spikes = np.zeros(size, dtype=np.uint8)

    def reset(self) -> None:
        self.h[:] = 0
        self.hs[:] = 0
        self.icur[:] = 0
        self.out_spikes[:] = 0


class Network:
    def __init__(self, config: NetworkConfig, levels: list[_SrcLevel], k_dec: np.ndarray):
        self.config = config
        self.input_width = config.input_width
        self.levels = levels
        self.k_dec = k_dec
        self.ir_acc = np.zeros(k_dec.shape[0], dtype=np.int64)
        self._is_float = config.arithmetic == "float"

    @property
    def num_src_levels(self) -> int:
        return len(self.levels)

    @property
    def max_fan_in(self) -> int:
        return max(lvl.fan_in for lvl in self.levels)

    def reset(self) -> None:
        for lvl in self.levels:
            lvl.reset()
        self.ir_acc[:] = 0

    def ir_outputs(self) -> np.ndarray:
        return self.ir_acc.copy()

    def state_snapshot(self) -> dict:
        snap = {}
        for i, lvl in enumerate(self.levels):
            snap[f"level{i}.h"] = lvl.h.copy()
            snap[f"level{i}.h_s"] = lvl.hs.copy()
            snap[f"level{i}.i_cur"] = lvl.icur.copy()
            snap[f"level{i}.out"] = lvl.out_spikes.copy()
        snap["ir.s_out"] = self.ir_acc.copy()
        return snap

    def step_frame(self, pixels: np.ndarray, ctrl=None) -> list[np.ndarray]:
        if pixels.shape != (self.input_width,):
            raise ValueError("width mismatch")
        if ctrl is not None and ctrl.u_reset:
            self.reset()
            return [np.zeros(lvl.size, dtype=np.uint8) for lvl in self.levels]

        inputs = [np.ascontiguousarray(pixels, dtype=np.uint8)]
        inputs.extend(lvl.out_spikes for lvl in self.levels[:-1])
        ir_in = self.levels[-1].out_spikes

        new_spikes = []
        beta = self.config.beta
        thr = self.config.spike_threshold
        for lvl, inp in zip(self.levels, inputs):
            out = np.zeros(lvl.size, dtype=np.uint8)
            p = lvl.params
            if self._is_float:
                _backend.src_layer_step_float(
                    lvl.h, lvl.hs, lvl.icur, lvl.w_eff, inp, out,
                    p.r, p.r_s, p.b_h, p.z_hyp, p.z_deep,
                    beta.as_float(), thr / 1000.0)
            else:
                _backend.src_layer_step_int(
                    lvl.h, lvl.hs, lvl.icur, lvl.w_eff, inp, out,
                    p.z_hyp_i, p.z_deep_i, p.v_th, p.bias_i,
                    beta.num, beta.shift, thr)
            new_spikes.append(out)

        _backend.ir_accumulate_int(self.ir_acc, self.k_dec, ir_in)
        for lvl, out in zip(self.levels, new_spikes):
            lvl.out_spikes = out
        return new_spikes


def build_network(config: NetworkConfig, store: WeightStore) -> Network:
    is_float = config.arithmetic == "float"
    levels = []
    fan_in = config.input_width
    for spec in config.src_layers:
        if is_float and not isinstance(spec.params, SrcParamsFloat):
            raise ValueError("parameter type mismatch")
        if not is_float and not isinstance(spec.params, SrcParamsInt):
            raise ValueError("parameter type mismatch")
        m = store.get(spec.weights_ref)
        if isinstance(m, WeightMatrix):
            if m.rows != spec.size or m.cols != fan_in:
                raise ValueError("shape mismatch")
            shifted = m.values.astype(np.int64) << (Q_FULL_BITS - m.bit_width)
            w_eff = shifted / 1000.0 if is_float else shifted
        else:
            a = np.asarray(m, dtype=np.float64)
            if a.shape != (spec.size, fan_in):
                raise ValueError("shape mismatch")
            if not is_float:
                raise ValueError("parameter type mismatch")  # raw float weights need float mode
            w_eff = a
        levels.append(_SrcLevel(spec.size, np.ascontiguousarray(w_eff), spec.params, fan_in, is_float))
        fan_in = spec.size

    kb = store.get(config.ir.k_bits_ref)
    if not isinstance(kb, IrWeightBits):
        raise ValueError("parameter type mismatch")
    if kb.rows != config.ir.size or kb.cols != fan_in:
        raise ValueError("shape mismatch")
    k_dec = np.ascontiguousarray(np.where(kb.bits > 0, 10, -1).astype(np.int64))
    return Network(config, levels, k_dec)


def config_hash(config: NetworkConfig, store: WeightStore) -> str:
    """Digest over every knob and every referenced matrix payload."""
    h = hashlib.sha256()
    h.update(repr((config.input_width, config.spike_threshold, config.arithmetic,
                   (config.beta.num, config.beta.shift))).encode())
    for spec in config.src_layers:
        h.update(repr((spec.size, spec.weights_ref, spec.params)).encode())
        m = store.get(spec.weights_ref)
        if isinstance(m, WeightMatrix):
            h.update(m.sha256().encode())
        else:
            h.update(hashlib.sha256(np.asarray(m, np.float64).tobytes()).hexdigest().encode())
    kb = store.get(config.ir.k_bits_ref)
    h.update(repr((config.ir.size, config.ir.k_bits_ref)).encode())
    h.update(hashlib.sha256(kb.bits.astype("<u1").tobytes()).hexdigest().encode())
    return h.hexdigest()


# ============================================================
# inference over traces
# ============================================================


@dataclass
class InferenceResult:
    predicted: int
    target: int
    ir_outputs: list[int]
    spike_counts: list[int]  # per SRC level, summed over the trace


@dataclass
class RunStats:
    total: int
    errors: int
    accuracy: float
    per_layer_spikes: list[int] = field(default_factory=list)


def classify(ir_outputs: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest class index."""
    return int(np.argmax(ir_outputs))


def run_trace(net: Network, trace: SpikingTrace) -> InferenceResult:
    if trace.pixel_count != net.input_width:
        raise ValueError("width mismatch")
    net.reset()
    counts = np.zeros(net.num_src_levels, dtype=np.int64)
    predicted = None
    for t in range(trace.frame_count):
        spikes = net.step_frame(trace.frames[t], trace.ctrl[t])
        for k, s in enumerate(spikes):
            counts[k] += int(s.sum())
        if trace.ctrl[t].u_cmp:
            predicted = classify(net.ir_acc)
    if predicted is None:
        raise ValueError("no compare frame")
    return InferenceResult(predicted=predicted, target=trace.label,
                           ir_outputs=[int(v) for v in net.ir_acc],
                           spike_counts=[int(c) for c in counts])


def aggregate_stats(results: list[InferenceResult]) -> RunStats:
    if not results:
        raise ValueError("empty dataset")
    errors = sum(1 for r in results if r.predicted != r.target)
    layers = np.zeros(len(results[0].spike_counts), dtype=np.int64)
    for r in results:
        layers += r.spike_counts
    return RunStats(total=len(results), errors=errors,
                    accuracy=(len(results) - errors) / len(results),
                    per_layer_spikes=[int(v) for v in layers])


def run_dataset(net: Network, traces) -> RunStats:
    results = []
    for i, tr in enumerate(traces):
        try:
            results.append(run_trace(net, tr))
        except ValueError as e:
            raise ValueError(f"trace {i}: {e}") from e
    return aggregate_stats(results)
