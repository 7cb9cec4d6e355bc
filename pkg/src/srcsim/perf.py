"""Cycle-accurate throughput and energy model.

The accelerator serializes one level-update per input of the widest
fan-in plus a fixed per-frame overhead, and pipelined levels add one
frame of flush each:

    cycles(trace) = (frames + num_levels - 1) * (max_fan_in + overhead)

Wall time is cycles / clock; energy is average power * time.
"""

from __future__ import annotations

from dataclasses import dataclass

OVERHEAD_CYCLES = 8


@dataclass(frozen=True)
class PerfModel:
    clock_hz: float = 100e6
    power_w: float = 1.13
    overhead_cycles: int = OVERHEAD_CYCLES

    def __post_init__(self) -> None:
        if self.clock_hz <= 0 or self.power_w < 0 or self.overhead_cycles < 0:
            raise ValueError("invalid perf parameters")


@dataclass(frozen=True)
class PerfReport:
    cycles: int
    time_s: float
    energy_j: float
    energy_per_spike_j: float


def cycles_for_trace(frames: int, max_fan_in: int, num_levels: int = 1,
                     overhead: int = OVERHEAD_CYCLES) -> int:
    if frames < 1 or max_fan_in < 1 or num_levels < 1 or overhead < 0:
        raise ValueError("invalid perf parameters")
    return (frames + num_levels - 1) * (max_fan_in + overhead)


def report(model: PerfModel, frames: int, max_fan_in: int,
           num_levels: int = 1, spikes: int = 0) -> PerfReport:
    cycles = cycles_for_trace(frames, max_fan_in, num_levels, model.overhead_cycles)
    time_s = cycles / model.clock_hz
    energy_j = model.power_w * time_s
    return PerfReport(cycles=cycles, time_s=time_s, energy_j=energy_j,
                      energy_per_spike_j=energy_j / max(spikes, 1))
