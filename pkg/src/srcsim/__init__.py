"""srcsim: bit-exact software twin of an SRC spiking-network accelerator.

The integer path reproduces the hardware datapath exactly (scaled
int32 signals, shift-and-add updates, saturating activation); the
float path is the reference dynamical system the hardware
approximates.  See neuron.py for the cell equations, netsim.py for
the frame pipeline and perf.py for the throughput/energy model.
"""

from ._backend import BACKEND
from .neuron import (
    BETA_ONE,
    BETA_ZERO,
    IrState,
    LeakFactor,
    SrcParamsFloat,
    SrcParamsInt,
    SrcStateFloat,
    SrcStateInt,
    current_step,
    ir_step,
    pwf,
    spike_detect,
    src_step_float,
    src_step_int,
)
from .netsim import (
    InferenceResult,
    IrSpec,
    NetworkConfig,
    RunStats,
    SrcLayerSpec,
    build_network,
    classify,
    config_hash,
    run_dataset,
    run_trace,
)
from .perf import PerfModel, PerfReport, cycles_for_trace, report
from .trace import (
    FrameCtrl,
    SpikingTrace,
    TraceMeta,
    binarize,
    export_coe,
    generate_spt,
    import_coe,
    parse_spt,
    serialize_spt,
)
from .weights import (
    IrWeightBits,
    WeightMatrix,
    WeightStore,
    emit_coe,
    emit_vhdl_pkg,
    global_scale,
    load_float_matrix,
    load_matrix,
    quantize,
    save_float_matrix,
    save_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
