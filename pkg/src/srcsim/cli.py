"""Command line front end.

Subcommands:

    gen-traces   IDX images -> one .spt trace file per image
    run          sweep {trace length} x {bit width} x {z_hyp} over a
                 dataset, one CSV row and one JSON record per cell
    freq-sweep   single-neuron firing rate as a function of z_hyp
    export       float weights -> quantized VHDL package + COE image
    synth        write the self-contained synthetic demo task

`run` grid cells execute in a process pool sized by SRCSIM_WORKERS
(0 or unset picks a small automatic pool).  Every artifact write is
atomic (temp file + rename) so a killed run never leaves half a cell.
In dual mode each cell runs the integer network and its float twin on
the same quantized weights and reports the prediction agreement rate.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from .idx import parse_idx, write_idx
from .neuron import (
    LeakFactor,
    SrcParamsFloat,
    SrcParamsInt,
    SrcStateInt,
    spike_detect,
    src_step_int,
)
from .netsim import (
    IrSpec,
    NetworkConfig,
    SrcLayerSpec,
    build_network,
    config_hash,
    run_trace,
    aggregate_stats,
)
from .perf import PerfModel, report
from .trace import binarize, generate_spt, serialize_spt
from .weights import IrWeightBits, WeightStore, load_float_matrix, quantize, save_float_matrix
from . import synth

CSV_HEADER = [
    "cell", "spt", "bit_width", "z_hyp", "arithmetic", "status",
    "total", "errors", "accuracy", "agreement",
    "cycles", "time_s", "energy_j", "energy_per_spike_j", "total_spikes",
    "config_hash", "error",
]


def _sub_seed(root: int, index: int) -> int:
    return int(np.random.SeedSequence([root, index]).generate_state(1, np.uint64)[0])


def _parse_lengths(text: str) -> list[tuple[int, int]]:
    out = []
    for tok in text.split(","):
        reset, _, active = tok.strip().partition("+")
        if not active:
            raise ValueError(f"bad trace length {tok!r}, expected RESET+ACTIVE")
        out.append((int(reset), int(active)))
    return out


def _parse_int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _write_atomic(path: str, data: str | bytes) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    tmp = path + ".tmp"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _workers() -> int:
    n = int(os.environ.get("SRCSIM_WORKERS", "0"))
    return n if n > 0 else min(4, os.cpu_count() or 1)


# ============================================================
# network config file
# ============================================================

_CFG_DEFAULTS = {
    "spike_threshold": "500",
    "z_hyp": "900",
    "z_deep": "100",
    "v_th": "500",
    "beta": "0",
    "z_hyp_f": "0.910",
    "z_deep_f": "0.0",
}


def parse_config_file(path: str) -> dict:
    cfg = dict(_CFG_DEFAULTS)
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r}")
            k, v = (t.strip() for t in line.split("=", 1))
            cfg[k] = v
    for key in ("input_width", "src_sizes", "src_weights", "ir_size", "ir_bits"):
        if key not in cfg:
            raise ValueError(f"missing config key {key!r}")
    cfg["_dir"] = base
    return cfg


def _cfg_path(cfg: dict, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(cfg["_dir"], name)


def load_ir_bits(path: str) -> IrWeightBits:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([1 if ch == "1" else 0 for ch in line])
    bits = np.array(rows, dtype=np.uint8)
    return IrWeightBits(bits.shape[0], bits.shape[1], bits)


def _build_cell_networks(cfg: dict, bit_width: int, z_hyp: int, arithmetic: str):
    """Quantize the config's float weights at bit_width and build the nets."""
    sizes = _parse_int_list(cfg["src_sizes"])
    wfiles = [t.strip() for t in cfg["src_weights"].split(",")]
    if len(sizes) != len(wfiles):
        raise ValueError("dimension mismatch")
    store = WeightStore()
    for i, f in enumerate(wfiles):
        w = load_float_matrix(_cfg_path(cfg, f))
        store.add(f"l{i}", quantize(w, bit_width), {"source": f, "bit_width": bit_width})
    store.add("ir", load_ir_bits(_cfg_path(cfg, cfg["ir_bits"])))

    p_int = SrcParamsInt(z_hyp_i=z_hyp, z_deep_i=int(cfg["z_deep"]), v_th=int(cfg["v_th"]))
    p_flt = SrcParamsFloat(z_hyp=float(cfg["z_hyp_f"]), z_deep=float(cfg["z_deep_f"]))
    beta = LeakFactor.parse(cfg["beta"])

    def mk(mode: str):
        params = p_int if mode == "integer" else p_flt
        layers = tuple(SrcLayerSpec(s, f"l{i}", params) for i, s in enumerate(sizes))
        nc = NetworkConfig(
            input_width=int(cfg["input_width"]), src_layers=layers,
            ir=IrSpec(int(cfg["ir_size"]), "ir"),
            spike_threshold=int(cfg["spike_threshold"]),
            arithmetic=mode, beta=beta)
        return build_network(nc, store), config_hash(nc, store)

    nets = {}
    if arithmetic in ("integer", "dual"):
        nets["integer"] = mk("integer")
    if arithmetic in ("float", "dual"):
        nets["float"] = mk("float")
    return nets


def _run_cell(args: tuple) -> dict:
    (cell, images_path, labels_path, config_path, reset, active, bw, z_hyp,
     seed, limit, arithmetic, power, clock) = args
    row = {
        "cell": cell, "spt": f"{reset}+{active}", "bit_width": bw, "z_hyp": z_hyp,
        "arithmetic": arithmetic, "status": "ok", "agreement": "", "error": "",
    }
    try:
        cfg = parse_config_file(config_path)
        ds = parse_idx(images_path, labels_path)
        count = ds.count if limit <= 0 else min(limit, ds.count)
        if count == 0:
            raise ValueError("empty dataset")
        nets = _build_cell_networks(cfg, bw, z_hyp, arithmetic)
        primary = "integer" if "integer" in nets else "float"
        net, chash = nets[primary]

        traces = []
        for i in range(count):
            traces.append(generate_spt(
                binarize(ds.images[i]), int(ds.labels[i]),
                n_active=active, n_reset=reset, seed=_sub_seed(seed, i)))

        results = [run_trace(net, tr) for tr in traces]
        stats = aggregate_stats(results)
        if arithmetic == "dual":
            twin, _ = nets["float"]
            twin_results = [run_trace(twin, tr) for tr in traces]
            agree = sum(1 for a, b in zip(results, twin_results)
                        if a.predicted == b.predicted)
            row["agreement"] = agree / len(results)

        model = PerfModel(clock_hz=clock, power_w=power)
        frames = reset + active
        spikes = sum(stats.per_layer_spikes)
        per_trace = report(model, frames, net.max_fan_in, net.num_src_levels,
                           max(1, spikes // stats.total))
        row.update(
            total=stats.total, errors=stats.errors, accuracy=stats.accuracy,
            cycles=per_trace.cycles, time_s=per_trace.time_s,
            energy_j=per_trace.energy_j,
            energy_per_spike_j=per_trace.energy_per_spike_j,
            total_spikes=spikes, config_hash=chash)
    except (ValueError, OSError) as e:
        row["status"] = "error"
        row["error"] = str(e)
    return row


# ============================================================
# subcommands
# ============================================================


def cmd_gen_traces(args) -> int:
    ds = parse_idx(args.images, args.labels)
    count = ds.count if args.limit <= 0 else min(args.limit, ds.count)
    os.makedirs(args.out, exist_ok=True)
    p = Fraction(args.p)
    index_rows = []
    for i in range(count):
        tr = generate_spt(binarize(ds.images[i]), int(ds.labels[i]),
                          n_active=args.active, n_reset=args.reset,
                          p_max=p, seed=_sub_seed(args.seed, i))
        name = f"trace_{i:05d}.spt"
        serialize_spt(tr, os.path.join(args.out, name))
        index_rows.append((name, int(ds.labels[i])))
    index = "file,label\n" + "\n".join(f"{n},{l}" for n, l in index_rows) + "\n"
    _write_atomic(os.path.join(args.out, "index.csv"), index)
    print(f"wrote {count} traces to {args.out}")
    return 0


def cmd_run(args) -> int:
    lengths = _parse_lengths(args.spt_lengths)
    widths = _parse_int_list(args.bit_widths)
    zs = _parse_int_list(args.z_hyp)
    os.makedirs(os.path.join(args.out, "cells"), exist_ok=True)

    cells = []
    i = 0
    for (reset, active) in lengths:
        for bw in widths:
            for z in zs:
                cells.append((i, args.images, args.labels, args.config,
                              reset, active, bw, z, args.seed, args.limit,
                              args.arithmetic, args.power, args.clock))
                i += 1

    workers = _workers()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]

    for row in rows:
        _write_atomic(os.path.join(args.out, "cells", f"cell_{row['cell']:03d}.json"),
                      json.dumps(row, indent=1, sort_keys=True) + "\n")

    out_csv = os.path.join(args.out, "results.csv")
    import io
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, restval="")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    _write_atomic(out_csv, buf.getvalue())

    failed = [r for r in rows if r["status"] != "ok"]
    lines = [f"cells: {len(rows)}  ok: {len(rows) - len(failed)}  failed: {len(failed)}"]
    for r in rows:
        if r["status"] == "ok":
            lines.append(f"cell {r['cell']:3d} spt={r['spt']} b={r['bit_width']} "
                         f"z={r['z_hyp']} acc={r['accuracy']:.4f}")
        else:
            lines.append(f"cell {r['cell']:3d} spt={r['spt']} b={r['bit_width']} "
                         f"z={r['z_hyp']} ERROR {r['error']}")
    _write_atomic(os.path.join(args.out, "summary.txt"), "\n".join(lines) + "\n")
    print("\n".join(lines))
    return 1 if failed else 0


def cmd_freq_sweep(args) -> int:
    zs = _parse_int_list(args.z_values)
    rows = [("z_hyp", "spikes", "rate_per_frame")]
    for z in zs:
        params = SrcParamsInt(z_hyp_i=z, z_deep_i=args.z_deep)
        st = SrcStateInt()
        spikes = 0
        for _ in range(args.steps):
            nxt = src_step_int(st, args.current, params)
            spikes += spike_detect(st.h, nxt.h, 500)
            st = nxt
        rows.append((z, spikes, spikes / args.steps))
    text = "\n".join(",".join(str(v) for v in r) for r in rows) + "\n"
    if args.out:
        _write_atomic(args.out, text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_export(args) -> int:
    from .weights import emit_coe, emit_vhdl_pkg
    os.makedirs(args.out, exist_ok=True)
    try:
        wrote = []
        if args.weights:
            w = load_float_matrix(args.weights)
            for b in _parse_int_list(args.bit_widths):
                q = quantize(w, b)
                base = os.path.join(args.out, f"{args.name}_b{b}")
                _write_atomic(base + ".vhd", emit_vhdl_pkg(q, f"{args.name}_b{b}"))
                _write_atomic(base + ".coe", emit_coe(q))
                wrote.append(base)
        if args.ir:
            bits = load_ir_bits(args.ir)
            base = os.path.join(args.out, f"{args.name}_ir")
            _write_atomic(base + ".vhd", emit_vhdl_pkg(bits, f"{args.name}_ir"))
            _write_atomic(base + ".coe", emit_coe(bits))
            wrote.append(base)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for b in wrote:
        print(f"wrote {b}.vhd {b}.coe")
    return 0


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    ds = synth.synthetic_dataset(args.count, seed=args.seed)
    write_idx(ds, os.path.join(args.out, "images.idx"), os.path.join(args.out, "labels.idx"))
    w, k_bits = synth.golden_float_weights(n_per_class=args.per_class, seed=args.seed)
    save_float_matrix(w, os.path.join(args.out, "weights_l1.wmf"))
    lines = ["".join(str(int(b)) for b in row) for row in k_bits.bits]
    _write_atomic(os.path.join(args.out, "ir_bits.txt"), "\n".join(lines) + "\n")
    cfg = (
        "input_width = 784\n"
        f"src_sizes = {w.shape[0]}\n"
        "src_weights = weights_l1.wmf\n"
        f"ir_size = {k_bits.rows}\n"
        "ir_bits = ir_bits.txt\n"
    )
    _write_atomic(os.path.join(args.out, "net.cfg"), cfg)
    print(f"wrote synthetic task ({args.count} images) to {args.out}")
    return 0


# ============================================================
# argument parsing
# ============================================================


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="srcsim",
                                 description="software twin of the SRC spiking accelerator")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-traces", help="IDX dataset to .spt trace files")
    g.add_argument("--images", required=True)
    g.add_argument("--labels", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--limit", type=int, default=0, help="first N images only")
    g.add_argument("--active", type=int, default=200)
    g.add_argument("--reset", type=int, default=20)
    g.add_argument("--p", default="1/4", help="per-frame firing probability")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(fn=cmd_gen_traces)

    r = sub.add_parser("run", help="sweep lengths x bit widths x z_hyp")
    r.add_argument("--images", required=True)
    r.add_argument("--labels", required=True)
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--spt-lengths", default="20+200", help="RESET+ACTIVE[,RESET+ACTIVE...]")
    r.add_argument("--bit-widths", default="9")
    r.add_argument("--z-hyp", default="900")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--limit", type=int, default=0)
    r.add_argument("--power", type=float, default=1.13)
    r.add_argument("--clock", type=float, default=100e6)
    r.add_argument("--arithmetic", choices=("integer", "float", "dual"), default="integer")
    r.set_defaults(fn=cmd_run)

    f = sub.add_parser("freq-sweep", help="single-neuron rate vs z_hyp")
    f.add_argument("--z-values", default="880,900,920,940,960,980")
    f.add_argument("--z-deep", type=int, default=100)
    f.add_argument("--current", type=int, default=4000)
    f.add_argument("--steps", type=int, default=2000)
    f.add_argument("--out", default="")
    f.set_defaults(fn=cmd_freq_sweep)

    e = sub.add_parser("export", help="weights to VHDL package and COE image")
    e.add_argument("--weights", default="")
    e.add_argument("--ir", default="", help="IR k-bit text file")
    e.add_argument("--bit-widths", default="9")
    e.add_argument("--name", default="rom")
    e.add_argument("--out", required=True)
    e.set_defaults(fn=cmd_export)

    s = sub.add_parser("synth", help="write the synthetic demo task")
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=300)
    s.add_argument("--per-class", type=int, default=3)
    s.add_argument("--seed", type=int, default=7)
    s.set_defaults(fn=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
