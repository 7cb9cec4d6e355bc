"""Vectorized layer kernels, numpy backend.

These are the release-path twins of the checked scalar steps in
neuron.py: same arithmetic on whole layers, int64 buffers (every
intermediate provably fits signed 32-bit, so no wrap can occur).
State arrays are updated in place.
"""

from __future__ import annotations

import numpy as np

_H_MAX = 1000


def src_layer_step_int(h, hs, icur, w_eff, spikes_in, out_spikes,
                       z_hyp, z_deep, v_th, bias, beta_num, beta_shift, thr):
    s = spikes_in.astype(np.int64)
    cur = ((icur * beta_num) >> beta_shift) + w_eff @ s
    z = np.where(h < v_th, z_hyp, z_deep)
    hs_new = ((z * (hs - h)) >> 10) + h
    x = cur + ((h - (hs << 2) + bias) << 1)
    h_new = ((x << 1) + x) >> 2
    np.clip(h_new, -_H_MAX, _H_MAX, out=h_new)
    out_spikes[:] = (h < thr) & (h_new >= thr)
    icur[:] = cur
    hs[:] = hs_new
    h[:] = h_new


def ir_accumulate_int(acc, k_dec, spikes_in):
    acc += k_dec @ spikes_in.astype(np.int64)


def src_layer_step_float(h, hs, icur, w, spikes_in, out_spikes,
                         r, r_s, b_h, z_hyp, z_deep, beta, thr):
    cur = beta * icur + w @ spikes_in.astype(np.float64)
    if not np.isfinite(cur).all():
        raise ValueError("non-finite dynamics")
    z = z_hyp - (z_hyp - z_deep) / (1.0 + np.exp(-10.0 * (h - 0.5)))
    h_new = np.tanh(cur + r * h + r_s * hs + b_h)
    hs_new = z * hs + (1.0 - z) * h
    if not (np.isfinite(h_new).all() and np.isfinite(hs_new).all()):
        raise ValueError("non-finite dynamics")
    out_spikes[:] = (h < thr) & (h_new >= thr)
    icur[:] = cur
    hs[:] = hs_new
    h[:] = h_new
