# cython: boundscheck=False, wraparound=False, cdivision=True
"""Integer layer kernels, compiled backend.

Bit-identical to _kernels_py: int64 arithmetic, arithmetic right
shifts, saturation at +/-1000.  Only the integer path is compiled;
the float path stays in numpy so both backends share one libm.

Input spikes are gathered into an index list once per frame so the
per-neuron accumulation runs branch-free over the active inputs.
"""

from libc.stdint cimport int64_t, uint8_t
from libc.stdlib cimport free, malloc

DEF H_MAX = 1000


cdef Py_ssize_t _gather(uint8_t[::1] spikes_in, Py_ssize_t* act) noexcept:
    cdef Py_ssize_t m = spikes_in.shape[0]
    cdef Py_ssize_t i, n_act = 0
    for i in range(m):
        if spikes_in[i]:
            act[n_act] = i
            n_act += 1
    return n_act


def src_layer_step_int(int64_t[::1] h, int64_t[::1] hs, int64_t[::1] icur,
                       int64_t[:, ::1] w_eff, uint8_t[::1] spikes_in,
                       uint8_t[::1] out_spikes,
                       int64_t z_hyp, int64_t z_deep, int64_t v_th,
                       int64_t bias, int64_t beta_num, int64_t beta_shift,
                       int64_t thr):
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t m = w_eff.shape[1]
    cdef Py_ssize_t j, k, n_act
    cdef int64_t cur, z, hs_new, x, y
    cdef Py_ssize_t* act = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    if act is NULL:
        raise MemoryError()
    try:
        n_act = _gather(spikes_in, act)
        for j in range(n):
            cur = (icur[j] * beta_num) >> beta_shift
            for k in range(n_act):
                cur += w_eff[j, act[k]]
            z = z_hyp if h[j] < v_th else z_deep
            hs_new = ((z * (hs[j] - h[j])) >> 10) + h[j]
            x = cur + ((h[j] - (hs[j] << 2) + bias) << 1)
            y = ((x << 1) + x) >> 2
            if y > H_MAX:
                y = H_MAX
            elif y < -H_MAX:
                y = -H_MAX
            out_spikes[j] = 1 if (h[j] < thr and y >= thr) else 0
            icur[j] = cur
            hs[j] = hs_new
            h[j] = y
    finally:
        free(act)


def ir_accumulate_int(int64_t[::1] acc, int64_t[:, ::1] k_dec,
                      uint8_t[::1] spikes_in):
    cdef Py_ssize_t n = acc.shape[0]
    cdef Py_ssize_t m = k_dec.shape[1]
    cdef Py_ssize_t j, k, n_act
    cdef int64_t s
    cdef Py_ssize_t* act = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    if act is NULL:
        raise MemoryError()
    try:
        n_act = _gather(spikes_in, act)
        for j in range(n):
            s = acc[j]
            for k in range(n_act):
                s += k_dec[j, act[k]]
            acc[j] = s
    finally:
        free(act)
