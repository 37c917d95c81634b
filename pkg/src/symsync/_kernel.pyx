# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled trial kernel; twin of ``_kernel_py.py``.

Floating-point expressions follow the same evaluation order as the Python
twin so both backends emit identical bits. Build without -ffast-math and
with -ffp-contract=off.
"""

cimport cython
from libc.math cimport cos, sin, log, sqrt
from libc.stdint cimport uint64_t, int64_t, uint8_t, int8_t, int32_t
from libc.stdlib cimport malloc, free

cdef enum:
    SLEEP = 0
    LISTEN_EMPTY = 1
    LISTEN_DETECT = 2
    ONE_BIT_RELAY = 3
    ZERO_BIT_RELAY = 4

BACKEND = "cython"

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void noise(uint64_t seed, int64_t node, int64_t t, double std, double two_pi,
                       double *re, double *im) noexcept nogil:
    cdef uint64_t z = seed + ((<uint64_t>node << 40) + <uint64_t>t + 1) * GAMMA
    cdef uint64_t h1 = mix64(z)
    cdef uint64_t h2 = mix64(z + GAMMA)
    cdef double u1 = <double>((h1 >> 11) + 1) * U53
    cdef double u2 = <double>(h2 >> 11) * U53
    cdef double r = std * sqrt(-2.0 * log(u1))
    cdef double a = two_pi * u2
    re[0] = r * cos(a)
    im[0] = r * sin(a)


@cython.cdivision(True)
cdef inline int64_t floordiv(int64_t a, int64_t b) noexcept nogil:
    cdef int64_t q = a // b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def simulate(
    const double[::1] pulse, const double[:, :, ::1] taps_re, const double[:, :, ::1] taps_im,
    const int64_t[:, ::1] delay, const double[::1] cfo, const double[::1] phase,
    const uint8_t[:, ::1] wake, const int64_t[::1] first_start, const uint8_t[::1] bits,
    const uint8_t[::1] is_relay,
    int64_t source, int64_t sink, int64_t ts, int64_t win, int64_t vote, int64_t turn,
    int64_t lead, int64_t n_periods, int64_t t_end, int64_t src_offset,
    uint64_t noise_seed, double noise_std, double thr2, double fs, double two_pi,
    int8_t[:, ::1] out_kind, int32_t[:, ::1] out_listen, int32_t[:, ::1] out_tx,
    int64_t[:, ::1] out_start, uint8_t[::1] sink_bits,
    int64_t[::1] tx_node, int64_t[::1] tx_start, int64_t[::1] tx_trigger,
):
    cdef int64_t n = cfo.shape[0]
    cdef int64_t tp = pulse.shape[0]
    cdef int64_t ntap = taps_re.shape[2]
    cdef int64_t nsym = bits.shape[0]
    cdef int64_t cap = tx_node.shape[0]
    cdef int64_t dmax = 0
    cdef int64_t i, j, k, q, e, m, t, o, tau, base, idx, p, nxt, cand, listen, s
    cdef int64_t reach = tp + ntap - 1
    cdef int64_t expire_span
    cdef int64_t n_tx = 0, n_act = 0, keep
    cdef int64_t src_k = 0
    cdef bint listening, flag
    cdef bint sink_acq = False
    cdef int64_t sink_m = 0, sink_idx = 0, sink_next = -1
    cdef double re, im, a, tr, ti

    for i in range(n):
        for j in range(n):
            if delay[i, j] > dmax:
                dmax = delay[i, j]
    expire_span = dmax + reach

    cdef int64_t *period = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *next_start = <int64_t *> malloc(n * sizeof(int64_t))
    cdef uint8_t *acquired = <uint8_t *> malloc(n * sizeof(uint8_t))
    cdef int64_t *lo = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *hi = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *pstart = <int64_t *> malloc(n * sizeof(int64_t))
    cdef uint8_t *ring = <uint8_t *> malloc(n * vote * sizeof(uint8_t))
    cdef int64_t *rpos = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *rcnt = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *seen = <int64_t *> malloc(n * sizeof(int64_t))
    cdef double *wave_re = <double *> malloc(n * tp * sizeof(double))
    cdef double *wave_im = <double *> malloc(n * tp * sizeof(double))
    cdef int64_t *act_node = <int64_t *> malloc((cap + 1) * sizeof(int64_t))
    cdef int64_t *act_start = <int64_t *> malloc((cap + 1) * sizeof(int64_t))
    if (period == NULL or next_start == NULL or acquired == NULL or lo == NULL or hi == NULL
            or pstart == NULL or ring == NULL or rpos == NULL or rcnt == NULL or seen == NULL
            or wave_re == NULL or wave_im == NULL or act_node == NULL or act_start == NULL):
        raise MemoryError()

    try:
        with nogil:
            for i in range(n):
                period[i] = -1
                next_start[i] = first_start[i] if is_relay[i] else -1
                acquired[i] = 0
                lo[i] = 0
                hi[i] = -1
                pstart[i] = 0
                rpos[i] = 0
                rcnt[i] = 0
                seen[i] = 0
            for i in range(n * vote):
                ring[i] = 0
            lo[sink] = 0
            hi[sink] = t_end

            t = 0
            while t < t_end:
                while src_k < nsym and src_offset + src_k * ts == t:
                    if bits[src_k]:
                        n_act = _push(source, t, -1, turn, expire_span, tp, two_pi, fs,
                                      &pulse[0], &cfo[0], &phase[0], wave_re, wave_im,
                                      act_node, act_start, n_act,
                                      tx_node, tx_start, tx_trigger, n_tx)
                        n_tx += 1
                    src_k += 1

                for i in range(n):
                    if is_relay[i] and next_start[i] == t:
                        k = period[i] + 1
                        period[i] = k
                        if k >= n_periods:
                            next_start[i] = -1
                            continue
                        pstart[i] = t
                        out_start[i, k] = t
                        if wake[i, k]:
                            lo[i] = t
                            hi[i] = t + (win if acquired[i] else ts)
                            for q in range(vote):
                                ring[i * vote + q] = 0
                            rpos[i] = 0
                            rcnt[i] = 0
                            seen[i] = 0
                            next_start[i] = -1
                        else:
                            out_kind[i, k] = SLEEP
                            out_listen[i, k] = 0
                            out_tx[i, k] = 0
                            next_start[i] = t + ts
                if sink_acq and sink_next == t:
                    sink_idx += 1
                    if sink_idx >= nsym:
                        sink_next = -1
                    else:
                        pstart[sink] = t
                        lo[sink] = t
                        hi[sink] = t + win
                        for q in range(vote):
                            ring[sink * vote + q] = 0
                        rpos[sink] = 0
                        rcnt[sink] = 0
                        seen[sink] = 0
                        sink_next = -1

                listening = False
                for i in range(n):
                    if hi[i] <= t or lo[i] > t:
                        continue
                    if noise_std != 0.0:
                        noise(noise_seed, i, t, noise_std, two_pi, &re, &im)
                    else:
                        re = 0.0
                        im = 0.0
                    for e in range(n_act):
                        j = act_node[e]
                        if j == i:
                            continue
                        base = t - act_start[e] - delay[j, i]
                        if base < 0 or base >= reach:
                            continue
                        for q in range(ntap):
                            idx = base - q
                            if 0 <= idx < tp:
                                tr = taps_re[j, i, q]
                                ti = taps_im[j, i, q]
                                re += tr * wave_re[j * tp + idx] - ti * wave_im[j * tp + idx]
                                im += tr * wave_im[j * tp + idx] + ti * wave_re[j * tp + idx]
                    flag = re * re + im * im > thr2
                    p = rpos[i]
                    rcnt[i] += (<int64_t> flag) - (<int64_t> ring[i * vote + p])
                    ring[i * vote + p] = flag
                    rpos[i] = p + 1 if p + 1 < vote else 0
                    seen[i] += 1

                    if seen[i] >= vote and 2 * rcnt[i] > vote:
                        o = t - vote + 1
                        hi[i] = -1
                        if i == sink:
                            if not sink_acq:
                                sink_acq = True
                                sink_idx = floordiv(o - src_offset, ts)
                                sink_m = sink_idx
                            if 0 <= sink_idx < nsym:
                                sink_bits[sink_idx] = 1
                            sink_next = o + ts - lead
                        else:
                            k = period[i]
                            tau = t + 1 + turn
                            n_act = _push(i, tau, t, turn, expire_span, tp, two_pi, fs,
                                          &pulse[0], &cfo[0], &phase[0], wave_re, wave_im,
                                          act_node, act_start, n_act,
                                          tx_node, tx_start, tx_trigger, n_tx)
                            n_tx += 1
                            listen = tau - pstart[i]
                            if acquired[i]:
                                out_kind[i, k] = ONE_BIT_RELAY
                            else:
                                out_kind[i, k] = LISTEN_DETECT
                                acquired[i] = 1
                                if listen > ts - tp:
                                    listen = ts - tp
                            out_listen[i, k] = <int32_t> listen
                            out_tx[i, k] = <int32_t> tp
                            next_start[i] = o + ts - lead
                    elif t == hi[i] - 1:
                        if i == sink:
                            hi[i] = -1
                            if sink_acq:
                                sink_next = pstart[sink] + ts
                        else:
                            k = period[i]
                            out_kind[i, k] = ZERO_BIT_RELAY if acquired[i] else LISTEN_EMPTY
                            out_listen[i, k] = <int32_t> (hi[i] - lo[i])
                            out_tx[i, k] = 0
                            next_start[i] = pstart[i] + ts
                            hi[i] = -1
                    else:
                        listening = True

                if listening:
                    t += 1
                else:
                    nxt = t_end
                    if src_k < nsym:
                        cand = src_offset + src_k * ts
                        if cand < nxt:
                            nxt = cand
                    for i in range(n):
                        if is_relay[i] and next_start[i] > t and next_start[i] < nxt:
                            nxt = next_start[i]
                    if sink_next > t and sink_next < nxt:
                        nxt = sink_next
                    t = nxt if nxt > t else t + 1

            for i in range(n):
                if not is_relay[i]:
                    continue
                if hi[i] > -1:
                    k = period[i]
                    out_kind[i, k] = ZERO_BIT_RELAY if acquired[i] else LISTEN_EMPTY
                    out_listen[i, k] = <int32_t> (hi[i] - lo[i])
                    out_tx[i, k] = 0
                    next_start[i] = pstart[i] + ts
                    hi[i] = -1
                k = period[i]
                s = next_start[i]
                if k < 0:
                    s = first_start[i]
                while k + 1 < n_periods:
                    k += 1
                    out_start[i, k] = s
                    if wake[i, k]:
                        if acquired[i]:
                            out_kind[i, k] = ZERO_BIT_RELAY
                            out_listen[i, k] = <int32_t> win
                        else:
                            out_kind[i, k] = LISTEN_EMPTY
                            out_listen[i, k] = <int32_t> ts
                    else:
                        out_kind[i, k] = SLEEP
                        out_listen[i, k] = 0
                    out_tx[i, k] = 0
                    s += ts
                period[i] = k
    finally:
        free(period); free(next_start); free(acquired); free(lo); free(hi); free(pstart)
        free(ring); free(rpos); free(rcnt); free(seen); free(wave_re); free(wave_im)
        free(act_node); free(act_start)

    return n_tx, int(sink_acq), sink_m


cdef int64_t _push(int64_t j, int64_t tau, int64_t trigger, int64_t turn, int64_t expire_span,
                   int64_t tp, double two_pi, double fs,
                   const double *pulse, const double *cfo, const double *phase,
                   double *wave_re, double *wave_im,
                   int64_t *act_node, int64_t *act_start, int64_t n_act,
                   int64_t[::1] tx_node, int64_t[::1] tx_start, int64_t[::1] tx_trigger,
                   int64_t n_tx) noexcept nogil:
    cdef int64_t e, keep = 0, m
    cdef double c = cfo[j], ph = phase[j], a
    for e in range(n_act):
        if act_start[e] + expire_span > tau - turn - 1:
            act_node[keep] = act_node[e]
            act_start[keep] = act_start[e]
            keep += 1
    for m in range(tp):
        a = two_pi * c * <double> (tau + m) / fs + ph
        wave_re[j * tp + m] = pulse[m] * cos(a)
        wave_im[j * tp + m] = pulse[m] * sin(a)
    act_node[keep] = j
    act_start[keep] = tau
    tx_node[n_tx] = j
    tx_start[n_tx] = tau
    tx_trigger[n_tx] = trigger
    return keep + 1
