"""Pure-Python trial kernel.

Statement-for-statement twin of ``_kernel.pyx``; both must produce identical
output arrays for identical inputs. Keep floating-point expressions in the
same order when editing either file.
"""

import math

from .channel import noise_sample

SLEEP, LISTEN_EMPTY, LISTEN_DETECT, ONE_BIT_RELAY, ZERO_BIT_RELAY = 0, 1, 2, 3, 4
NOT_RELAY = -1

BACKEND = "python"


def simulate(
    pulse, taps_re, taps_im, delay, cfo, phase, wake, first_start, bits, is_relay,
    source, sink, ts, win, vote, turn, lead, n_periods, t_end, src_offset,
    noise_seed, noise_std, thr2, fs, two_pi,
    out_kind, out_listen, out_tx, out_start, sink_bits, tx_node, tx_start, tx_trigger,
):
    n = len(cfo)
    tp = len(pulse)
    ntap = taps_re.shape[2]
    nsym = len(bits)
    pulse = [float(x) for x in pulse]
    taps_re_l = taps_re.tolist()
    taps_im_l = taps_im.tolist()
    delay_l = delay.tolist()
    cfo_l = [float(x) for x in cfo]
    phase_l = [float(x) for x in phase]
    relay = [bool(x) for x in is_relay]
    dmax = int(delay.max()) if n else 0
    reach = tp + ntap - 1
    expire_span = dmax + reach

    period = [-1] * n
    next_start = [int(first_start[i]) if relay[i] else -1 for i in range(n)]
    acquired = [False] * n
    lo = [0] * n
    hi = [-1] * n
    pstart = [0] * n
    ring = [[False] * vote for _ in range(n)]
    rpos = [0] * n
    rcnt = [0] * n
    seen = [0] * n

    wave_re = [[0.0] * tp for _ in range(n)]
    wave_im = [[0.0] * tp for _ in range(n)]
    act_node = []
    act_start = []
    n_tx = 0

    sink_acq = False
    sink_m = 0
    sink_idx = 0
    sink_next = -1
    lo[sink] = 0
    hi[sink] = t_end

    def push(j, tau, trigger):
        nonlocal n_tx, act_node, act_start
        keep_n = []
        keep_s = []
        for e in range(len(act_node)):
            if act_start[e] + expire_span > tau - turn - 1:
                keep_n.append(act_node[e])
                keep_s.append(act_start[e])
        act_node = keep_n
        act_start = keep_s
        wr = wave_re[j]
        wi = wave_im[j]
        c = cfo_l[j]
        ph = phase_l[j]
        for m in range(tp):
            a = two_pi * c * float(tau + m) / fs + ph
            wr[m] = pulse[m] * math.cos(a)
            wi[m] = pulse[m] * math.sin(a)
        act_node.append(j)
        act_start.append(tau)
        tx_node[n_tx] = j
        tx_start[n_tx] = tau
        tx_trigger[n_tx] = trigger
        n_tx += 1

    def begin_period(i, t):
        k = period[i] + 1
        period[i] = k
        if k >= n_periods:
            next_start[i] = -1
            return
        pstart[i] = t
        out_start[i, k] = t
        if wake[i, k]:
            lo[i] = t
            hi[i] = t + (win if acquired[i] else ts)
            r = ring[i]
            for q in range(vote):
                r[q] = False
            rpos[i] = 0
            rcnt[i] = 0
            seen[i] = 0
            next_start[i] = -1
        else:
            out_kind[i, k] = SLEEP
            out_listen[i, k] = 0
            out_tx[i, k] = 0
            next_start[i] = t + ts

    def finish_empty(i):
        k = period[i]
        out_kind[i, k] = ZERO_BIT_RELAY if acquired[i] else LISTEN_EMPTY
        out_listen[i, k] = hi[i] - lo[i]
        out_tx[i, k] = 0
        next_start[i] = pstart[i] + ts
        hi[i] = -1

    src_k = 0
    t = 0
    while t < t_end:
        while src_k < nsym and src_offset + src_k * ts == t:
            if bits[src_k]:
                push(source, t, -1)
            src_k += 1

        for i in range(n):
            if relay[i] and next_start[i] == t:
                begin_period(i, t)
        if sink_acq and sink_next == t:
            sink_idx += 1
            if sink_idx >= nsym:
                sink_next = -1
            else:
                pstart[sink] = t
                lo[sink] = t
                hi[sink] = t + win
                r = ring[sink]
                for q in range(vote):
                    r[q] = False
                rpos[sink] = 0
                rcnt[sink] = 0
                seen[sink] = 0
                sink_next = -1

        listening = False
        for i in range(n):
            if hi[i] <= t or lo[i] > t:
                continue
            if noise_std != 0.0:
                re, im = noise_sample(noise_seed, i, t, noise_std)
            else:
                re = 0.0
                im = 0.0
            tri = taps_re_l
            tii = taps_im_l
            for e in range(len(act_node)):
                j = act_node[e]
                if j == i:
                    continue
                base = t - act_start[e] - delay_l[j][i]
                if base < 0 or base >= reach:
                    continue
                wr = wave_re[j]
                wi = wave_im[j]
                trow = tri[j][i]
                irow = tii[j][i]
                for q in range(ntap):
                    idx = base - q
                    if 0 <= idx < tp:
                        tr = trow[q]
                        ti = irow[q]
                        re += tr * wr[idx] - ti * wi[idx]
                        im += tr * wi[idx] + ti * wr[idx]
            flag = re * re + im * im > thr2
            r = ring[i]
            p = rpos[i]
            rcnt[i] += int(flag) - int(r[p])
            r[p] = flag
            rpos[i] = p + 1 if p + 1 < vote else 0
            seen[i] += 1

            if seen[i] >= vote and 2 * rcnt[i] > vote:
                o = t - vote + 1
                hi[i] = -1
                if i == sink:
                    if not sink_acq:
                        sink_acq = True
                        sink_idx = (o - src_offset) // ts
                        sink_m = sink_idx
                    if 0 <= sink_idx < nsym:
                        sink_bits[sink_idx] = 1
                    sink_next = o + ts - lead
                else:
                    k = period[i]
                    tau = t + 1 + turn
                    push(i, tau, t)
                    listen = tau - pstart[i]
                    if acquired[i]:
                        out_kind[i, k] = ONE_BIT_RELAY
                    else:
                        out_kind[i, k] = LISTEN_DETECT
                        acquired[i] = True
                        if listen > ts - tp:
                            listen = ts - tp
                    out_listen[i, k] = listen
                    out_tx[i, k] = tp
                    next_start[i] = o + ts - lead
            elif t == hi[i] - 1:
                if i == sink:
                    hi[i] = -1
                    if sink_acq:
                        sink_next = pstart[sink] + ts
                else:
                    finish_empty(i)
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
                if relay[i] and next_start[i] > t and next_start[i] < nxt:
                    nxt = next_start[i]
            if sink_next > t and sink_next < nxt:
                nxt = sink_next
            t = nxt if nxt > t else t + 1

    # Close out periods at or beyond the horizon as signal-free.
    for i in range(n):
        if not relay[i]:
            continue
        if hi[i] > -1:
            finish_empty(i)
        k = period[i]
        s = next_start[i]
        if k < 0:
            s = int(first_start[i])
        while k + 1 < n_periods:
            k += 1
            out_start[i, k] = s
            if wake[i, k]:
                if acquired[i]:
                    out_kind[i, k] = ZERO_BIT_RELAY
                    out_listen[i, k] = win
                else:
                    out_kind[i, k] = LISTEN_EMPTY
                    out_listen[i, k] = ts
            else:
                out_kind[i, k] = SLEEP
                out_listen[i, k] = 0
            out_tx[i, k] = 0
            s += ts
        period[i] = k

    return n_tx, int(sink_acq), sink_m
