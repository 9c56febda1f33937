# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel: the hot twin of _pykernel.

Same recurrences, same random-stream discipline, same float summation order;
tests/test_kernel_parity.py holds the two in lockstep. Edit both or neither.
"""

from libc.math cimport NAN
from libc.stdint cimport int8_t, uint32_t, uint64_t

import numpy as np

cdef uint64_t PCG_MULT = 6364136223846793005ULL

cdef int DR[4]
cdef int DC[4]
DR[0] = -1; DR[1] = 1; DR[2] = 0; DR[3] = 0
DC[0] = 0;  DC[1] = 0; DC[2] = -1; DC[3] = 1


cdef inline uint32_t pcg_next(uint64_t* state, uint64_t inc) nogil:
    cdef uint64_t old = state[0]
    cdef uint32_t xorshifted, rot
    state[0] = old * PCG_MULT + inc
    xorshifted = <uint32_t>(((old >> 18) ^ old) >> 27)
    rot = <uint32_t>(old >> 59)
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))


cdef inline uint64_t pcg_init(uint64_t seed, uint64_t stream, uint64_t* inc_out) nogil:
    cdef uint64_t state = 0
    cdef uint64_t inc = (stream << 1) | 1ULL
    pcg_next(&state, inc)
    state = state + seed
    pcg_next(&state, inc)
    inc_out[0] = inc
    return state


cdef inline uint32_t randbelow(uint64_t* state, uint64_t inc, uint32_t bound) nogil:
    # bound <= 1 consumes no draw, matching the Python twin
    cdef uint32_t threshold, r
    if bound <= 1:
        return 0
    threshold = (-bound) % bound
    while True:
        r = pcg_next(state, inc)
        if r >= threshold:
            return r % bound


cdef inline int jump(int* occ, int frm, int d) nogil:
    cdef int r = frm // 6
    cdef int c = frm % 6
    while True:
        r += DR[d]
        c += DC[d]
        if r < 0 or r >= 6 or c < 0 or c >= 6:
            return -1
        if occ[6 * r + c] == 0:
            return 6 * r + c


cdef inline int evaluate(int* occ, int8_t* color, int agent, int ca, int cell,
                         int* bins, int min_bins) nogil:
    cdef int r = cell // 6
    cdef int c = cell % 6
    cdef int same = 0, tot = 0
    cdef int dr, dc, rr, cc, v
    for dr in range(-1, 2):
        for dc in range(-1, 2):
            if dr == 0 and dc == 0:
                continue
            rr = r + dr
            cc = c + dc
            if rr < 0 or rr >= 6 or cc < 0 or cc >= 6:
                continue
            v = occ[6 * rr + cc]
            if v != 0 and v != agent:
                tot += 1
                if color[v] == ca:
                    same += 1
    if tot == 0:
        return min_bins
    return bins[(10 * same) // tot]


cdef void placement_draw(uint64_t* st, uint64_t inc, int n, int placement,
                         int* occ, int* cell_of, int8_t* color) nogil:
    cdef int pool[36]
    cdef int i, j, a, tmp, n_yellow, phase
    if placement == 0:
        for i in range(36):
            pool[i] = i
        for i in range(n):
            j = i + <int>randbelow(st, inc, <uint32_t>(36 - i))
            tmp = pool[i]; pool[i] = pool[j]; pool[j] = tmp
            occ[pool[i]] = i + 1
            cell_of[i + 1] = pool[i]
        n_yellow = n // 2
        if n % 2:
            n_yellow += <int>randbelow(st, inc, 2)
        for a in range(1, n + 1):
            color[a] = 0 if a <= n_yellow else 1
    else:
        phase = <int>randbelow(st, inc, 2)
        for a in range(1, n + 1):
            occ[a - 1] = a
            cell_of[a] = a - 1
            color[a] = <int8_t>((a - 1 + phase) % 2)


cdef void snapshot(int* occ, int* cell_of, int8_t* color, int n,
                   int* bins, int min_bins, double* out) nogil:
    cdef double seg_sum = 0.0
    cdef int seg_cnt = 0
    cdef long score_sum = 0
    cdef long nbr_sum = 0
    cdef int a, same, tot, r, c, dr, dc, rr, cc, v, ca
    for a in range(1, n + 1):
        same = 0
        tot = 0
        ca = color[a]
        r = cell_of[a] // 6
        c = cell_of[a] % 6
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                rr = r + dr
                cc = c + dc
                if rr < 0 or rr >= 6 or cc < 0 or cc >= 6:
                    continue
                v = occ[6 * rr + cc]
                if v != 0:
                    tot += 1
                    if color[v] == ca:
                        same += 1
        nbr_sum += tot
        if tot:
            seg_sum += 100.0 * same / tot
            seg_cnt += 1
            score_sum += bins[(10 * same) // tot]
        else:
            score_sum += min_bins
    out[0] = seg_sum / seg_cnt if seg_cnt else NAN
    out[1] = <double>score_sum / n
    out[2] = <double>nbr_sum / n


cdef void run_loop(int policy, int* bins, int min_bins, int max_bins, int n,
                   long periods, long record_every, uint64_t seed, uint64_t stream,
                   int placement, int* occ, int* cell_of, int8_t* color,
                   double[:, ::1] trace) nogil:
    cdef uint64_t st, inc
    cdef long t
    cdef int agent, cur, ca, dest, d, cc, i, c
    cdef int n_cand, n_tie, best, s, same, tot, cur_score
    cdef int cand[5]
    cdef int ties[5]
    cdef long row = 0

    st = pcg_init(seed, stream, &inc)
    placement_draw(&st, inc, n, placement, occ, cell_of, color)
    snapshot(occ, cell_of, color, n, bins, min_bins, &trace[0, 0])

    for t in range(1, periods + 1):
        agent = <int>randbelow(&st, inc, <uint32_t>n) + 1
        cur = cell_of[agent]
        ca = color[agent]

        # satisfied-at-maximum gate, shared by both policies
        cur_score = evaluate(occ, color, agent, ca, cur, bins, min_bins)
        if cur_score == max_bins:
            if t % record_every == 0:
                row += 1
                snapshot(occ, cell_of, color, n, bins, min_bins, &trace[row, 0])
            continue

        if policy == 0:
            n_cand = 1
            cand[0] = cur
            for d in range(4):
                cc = jump(occ, cur, d)
                if cc >= 0:
                    cand[n_cand] = cc
                    n_cand += 1
            best = -1
            n_tie = 0
            for i in range(n_cand):
                c = cand[i]
                s = evaluate(occ, color, agent, ca, c, bins, min_bins)
                if s > best:
                    best = s
                    ties[0] = c
                    n_tie = 1
                elif s == best:
                    ties[n_tie] = c
                    n_tie += 1
            dest = ties[randbelow(&st, inc, <uint32_t>n_tie)]
        else:
            n_cand = 0
            for d in range(4):
                cc = jump(occ, cur, d)
                if cc >= 0:
                    cand[n_cand] = cc
                    n_cand += 1
            if n_cand:
                dest = cand[randbelow(&st, inc, <uint32_t>n_cand)]
            else:
                dest = cur

        if dest != cur:
            occ[cur] = 0
            occ[dest] = agent
            cell_of[agent] = dest

        if t % record_every == 0:
            row += 1
            snapshot(occ, cell_of, color, n, bins, min_bins, &trace[row, 0])


def run_kernel(int policy, bins_seq, int n, long periods, long record_every,
               seed, stream, int placement):
    """Execute one run; same contract as _pykernel.run_kernel."""
    cdef int bins[11]
    cdef int occ[36]
    cdef int cell_of[37]
    cdef int8_t color[37]
    cdef int i
    cdef int min_bins, max_bins
    cdef uint64_t seed64 = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t stream64 = <uint64_t>(int(stream) & 0xFFFFFFFFFFFFFFFF)

    bins_list = list(bins_seq)
    if len(bins_list) != 11:
        raise ValueError("bins must have 11 entries")
    for i in range(11):
        bins[i] = bins_list[i]
    min_bins = min(bins_list)
    max_bins = max(bins_list)
    if not 1 <= n <= 36:
        raise ValueError("n must be in 1..36")
    if periods < 0 or record_every < 1:
        raise ValueError("bad periods/record_every")

    for i in range(36):
        occ[i] = 0
    for i in range(37):
        cell_of[i] = 0
        color[i] = -1

    trace_arr = np.empty((periods // record_every + 1, 3), dtype=np.float64)
    cdef double[:, ::1] trace = trace_arr

    with nogil:
        run_loop(policy, bins, min_bins, max_bins, n, periods, record_every,
                 seed64, stream64, placement, occ, cell_of, color, trace)

    return (
        [occ[i] for i in range(36)],
        [color[i] for i in range(n + 1)],
        [tuple(row) for row in trace_arr.tolist()],
    )
