"""Pure-Python simulation kernel: the fallback twin of _ckernel.

Flat-array mirror of the decision rules in `engine.api`, tuned for the inner
loop (precomputed neighbor/ray tables, local bindings, no GridState churn).
Both kernels must consume the random stream identically; any change here has
to land in _ckernel.pyx too, and the parity tests will catch drift.
"""

from __future__ import annotations

import math

from ..rng import Pcg32

GRID = 6
N_CELLS = GRID * GRID

# MOORE[c]: tuple of cell indices surrounding c.
# RAYS[c][d]: cell indices scanned outward from c in direction d (U, D, L, R).
MOORE: list[tuple[int, ...]] = []
RAYS: list[tuple[tuple[int, ...], ...]] = []
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

for _c in range(N_CELLS):
    _r, _k = divmod(_c, GRID)
    m = []
    for _dr in (-1, 0, 1):
        for _dk in (-1, 0, 1):
            if _dr == 0 and _dk == 0:
                continue
            rr, kk = _r + _dr, _k + _dk
            if 0 <= rr < GRID and 0 <= kk < GRID:
                m.append(GRID * rr + kk)
    MOORE.append(tuple(m))
    rays = []
    for _dr, _dk in _DELTAS:
        ray = []
        rr, kk = _r + _dr, _k + _dk
        while 0 <= rr < GRID and 0 <= kk < GRID:
            ray.append(GRID * rr + kk)
            rr, kk = rr + _dr, kk + _dk
        rays.append(tuple(ray))
    RAYS.append(tuple(rays))


def _placement(rng: Pcg32, n: int, placement: int, occ: list[int],
               cell_of: list[int], color: list[int]) -> None:
    if placement == 0:  # uniform
        pool = list(range(N_CELLS))
        for i in range(n):
            j = i + rng.randbelow(N_CELLS - i)
            pool[i], pool[j] = pool[j], pool[i]
            occ[pool[i]] = i + 1
            cell_of[i + 1] = pool[i]
        n_yellow = n // 2
        if n % 2:
            n_yellow += rng.randbelow(2)
        for a in range(1, n + 1):
            color[a] = 0 if a <= n_yellow else 1
    else:  # seat raster
        phase = rng.randbelow(2)
        for a in range(1, n + 1):
            occ[a - 1] = a
            cell_of[a] = a - 1
            color[a] = (a - 1 + phase) % 2


def _snapshot(occ: list[int], cell_of: list[int], color: list[int],
              n: int, bins: tuple[int, ...], min_bins: int) -> tuple[float, float, float]:
    seg_sum = 0.0
    seg_cnt = 0
    score_sum = 0
    nbr_sum = 0
    for a in range(1, n + 1):
        same = tot = 0
        ca = color[a]
        for m in MOORE[cell_of[a]]:
            v = occ[m]
            if v:
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
    seg = seg_sum / seg_cnt if seg_cnt else math.nan
    return seg, score_sum / n, nbr_sum / n


def run_kernel(
    policy: int,
    bins_seq,
    n: int,
    periods: int,
    record_every: int,
    seed: int,
    stream: int,
    placement: int,
) -> tuple[list[int], list[int], list[tuple[float, float, float]]]:
    """Execute one run; returns (occupancy[36], color[n+1], trace).

    policy: 0 best response, 1 random relocation. placement: 0 uniform,
    1 raster. color[0] is a -1 sentinel; trace holds
    (segregation, avg_score, avg_neighbors) at period 0 and then every
    `record_every` periods.
    """
    bins = tuple(bins_seq)
    min_bins = min(bins)
    max_bins = max(bins)
    rng = Pcg32(seed, stream)
    randbelow = rng.randbelow

    occ = [0] * N_CELLS
    cell_of = [0] * (n + 1)
    color = [-1] * (n + 1)
    _placement(rng, n, placement, occ, cell_of, color)

    trace = [_snapshot(occ, cell_of, color, n, bins, min_bins)]
    moore = MOORE
    rays = RAYS
    cand = [0] * 5
    ties = [0] * 5

    for t in range(1, periods + 1):
        agent = randbelow(n) + 1
        cur = cell_of[agent]
        ca = color[agent]

        # satisfied-at-maximum gate, shared by both policies
        same = tot = 0
        for m in moore[cur]:
            v = occ[m]
            if v:
                tot += 1
                if color[v] == ca:
                    same += 1
        cur_score = bins[(10 * same) // tot] if tot else min_bins
        if cur_score == max_bins:
            if t % record_every == 0:
                trace.append(_snapshot(occ, cell_of, color, n, bins, min_bins))
            continue

        if policy == 0:
            n_cand = 1
            cand[0] = cur
            for ray in rays[cur]:
                for cc in ray:
                    if not occ[cc]:
                        cand[n_cand] = cc
                        n_cand += 1
                        break
            best = -1
            n_tie = 0
            for i in range(n_cand):
                c = cand[i]
                same = tot = 0
                for m in moore[c]:
                    v = occ[m]
                    if v and v != agent:
                        tot += 1
                        if color[v] == ca:
                            same += 1
                s = bins[(10 * same) // tot] if tot else min_bins
                if s > best:
                    best = s
                    ties[0] = c
                    n_tie = 1
                elif s == best:
                    ties[n_tie] = c
                    n_tie += 1
            dest = ties[randbelow(n_tie)]
        else:
            n_cand = 0
            for ray in rays[cur]:
                for cc in ray:
                    if not occ[cc]:
                        cand[n_cand] = cc
                        n_cand += 1
                        break
            dest = cand[randbelow(n_cand)] if n_cand else cur

        if dest != cur:
            occ[cur] = 0
            occ[dest] = agent
            cell_of[agent] = dest

        if t % record_every == 0:
            trace.append(_snapshot(occ, cell_of, color, n, bins, min_bins))

    return occ, color, trace
