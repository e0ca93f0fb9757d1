"""Level-by-level minimum-distance decoding.

Each block keeps only its minimum-distance candidate encoded strings.  A
level-m block builds its candidates by leaving one of its six sub-blocks out,
combining candidates of the other five and completing the left-out
sub-block from the Z-parity condition.  The completed sub-block is scored by
back-substitution: fix one of its own sub-blocks to a candidate, derive the
remaining five sub-strings, and sum their distances recursively.

Encoded strings of a level-m block are int64 bit patterns of ``4**m`` bits,
bit ``(j-1) * 4**(m-1) + l`` holding logical qubit ``(j, l)``.  A level-4 block
string does not fit a single word and is kept as its four ``x_j`` words.

Random choices (pruning and tie-breaks) come from numba's generator, seeded
once per shot from the caller's stream.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .base import DecodeResult, DecoderConfig, check_outcomes

MAX_MD_LEVEL = 4
_BIG = 1 << 40
_MEMO_BITS = 16


@njit(cache=True, inline="always")
def _bword(j, x1, x2, x3, x4):
    # sub-block string j of the codeword whose first sub-block is all zero
    if j == 0:
        return x1 ^ x1
    if j == 1:
        return x1
    if j == 2:
        return x1 ^ x2
    if j == 3:
        return x2 ^ x4
    if j == 4:
        return x2 ^ x3 ^ x4
    return x2 ^ x3


@njit(cache=True)
def _extract6(o6):
    x1 = (o6 ^ (o6 >> 1)) & 1
    x2 = ((o6 >> 1) ^ (o6 >> 2)) & 1
    x3 = ((o6 >> 3) ^ (o6 >> 4)) & 1
    x4 = ((o6 >> 4) ^ (o6 >> 5)) & 1
    return x1 | (x2 << 1) | (x3 << 2) | (x4 << 3)


@njit(cache=True)
def _popcount6(v):
    c = 0
    for i in range(6):
        c += (v >> i) & 1
    return c


@njit(cache=True)
def _level1(bits, nb):
    """Exact distance tables and candidate lists of all level-1 blocks."""
    dist1 = np.empty((nb, 16), dtype=np.int64)
    off = np.empty(nb + 1, dtype=np.int64)
    cs = np.empty(6 * nb, dtype=np.int64)
    cd = np.empty(nb, dtype=np.int64)
    cw = np.empty(16, dtype=np.int64)
    for v in range(16):
        x1 = v & 1
        x2 = (v >> 1) & 1
        x3 = (v >> 2) & 1
        x4 = (v >> 3) & 1
        w = 0
        for j in range(6):
            w |= _bword(j, x1, x2, x3, x4) << j
        cw[v] = w
    pos = 0
    for b in range(nb):
        o6 = 0
        for i in range(6):
            o6 |= np.int64(bits[6 * b + i]) << i
        for v in range(16):
            d = _popcount6(cw[v] ^ o6)
            dist1[b, v] = min(d, 6 - d)
        off[b] = pos
        if _popcount6(o6) % 2 == 0:
            cs[pos] = _extract6(o6)
            pos += 1
            cd[b] = 0
        else:
            # the six single-flip neighbours carry distinct values; keep sorted
            tmp = np.empty(6, dtype=np.int64)
            for i in range(6):
                tmp[i] = _extract6(o6 ^ (1 << i))
            tmp.sort()
            for i in range(6):
                cs[pos] = tmp[i]
                pos += 1
            cd[b] = 1
    off[nb] = pos
    return dist1, cs[:pos], off, cd


@njit(cache=True)
def _reduce_sum(off, cd, nb_parent, m_th):
    """Per-sub-block (start, count) after capping M1+...+M6 at ``m_th``."""
    nsub = 6 * nb_parent
    rs = off[:nsub].copy()
    rc = np.empty(nsub, dtype=np.int64)
    for s in range(nsub):
        rc[s] = off[s + 1] - off[s]
    if m_th <= 0:
        return rs, rc
    for p in range(nb_parent):
        while True:
            total = 0
            for j in range(6):
                total += rc[6 * p + j]
            if total <= m_th:
                break
            best = -1
            for j in range(6):
                if rc[6 * p + j] > 1 and (best < 0 or rc[6 * p + j] > rc[6 * p + best]):
                    best = j
            if best < 0:
                break
            s = 6 * p + best
            rs[s] = rs[s] + np.random.randint(0, rc[s])
            rc[s] = 1
    return rs, rc


@njit(cache=True)
def _dist2(blk, s, dist1, cs1, rs1, rc1, cd1, bound):
    """Distance of a level-2 block taking encoded value ``s`` (16 bits)."""
    x1 = s & 15
    x2 = (s >> 4) & 15
    x3 = (s >> 8) & 15
    x4 = (s >> 12) & 15
    base = 6 * blk
    best = bound
    for j1 in range(6):
        sub = base + j1
        b1 = _bword(j1, x1, x2, x3, x4)
        for r in range(rs1[sub], rs1[sub] + rc1[sub]):
            t = cs1[r] ^ b1
            tot = cd1[sub]
            for j in range(6):
                if j != j1:
                    tot += dist1[base + j, t ^ _bword(j, x1, x2, x3, x4)]
                    if tot >= best:
                        break
            if tot < best:
                best = tot
    return best


@njit(cache=True)
def _dist3(blk, s, dist1, cs1, rs1, rc1, cd1, cs2, rs2, rc2, cd2, bound):
    """Distance of a level-3 block taking encoded value ``s`` (64 bits)."""
    x1 = s & 0xFFFF
    x2 = (s >> 16) & 0xFFFF
    x3 = (s >> 32) & 0xFFFF
    x4 = (s >> 48) & 0xFFFF
    base = 6 * blk
    best = bound
    for j1 in range(6):
        sub = base + j1
        b1 = _bword(j1, x1, x2, x3, x4)
        for r in range(rs2[sub], rs2[sub] + rc2[sub]):
            t = cs2[r] ^ b1
            tot = cd2[sub]
            for j in range(6):
                if j != j1:
                    if tot >= best:
                        break
                    tot += _dist2(base + j, t ^ _bword(j, x1, x2, x3, x4), dist1, cs1, rs1, rc1, cd1, best - tot)
            if tot < best:
                best = tot
    return best


@njit(cache=True)
def _memo_slot(keys_s, keys_b, stamp, gen, sub, s):
    mask = (1 << _MEMO_BITS) - 1
    h = ((s * 0x1E3779B97F4A7C15) ^ (sub * 0x232BE59BD9B4E019)) >> 20
    h = h & mask
    for probe in range(32):
        i = (h + probe) & mask
        if stamp[i] != gen:
            return i, False
        if keys_s[i] == s and keys_b[i] == sub:
            return i, True
    return -1, False


@njit(cache=True)
def _score(m, sub, y, cs_s, off_s, cd_s, dist1, cs1, rs1, rc1, cd1, cs2, rs2, rc2, cd2, memo_s, memo_b, memo_v,
           memo_x, stamp, gen, bound):
    """Distance of level-(m-1) sub-block ``sub`` taking the completed value ``y``.

    Values at or above ``bound`` may come back as any number >= ``bound``;
    the memo stores such results as lower bounds.
    """
    lo = off_s[sub]
    hi = off_s[sub + 1]
    k = lo + np.searchsorted(cs_s[lo:hi], y)
    if k < hi and cs_s[k] == y:
        return cd_s[sub]
    if m == 2:
        return dist1[sub, y]
    slot, hit = _memo_slot(memo_s, memo_b, stamp, gen, sub, y)
    if hit and (memo_x[slot] or memo_v[slot] >= bound):
        return memo_v[slot]
    if m == 3:
        d = _dist2(sub, y, dist1, cs1, rs1, rc1, cd1, bound)
    else:
        d = _dist3(sub, y, dist1, cs1, rs1, rc1, cd1, cs2, rs2, rc2, cd2, bound)
    if slot >= 0:
        memo_s[slot] = y
        memo_b[slot] = sub
        memo_v[slot] = d
        memo_x[slot] = d < bound
        stamp[slot] = gen
    return d


@njit(cache=True)
def _level_step(m, nb, cs_s, off_s, cd_s, n_th, dist1, cs1, rs1, rc1, cd1, cs2, rs2, rc2, cd2,
                memo_s, memo_b, memo_v, memo_x, stamp, gen, stop_if_multi):
    """Candidates of all level-m blocks.

    Returns ``(words, off, cd, multi)`` where ``words`` rows are the four x_j
    words of each deduplicated candidate and ``multi`` is True when some
    block kept more than one candidate (the scan stops early at the first
    such block if ``stop_if_multi``).
    """
    cap = 64
    words = np.empty((cap, 4), dtype=np.int64)
    nout = 0
    off = np.zeros(nb + 1, dtype=np.int64)
    cd = np.zeros(nb, dtype=np.int64)
    multi = False
    start = np.empty(5, dtype=np.int64)
    cnt = np.empty(5, dtype=np.int64)
    subs = np.empty(5, dtype=np.int64)
    idx = np.empty(5, dtype=np.int64)
    for blk in range(nb):
        base = 6 * blk
        total_min = 0
        for j in range(6):
            total_min += cd_s[base + j]
        best = _BIG
        block_start = nout
        for b in range(6):
            if total_min > best:
                break
            const = total_min - cd_s[base + b]
            q = 0
            for j in range(6):
                if j != b:
                    subs[q] = base + j
                    start[q] = off_s[base + j]
                    cnt[q] = off_s[base + j + 1] - off_s[base + j]
                    q += 1
            if n_th > 0:
                while True:
                    prod = 1.0
                    for q in range(5):
                        prod *= cnt[q]
                    if prod <= n_th:
                        break
                    big = 0
                    for q in range(1, 5):
                        if cnt[q] > cnt[big]:
                            big = q
                    start[big] = start[big] + np.random.randint(0, cnt[big])
                    cnt[big] = 1
            for q in range(5):
                idx[q] = 0
            while True:
                yb = cs_s[start[0]] ^ cs_s[start[0]]
                for q in range(5):
                    yb ^= cs_s[start[q] + idx[q]]
                # only totals up to ``best`` matter, so larger distances may be cut short
                lim = _BIG if best >= _BIG else best - const + 1
                d = _score(m, base + b, yb, cs_s, off_s, cd_s, dist1, cs1, rs1, rc1, cd1,
                           cs2, rs2, rc2, cd2, memo_s, memo_b, memo_v, memo_x, stamp, gen, lim)
                tot = const + d
                if tot <= best:
                    if tot < best:
                        best = tot
                        nout = block_start
                    if nout == cap:
                        cap *= 2
                        grown = np.empty((cap, 4), dtype=np.int64)
                        grown[:nout] = words[:nout]
                        words = grown
                    # sub-block strings y_0..y_5 with y_b completed
                    y0 = yb
                    y1 = yb
                    y2 = yb
                    y3 = yb
                    y4 = yb
                    y5 = yb
                    q = 0
                    for j in range(6):
                        if j == b:
                            continue
                        v = cs_s[start[q] + idx[q]]
                        q += 1
                        if j == 0:
                            y0 = v
                        elif j == 1:
                            y1 = v
                        elif j == 2:
                            y2 = v
                        elif j == 3:
                            y3 = v
                        elif j == 4:
                            y4 = v
                        else:
                            y5 = v
                    words[nout, 0] = y0 ^ y1
                    words[nout, 1] = y1 ^ y2
                    words[nout, 2] = y3 ^ y4
                    words[nout, 3] = y4 ^ y5
                    nout += 1
                # advance the mixed-radix counter
                q = 0
                while q < 5:
                    idx[q] += 1
                    if idx[q] < cnt[q]:
                        break
                    idx[q] = 0
                    q += 1
                if q == 5:
                    break
        # deduplicate this block's rows (sort by all four words)
        rows = words[block_start:nout].copy()
        nrows = nout - block_start
        if nrows > 1:
            order = np.argsort(rows[:, 3], kind="mergesort")
            for col in (2, 1, 0):
                order = order[np.argsort(rows[order, col], kind="mergesort")]
            rows = rows[order]
            keep = 1
            for i in range(1, nrows):
                same = True
                for c in range(4):
                    if rows[i, c] != rows[keep - 1, c]:
                        same = False
                        break
                if not same:
                    rows[keep] = rows[i]
                    keep += 1
            words[block_start:block_start + keep] = rows[:keep]
            nout = block_start + keep
        off[blk + 1] = nout
        cd[blk] = best
        if nout - block_start != 1:
            multi = True
            if stop_if_multi:
                return words[:nout], off, cd, multi
    return words[:nout], off, cd, multi


@njit(cache=True)
def _pack(words, m):
    width = 4 ** (m - 1)
    out = np.empty(words.shape[0], dtype=np.int64)
    for i in range(words.shape[0]):
        out[i] = words[i, 0] | (words[i, 1] << width) | (words[i, 2] << (2 * width)) | (words[i, 3] << (3 * width))
    return out


@njit(cache=True)
def _decode_one(bits, level, detect, detect_level, n_th, m_th, seed, memo_s, memo_b, memo_v, memo_x, stamp, gen):
    """Returns ``(logical bits, distance, detected, top candidate count)``."""
    np.random.seed(seed)
    k = 4**level
    logical = np.zeros(k, dtype=np.uint8)
    nb = 6 ** (level - 1)
    dist1, cs1, off1, cd1 = _level1(bits, nb)
    if detect and detect_level <= 1:
        for b in range(nb):
            if off1[b + 1] - off1[b] != 1:
                return logical, -1, True, 0
    if level == 1:
        n = off1[1]
        pick = np.random.randint(0, n)
        v = cs1[pick]
        for j in range(4):
            logical[j] = (v >> j) & 1
        return logical, cd1[0], detect and n != 1, n
    empty = np.zeros(1, dtype=np.int64)
    rs1, rc1 = _reduce_sum(off1, cd1, nb // 6, m_th[2])
    cs_s, off_s, cd_s = cs1, off1, cd1
    cs2, rs2, rc2, cd2 = empty, empty, empty, empty
    words = np.zeros((1, 4), dtype=np.int64)
    cd_top = cd1
    off_top = off1
    for m in range(2, level + 1):
        nbm = 6 ** (level - m)
        stop = detect and m >= detect_level
        words, off_m, cd_m, multi = _level_step(m, nbm, cs_s, off_s, cd_s, n_th[m], dist1, cs1, rs1, rc1, cd1,
                                                cs2, rs2, rc2, cd2, memo_s, memo_b, memo_v, memo_x, stamp, gen * 8 + m, stop)
        if stop and multi:
            return logical, -1, True, 0
        cd_top = cd_m
        off_top = off_m
        if m < level:
            packed = _pack(words, m)
            if m == 2:
                cs2 = packed
                rs2, rc2 = _reduce_sum(off_m, cd_m, nbm // 6, m_th[3])
                cd2 = cd_m
            cs_s, off_s, cd_s = packed, off_m, cd_m
    n = off_top[1]
    pick = np.random.randint(0, n)
    width = 4 ** (level - 1)
    for j in range(4):
        w = words[pick, j]
        for l in range(width):
            logical[j * width + l] = (w >> l) & 1
    return logical, cd_top[0], detect and n != 1, n


@njit(cache=True)
def _decode_batch(outcomes, level, detect, detect_level, n_th, m_th, seeds):
    shots = outcomes.shape[0]
    k = 4**level
    logical = np.zeros((shots, k), dtype=np.uint8)
    dist = np.zeros(shots, dtype=np.int64)
    detected = np.zeros(shots, dtype=np.bool_)
    ncand = np.zeros(shots, dtype=np.int64)
    size = 1 << _MEMO_BITS
    memo_s = np.zeros(size, dtype=np.int64)
    memo_b = np.zeros(size, dtype=np.int64)
    memo_v = np.zeros(size, dtype=np.int64)
    memo_x = np.zeros(size, dtype=np.bool_)
    stamp = np.zeros(size, dtype=np.int64)
    zero_logical = np.zeros(k, dtype=np.uint8)
    for s in range(shots):
        row = outcomes[s]
        # an all-zero pattern is the unique distance-0 codeword
        clean = True
        for i in range(row.shape[0]):
            if row[i] != 0:
                clean = False
                break
        if clean:
            logical[s] = zero_logical
            ncand[s] = 1
            continue
        lg, d, det, n = _decode_one(row, level, detect, detect_level, n_th, m_th, seeds[s],
                                    memo_s, memo_b, memo_v, memo_x, stamp, s + 1)
        logical[s] = lg
        dist[s] = d
        detected[s] = det
        ncand[s] = n
    return logical, dist, detected, ncand


def _caps(mapping: dict, size: int) -> np.ndarray:
    arr = np.zeros(size, dtype=np.int64)
    for lvl, cap in mapping.items():
        if 0 <= lvl < size and cap is not None:
            arr[lvl] = int(min(cap, 2**62))
    return arr


def md_decode_batch(outcomes, level: int, cfg: DecoderConfig | None = None, seeds=None, rng=None):
    """Decode a ``(shots, 6**level)`` batch.

    Returns ``(logical, distance, detected, n_candidates)``; ``distance`` is -1
    for detected shots.  Per-shot seeds come from ``seeds`` or are drawn from
    ``rng`` (default: a generator seeded with ``cfg.seed``).
    """
    cfg = cfg or DecoderConfig()
    if not 1 <= level <= MAX_MD_LEVEL:
        raise ValueError(f"md decoding supports levels 1..{MAX_MD_LEVEL}, got {level}")
    if cfg.mode == "detect" and cfg.detect_level > level:
        raise ValueError(f"detect_level {cfg.detect_level} exceeds level {level}")
    outcomes = check_outcomes(outcomes, level)
    if outcomes.ndim == 1:
        outcomes = outcomes[None, :]
    if seeds is None:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        seeds = rng.integers(0, 2**32 - 1, size=len(outcomes), dtype=np.int64)
    seeds = np.asarray(seeds, dtype=np.int64)
    return _decode_batch(
        np.ascontiguousarray(outcomes),
        level,
        cfg.mode == "detect",
        cfg.detect_level,
        _caps(cfg.n_th, 8),
        _caps(cfg.m_th, 8),
        seeds,
    )


def md_decode(outcomes, level: int, cfg: DecoderConfig | None = None, rng=None) -> DecodeResult:
    logical, dist, detected, _ = md_decode_batch(np.asarray(outcomes)[None, :], level, cfg, rng=rng)
    if detected[0]:
        return DecodeResult(None, True)
    return DecodeResult(logical[0], False, int(dist[0]))


def level1_candidates(block) -> list[tuple[np.ndarray, int]]:
    """Minimum-distance (encoded bits, distance) pairs of one six-bit block."""
    block = np.asarray(block, dtype=np.uint8)
    if block.shape != (6,):
        raise ValueError("a level-1 block has exactly 6 bits")
    _, cs, off, cd = _level1(block, 1)
    return [(np.array([(v >> j) & 1 for j in range(4)], dtype=np.uint8), int(cd[0])) for v in cs[off[0]:off[1]]]
