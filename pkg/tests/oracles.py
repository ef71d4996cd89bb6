"""Independent reference implementations used to freeze expected values.

These deliberately avoid the window-slicing / FFT code paths of the engine:
voting here walks evidence entries one by one and scatters each vote with
np.add.at, and the mixing convolution is a literal 9-term loop.
"""

import numpy as np


def oracle_vote(E, field):
    """Entry-by-entry voting: the aggregation loop, vectorized only over K_r."""
    E = np.asarray(E, dtype=np.float64)
    H, W, _ = E.shape
    out = np.zeros((H, W), dtype=np.float64)
    for i in range(H):
        for j in range(W):
            for r in range(field.R):
                v = E[i, j, r]
                if v == 0.0:
                    continue
                ys = i + field.offsets[r][:, 0]
                xs = j + field.offsets[r][:, 1]
                ok = (ys >= 0) & (ys < H) & (xs >= 0) & (xs < W)
                np.add.at(out, (ys[ok], xs[ok]), v / field.counts[r])
    return out


def oracle_vote_pure(E, field):
    """Literal nested-loop voting in pure Python; only for tiny inputs."""
    E = np.asarray(E, dtype=np.float64)
    H, W, _ = E.shape
    out = [[0.0] * W for _ in range(H)]
    for i in range(H):
        for j in range(W):
            for r in range(field.R):
                k_r = field.counts[r]
                for dy, dx in field.offsets[r]:
                    y, x = i + int(dy), j + int(dx)
                    if 0 <= y < H and 0 <= x < W:
                        out[y][x] += E[i, j, r] / k_r
    return np.array(out)


def oracle_correlate3x3(maps, weights, bias):
    """Direct same-padding 3x3 correlation with zero borders."""
    maps = np.asarray(maps, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    C = weights.shape[0]
    N, H, W = maps.shape
    out = np.zeros((C, H, W), dtype=np.float64)
    for c in range(C):
        for n in range(N):
            for u in range(3):
                for v in range(3):
                    w = weights[c, n, u, v]
                    for y in range(H):
                        for x in range(W):
                            yy, xx = y + u - 1, x + v - 1
                            if 0 <= yy < H and 0 <= xx < W:
                                out[c, y, x] += w * maps[n, yy, xx]
        out[c] += bias[c]
    return out


def oracle_peaks(O, top_k):
    """Exhaustive 3x3 NMS plus full sort over all surviving pixels."""
    O = np.asarray(O)
    H, W = O.shape
    survivors = []
    for y in range(H):
        for x in range(W):
            neigh = O[max(0, y - 1):y + 2, max(0, x - 1):x + 2]
            if O[y, x] == neigh.max():
                survivors.append((y, x, float(O[y, x])))
    survivors.sort(key=lambda t: (-t[2], t[0], t[1]))
    return survivors[:top_k]


def rel_max_err(got, want):
    """Max abs difference normalized by the larger max magnitude."""
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    scale = max(float(np.abs(got).max(initial=0.0)),
                float(np.abs(want).max(initial=0.0)), 1e-300)
    return float(np.abs(got - want).max(initial=0.0)) / scale
