"""Brute-force reference implementations used only by the tests.

Deliberately loop-based and free of the package's vectorised code paths.
"""

import math


def rotate_matrix_oracle(x, p, thetas):
    out = []
    for j, t in enumerate(thetas):
        a = p * t
        r = [[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]
        u, v = x[2 * j], x[2 * j + 1]
        out.append(r[0][0] * u + r[0][1] * v)
        out.append(r[1][0] * u + r[1][1] * v)
    return out


def similarity_oracle(thetas, p, q):
    """Cosine similarity of the all-(1,0) signatures at p and q, by explicit sums."""
    dot = na = nb = 0.0
    for t in thetas:
        a = (math.cos(p * t), math.sin(p * t))
        b = (math.cos(q * t), math.sin(q * t))
        dot += a[0] * b[0] + a[1] * b[1]
        na += a[0] ** 2 + a[1] ** 2
        nb += b[0] ** 2 + b[1] ** 2
    return dot / math.sqrt(na * nb)


def first_alias_oracle(thetas, positions, threshold, min_sep):
    for p in range(positions):
        best = None
        for q in range(0, p - min_sep + 1):
            s = similarity_oracle(thetas, p, q)
            if s >= threshold and (best is None or s > best[1]):
                best = (q, s)
        if best is not None:
            return p, best[0], best[1]
    return None


def l2_oracle(a, b):
    total = 0.0
    h, w, c = len(a), len(a[0]), len(a[0][0])
    for i in range(h):
        for j in range(w):
            for k in range(c):
                d = float(a[i][j][k]) - float(b[i][j][k])
                total += d * d
    return math.sqrt(total)


def norepeat_oracle(frames, expected_period, window, threshold):
    """Nested-loop NoRepeat score: returns (anchor, mean, is_nonrepetitive)."""
    n = len(frames)
    lo = max(expected_period - window, 1)
    hi = min(expected_period + window, n - 1)
    anchor, best = None, None
    for t in range(lo, hi + 1):
        d = l2_oracle(frames[t], frames[0])
        if best is None or d < best:
            anchor, best = t, d
    dists = []
    i = 0
    while anchor + i < n:
        dists.append(l2_oracle(frames[anchor + i], frames[i]))
        i += 1
    mean = sum(dists) / len(dists)
    return anchor, mean, mean > threshold
