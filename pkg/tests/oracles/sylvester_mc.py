"""Brute-force Monte Carlo for E[f0(K_4)] = 3 + P(4 points in convex position).

Independent of the package: plain numpy sampling (polar map for the disk,
not rejection) and a float point-in-triangle test. Run once; the printed
values are frozen into tests/test_acceptance.py.

    python tests/oracles/sylvester_mc.py 100000000
"""
import sys

import numpy as np


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (
        b[..., 0] - o[..., 0]
    )


def _inside(p, a, b, c):
    s1 = _cross(a, b, p) > 0
    s2 = _cross(b, c, p) > 0
    s3 = _cross(c, a, p) > 0
    return (s1 == s2) & (s2 == s3)


def convex_position(pts):
    a, b, c, d = (pts[:, i] for i in range(4))
    inner = _inside(a, b, c, d) | _inside(b, a, c, d) | _inside(c, a, b, d) | _inside(d, a, b, c)
    return ~inner


def square(rng, m):
    return rng.random((m, 4, 2))


def disk(rng, m):
    r = np.sqrt(rng.random((m, 4)))
    t = 2 * np.pi * rng.random((m, 4))
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)


def main(total):
    chunk = 2_000_000
    for name, draw, seed in (("square", square, 20240101), ("disk", disk, 20240102)):
        rng = np.random.default_rng(seed)
        hits = 0
        done = 0
        while done < total:
            m = min(chunk, total - done)
            hits += int(convex_position(draw(rng, m)).sum())
            done += m
        p = hits / total
        se = np.sqrt(p * (1 - p) / total)
        print(f"{name}: reps={total} E[f0(K_4)]={3 + p:.7f} se={se:.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 100_000_000)
