"""Reproducible uniform sampling from convex bodies.

Every replicate draws from its own counter-based Philox stream keyed by
``(seed, stream path)``, so replicate ``i`` can be regenerated without touching
replicates ``0 .. i-1`` and results do not depend on how work is split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import Ball, Ellipse, Polygon
from .geometry import snap

MAX_REJECTIONS = 1_000_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_index: int = 0
    parent: tuple[int, ...] = ()

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream index must be nonnegative")

    @property
    def key(self) -> tuple[int, ...]:
        return self.parent + (self.stream_index,)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def substream(stream: RngStream, i: int) -> RngStream:
    """Child stream for replicate ``i``; a pure function of ``(stream, i)``."""
    if i < 0:
        raise ValueError("substream index must be nonnegative")
    return RngStream(stream.seed, int(i), stream.key)


def _rejection(body, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = body.bounding_box()
    d = len(lo)
    out = np.empty((n, d))
    filled = 0
    misses = 0
    while filled < n:
        want = n - filled
        batch = max(16, int(want * 1.6) + 8)
        cand = snap(lo + (hi - lo) * rng.random((batch, d)))
        ok = body.contains(cand)
        k = int(ok.sum())
        if k == 0:
            misses += batch
            if misses >= MAX_REJECTIONS:
                raise SamplingError(f"{MAX_REJECTIONS} consecutive rejections")
            continue
        misses = 0
        take = cand[ok][:want]
        out[filled : filled + len(take)] = take
        filled += len(take)
    return out


def _triangle_fan(body: Polygon, n: int, rng: np.random.Generator) -> np.ndarray:
    a, b, c, cum = body.fan
    out = np.empty((n, 2))
    filled = 0
    tries = 0
    while filled < n:
        want = n - filled
        tri = np.minimum(np.searchsorted(cum, rng.random(want), side="right"), len(cum) - 1)
        uv = rng.random((want, 2))
        flip = uv.sum(axis=1) > 1
        uv[flip] = 1 - uv[flip]
        pts = snap(a + uv[:, :1] * (b[tri] - a) + uv[:, 1:] * (c[tri] - a))
        ok = body.contains(pts)
        take = pts[ok]
        out[filled : filled + len(take)] = take
        filled += len(take)
        tries += want
        if tries > MAX_REJECTIONS and filled == 0:
            raise SamplingError("snapped samples keep falling outside the polygon")
    return out


def sample_uniform(body, n: int, stream: RngStream | np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform points in ``body``, snapped to the exact grid.

    Polygons use an area-weighted triangle fan; ellipses and balls use
    rejection from the bounding box.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    if isinstance(body, Polygon):
        return _triangle_fan(body, n, rng)
    if isinstance(body, (Ellipse, Ball)):
        return _rejection(body, n, rng)
    raise TypeError(f"cannot sample from {type(body).__name__}")
