"""Shared builders for the test suite."""

from __future__ import annotations

from skorlab.paths import CadlagPath, Coordinate, TimeHorizon

# Rational value pool on a quarter grid; overlaps the default level pairs on
# purpose so strict-inequality edges get exercised.
DEFAULT_VALUE_POOL = tuple(k / 4.0 for k in range(-10, 11))


def indicator(horizon: TimeHorizon, start: float, stop: float | None = None,
              height: float = 1.0) -> CadlagPath:
    """height * 1_{[start, stop)} (stop=None or stop=end: no reset)."""
    bps = [0.0]
    vals = [height if start == 0.0 else 0.0]
    if start > 0.0:
        bps.append(start)
        vals.append(height)
    if stop is not None and stop < horizon.end:
        bps.append(stop)
        vals.append(0.0)
    return CadlagPath.scalar(horizon, tuple(bps), tuple(vals))


def random_coordinate(rng, T: float, max_segments: int = 8,
                      value_pool=DEFAULT_VALUE_POOL) -> Coordinate:
    nseg = int(rng.integers(1, max_segments + 1))
    n_interior = min(nseg - 1, 31)
    picks = sorted(int(j) for j in rng.choice(31, size=n_interior, replace=False))
    bps = (0.0,) + tuple(T * (j + 1) / 32.0 for j in picks)
    vals: list[float] = []
    for _ in bps:
        v = float(value_pool[int(rng.integers(0, len(value_pool)))])
        while vals and v == vals[-1]:
            v = float(value_pool[int(rng.integers(0, len(value_pool)))])
        vals.append(v)
    return Coordinate(bps, tuple(vals))


def random_path(rng, T: float = 4.0, d: int = 1, max_segments: int = 8,
                half_line: bool = False, value_pool=DEFAULT_VALUE_POOL) -> CadlagPath:
    horizon = TimeHorizon.half_line(T) if half_line else TimeHorizon.finite(T)
    coords = tuple(random_coordinate(rng, T, max_segments, value_pool) for _ in range(d))
    return CadlagPath(horizon, coords)


LEVEL_VALUES = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
LEVEL_PAIRS = tuple(
    (a, b) for i, a in enumerate(LEVEL_VALUES) for b in LEVEL_VALUES[i + 1:]
)
