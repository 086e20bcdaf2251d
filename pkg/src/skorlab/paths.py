"""Cadlag step paths with exact breakpoint representation.

A path is piecewise constant and right-continuous: coordinate i holds value
values[j] on [breakpoints[j], breakpoints[j+1]) and keeps its last value up to
the end of the horizon.  All arithmetic on breakpoints and values is exact
float arithmetic; construction canonicalizes by merging adjacent segments with
equal values, so two paths are equal as functions iff they compare equal.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = ["TimeHorizon", "Coordinate", "CadlagPath", "Partition"]


def _as_finite_float(x, what: str) -> float:
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise DomainError(f"{what} must be a real number, got {x!r}") from None
    if not math.isfinite(v):
        raise DomainError(f"{what} must be finite, got {v!r}")
    return v


@dataclass(frozen=True)
class TimeHorizon:
    """Time interval [0, T] or the half-line [0, inf).

    For the half-line, ``T`` is the truncation time used by numerical work
    that proceeds through restrictions; it does not bound breakpoints.
    """

    kind: str
    T: float

    def __post_init__(self):
        if self.kind not in ("finite", "half_line"):
            raise DomainError(f"horizon kind must be 'finite' or 'half_line', got {self.kind!r}")
        object.__setattr__(self, "T", _as_finite_float(self.T, "horizon endpoint"))
        if self.T <= 0.0:
            raise DomainError(f"horizon endpoint must be positive, got {self.T}")

    @classmethod
    def finite(cls, T) -> "TimeHorizon":
        return cls("finite", T)

    @classmethod
    def half_line(cls, truncation) -> "TimeHorizon":
        return cls("half_line", truncation)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def end(self) -> float:
        """Right endpoint: T for a finite horizon, inf for the half-line."""
        return self.T if self.is_finite else math.inf

    def contains(self, t: float) -> bool:
        return 0.0 <= t <= self.end


@dataclass(frozen=True)
class Coordinate:
    """One scalar coordinate: strictly increasing breakpoints starting at 0,
    one value per breakpoint.  Adjacent equal values are merged on
    construction."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(_as_finite_float(s, "breakpoint") for s in self.breakpoints)
        vals = tuple(_as_finite_float(v, "value") for v in self.values)
        if not bp:
            raise DomainError("a coordinate needs at least one segment")
        if len(bp) != len(vals):
            raise DomainError(
                f"breakpoints and values must have equal length, got {len(bp)} vs {len(vals)}"
            )
        if bp[0] != 0.0:
            raise DomainError(f"first breakpoint must be 0, got {bp[0]}")
        for u, w in zip(bp, bp[1:]):
            if not u < w:
                raise DomainError(f"breakpoints must be strictly increasing, got {u} then {w}")
        merged_bp = [bp[0]]
        merged_vals = [vals[0]]
        for s, v in zip(bp[1:], vals[1:]):
            if v == merged_vals[-1]:
                continue
            merged_bp.append(s)
            merged_vals.append(v)
        object.__setattr__(self, "breakpoints", tuple(merged_bp))
        object.__setattr__(self, "values", tuple(merged_vals))

    def value_at(self, t: float, side: str = "right") -> float:
        j = bisect.bisect_right(self.breakpoints, t) - 1
        if side == "left" and j > 0 and self.breakpoints[j] == t:
            j -= 1
        return self.values[j]


@dataclass(frozen=True)
class Partition:
    """Finite strictly increasing time grid starting at 0."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(_as_finite_float(t, "partition time") for t in self.times)
        if not ts:
            raise DomainError("a partition needs at least one time")
        if ts[0] != 0.0:
            raise DomainError(f"a partition must start at 0, got {ts[0]}")
        for u, w in zip(ts, ts[1:]):
            if not u < w:
                raise DomainError(f"partition times must be strictly increasing, got {u} then {w}")
        object.__setattr__(self, "times", ts)

    def __len__(self) -> int:
        return len(self.times)

    def index_of(self, t: float) -> int:
        j = bisect.bisect_left(self.times, t)
        if j == len(self.times) or self.times[j] != t:
            raise DomainError(f"time {t} is not a partition point")
        return j


@dataclass(frozen=True)
class CadlagPath:
    """A d-dimensional cadlag step path on a common horizon."""

    horizon: TimeHorizon
    coords: tuple[Coordinate, ...]

    def __post_init__(self):
        coords = tuple(
            c if isinstance(c, Coordinate) else Coordinate(tuple(c[0]), tuple(c[1]))
            for c in self.coords
        )
        if not coords:
            raise DomainError("a path needs at least one coordinate")
        end = self.horizon.end
        for c in coords:
            if c.breakpoints[-1] > end:
                raise DomainError(
                    f"breakpoint {c.breakpoints[-1]} lies outside the horizon [0, {end}]"
                )
        object.__setattr__(self, "coords", coords)

    # -- constructors -------------------------------------------------------

    @classmethod
    def scalar(cls, horizon: TimeHorizon, breakpoints, values) -> "CadlagPath":
        return cls(horizon, (Coordinate(tuple(breakpoints), tuple(values)),))

    @classmethod
    def constant(cls, horizon: TimeHorizon, values) -> "CadlagPath":
        return cls(horizon, tuple(Coordinate((0.0,), (float(v),)) for v in values))

    # -- basic queries ------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.coords)

    def jump_times(self) -> tuple[float, ...]:
        """Sorted union over coordinates of the times where a value changes."""
        times = {s for c in self.coords for s in c.breakpoints[1:]}
        return tuple(sorted(times))

    def eval(self, t: float, side: str = "right") -> tuple[float, ...]:
        """Value at t (right-continuous) or the left limit at t.

        The left limit at a breakpoint is the previous segment value; at an
        interior point of a segment both sides agree.  side='left' needs t > 0.
        """
        if side not in ("right", "left"):
            raise DomainError(f"side must be 'right' or 'left', got {side!r}")
        if not self.horizon.contains(t):
            raise DomainError(f"time {t} is outside the horizon")
        if side == "left" and not t > 0.0:
            raise DomainError("a left limit needs t > 0")
        return tuple(c.value_at(t, side) for c in self.coords)

    def restrict(self, t: float) -> "CadlagPath":
        """Restriction to [0, t] as a finite-horizon path.

        Keeps every breakpoint <= t; values agree with the source on [0, t].
        """
        if not (isinstance(t, (int, float)) and math.isfinite(t)):
            raise DomainError(f"restriction time must be finite, got {t!r}")
        if not 0.0 < t <= self.horizon.end:
            raise DomainError(f"restriction time {t} is outside (0, horizon end]")
        coords = []
        for c in self.coords:
            j = bisect.bisect_right(c.breakpoints, t)
            coords.append(Coordinate(c.breakpoints[:j], c.values[:j]))
        return CadlagPath(TimeHorizon.finite(t), tuple(coords))

    # -- norms and variation ------------------------------------------------

    def sup_norm(self) -> float:
        """sup over the horizon of max_i |omega^i(t)| (attained at a segment value)."""
        return max(abs(v) for c in self.coords for v in c.values)

    def l1_value(self, t: float) -> float:
        """Sum over coordinates of |omega^i(t)|."""
        return sum(abs(v) for v in self.eval(t))

    def total_variation(self) -> float:
        """Sum over coordinates of |omega^i(0)| plus all absolute jump sizes."""
        tv = 0.0
        for c in self.coords:
            tv += abs(c.values[0])
            for u, w in zip(c.values, c.values[1:]):
                tv += abs(w - u)
        return tv

    # -- upcrossings --------------------------------------------------------

    def upcrossings(self, i: int, a: float, b: float, partition: Partition | None = None) -> int:
        """Number of upcrossings of the band [a, b] by coordinate i.

        Strict inequalities: a crossing needs a witness value < a followed in
        time by a witness value > b.  Without a partition this is the
        supremum over all partitions, computed by a single left-to-right scan
        of the segment values.

        With a partition, witnesses are restricted to the cells
        [t_{l-1}, t_l): the two witnesses of one crossing must lie in distinct
        cells (arm cell strictly before fire cell), the fire witness of one
        crossing may share a cell with the arm witness of the next, and for a
        finite horizon whose partition ends at T the value at T may serve as
        the final fire witness.
        """
        if not 0 <= i < self.d:
            raise DomainError(f"coordinate index {i} out of range for d={self.d}")
        if not a < b:
            raise DomainError(f"need a < b, got a={a}, b={b}")
        coord = self.coords[i]
        if partition is None:
            armed = False
            count = 0
            for v in coord.values:
                if armed:
                    if v > b:
                        count += 1
                        armed = False
                elif v < a:
                    armed = True
            return count

        times = partition.times
        if times[-1] > self.horizon.end:
            raise DomainError("partition reaches beyond the horizon")
        bp = coord.breakpoints
        vals = coord.values
        seg_end = bp[1:] + (self.horizon.end,)
        ncells = len(times) - 1
        count = 0
        armed = False
        arm_cell = 0
        for cell in range(1, ncells + 1):
            lo, hi = times[cell - 1], times[cell]
            j = max(bisect.bisect_right(bp, lo) - 1, 0)
            while j < len(vals) and bp[j] < hi:
                if seg_end[j] > lo:
                    v = vals[j]
                    if armed and v > b and cell > arm_cell:
                        count += 1
                        armed = False
                    elif not armed and v < a:
                        armed = True
                        arm_cell = cell
                j += 1
        if (
            self.horizon.is_finite
            and times[-1] == self.horizon.T
            and armed
            and arm_cell < ncells
            and vals[-1] > b
        ):
            count += 1
        return count
