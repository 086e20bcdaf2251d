"""Distances and convergence functionals for step paths.

Two topologies are covered.  The J1 side works with piecewise-linear time
changes: the cost of a candidate is the maximum of its worst log-slope and the
uniform distance after warping, and the reported distance is the minimum over
a structured candidate family (all monotone jump matchings, refined by dyadic
perturbations of the near-optimal ones).  The reported value is therefore a
certified upper bound on the infimum over all time changes, tight on the
enumerated families the tests exercise.

The pseudo-path side evaluates closed-form integral functionals (window
averages, exponentially weighted arctan moments, terminal values); convergence
of those plus the terminal value characterizes convergence in measure of step
paths on a finite horizon.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .errors import DomainError
from .paths import CadlagPath, TimeHorizon

__all__ = [
    "TimeChange",
    "j1_cost",
    "j1_finite",
    "j1_halfline",
    "HalfLineDistance",
    "WindowAverage",
    "ArctanMoment",
    "TerminalValue",
    "mz_eval",
    "mz_truncation_bound",
    "mz_gap",
    "mz_converges",
    "MzConvergenceReport",
    "default_functionals",
]

_NEAR_OPTIMAL_TOL = 1e-12
_MATCHING_CAP = 10_000


@dataclass(frozen=True)
class TimeChange:
    """Strictly increasing piecewise-linear bijection of [0, T] fixing 0 and T."""

    times: tuple[float, ...]
    images: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        vs = tuple(float(v) for v in self.images)
        if len(ts) < 2 or len(ts) != len(vs):
            raise DomainError("a time change needs matching times and images, at least two each")
        if ts[0] != 0.0 or vs[0] != 0.0:
            raise DomainError("a time change must fix 0")
        if ts[-1] != vs[-1]:
            raise DomainError("a time change must fix the right endpoint")
        for seq in (ts, vs):
            if not all(math.isfinite(u) for u in seq):
                raise DomainError("time change knots must be finite")
            for u, w in zip(seq, seq[1:]):
                if not u < w:
                    raise DomainError("time change knots must be strictly increasing")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "images", vs)

    @classmethod
    def identity(cls, T: float) -> "TimeChange":
        return cls((0.0, float(T)), (0.0, float(T)))

    @property
    def T(self) -> float:
        return self.times[-1]

    def __call__(self, t: float) -> float:
        if not 0.0 <= t <= self.T:
            raise DomainError(f"time {t} outside [0, {self.T}]")
        k = min(bisect.bisect_right(self.times, t), len(self.times) - 1) - 1
        u0, u1 = self.times[k], self.times[k + 1]
        v0, v1 = self.images[k], self.images[k + 1]
        return v0 + (v1 - v0) * (t - u0) / (u1 - u0)

    def inverse(self, s: float) -> float:
        if not 0.0 <= s <= self.T:
            raise DomainError(f"image {s} outside [0, {self.T}]")
        k = min(bisect.bisect_right(self.images, s), len(self.images) - 1) - 1
        u0, u1 = self.times[k], self.times[k + 1]
        v0, v1 = self.images[k], self.images[k + 1]
        return u0 + (u1 - u0) * (s - v0) / (v1 - v0)

    def slopes(self) -> tuple[float, ...]:
        return tuple(
            (v1 - v0) / (u1 - u0)
            for (u0, u1, v0, v1) in zip(self.times, self.times[1:], self.images, self.images[1:])
        )


# -- J1 ------------------------------------------------------------------


def _require_same_finite(omega: CadlagPath, omega_tilde: CadlagPath) -> float:
    if not (omega.horizon.is_finite and omega_tilde.horizon.is_finite):
        raise DomainError("finite-horizon paths required")
    if omega.horizon.T != omega_tilde.horizon.T:
        raise DomainError("paths must share the horizon")
    if omega.d != omega_tilde.d:
        raise DomainError("paths must share the dimension")
    return omega.horizon.T


def _segment_discrepancy(omega, omega_tilde, u0, v0, u1, v1, closed_right=False):
    """sup over [u0, u1) of the max-coordinate gap |omega(t) - omega_tilde(lam t)|
    for the linear piece mapping [u0, u1] onto [v0, v1]; closed_right also
    probes the right endpoint (needed once per chain, at the horizon).

    Both functions are constant between probe points, so the sup is a max over
    finitely many exactly paired evaluations.  Breakpoints of the second path
    are paired exactly (no float round trip through the inverse map).
    """
    slope = (v1 - v0) / (u1 - u0)
    pairs = [(u0, v0), (u1, v1)] if closed_right else [(u0, v0)]
    for c in omega.coords:
        for s in c.breakpoints:
            if u0 < s < u1:
                pairs.append((s, v0 + slope * (s - u0)))
    for c in omega_tilde.coords:
        for s in c.breakpoints:
            if v0 < s < v1:
                pairs.append((u0 + (s - v0) / slope, s))
    worst = 0.0
    for t, s in pairs:
        x = omega.eval(t)
        y = omega_tilde.eval(s)
        gap = max(abs(p - q) for p, q in zip(x, y))
        if gap > worst:
            worst = gap
    return worst


def _segment_cost(omega, omega_tilde, u0, v0, u1, v1, closed_right=False):
    slope = (v1 - v0) / (u1 - u0)
    return max(
        abs(math.log(slope)),
        _segment_discrepancy(omega, omega_tilde, u0, v0, u1, v1, closed_right),
    )


def j1_cost(omega: CadlagPath, omega_tilde: CadlagPath, lam: TimeChange) -> float:
    """Cost of one time change: max of the log-slope sup and the warped
    uniform distance.

    The log-slope sup over all pairs s < t is attained at a single linear
    piece (difference quotients are convex combinations of piece slopes), so
    only piece slopes are examined.
    """
    T = _require_same_finite(omega, omega_tilde)
    if lam.T != T:
        raise DomainError("time change endpoint does not match the horizon")
    worst = 0.0
    last = len(lam.times) - 2
    for k in range(len(lam.times) - 1):
        c = _segment_cost(
            omega,
            omega_tilde,
            lam.times[k],
            lam.images[k],
            lam.times[k + 1],
            lam.images[k + 1],
            closed_right=(k == last),
        )
        if c > worst:
            worst = c
    return worst


def _interior_jumps(path: CadlagPath) -> list[float]:
    T = path.horizon.T
    return [t for t in path.jump_times() if 0.0 < t < T]


def _anchor_chain_cost(omega, omega_tilde, times, images):
    worst = 0.0
    last = len(times) - 2
    for k in range(len(times) - 1):
        c = _segment_cost(
            omega,
            omega_tilde,
            times[k],
            images[k],
            times[k + 1],
            images[k + 1],
            closed_right=(k == last),
        )
        if c > worst:
            worst = c
    return worst


def j1_finite(omega: CadlagPath, omega_tilde: CadlagPath, refinement: int = 8) -> float:
    """J1 distance on a finite horizon, as a certified upper bound.

    Candidate family: the identity, every monotone matching of interior jump
    times (minimum found by a minimax dynamic program over anchor pairs;
    unmatched jumps are absorbed by the uniform term), and dyadic
    perturbations of each near-optimal matching's anchors (refinement many
    scales, both knot coordinates, both signs).  Zero exactly on equal
    canonical paths; symmetric on the enumerated families.
    """
    if refinement < 0:
        raise DomainError("refinement must be nonnegative")
    T = _require_same_finite(omega, omega_tilde)
    a_times = _interior_jumps(omega)
    b_times = _interior_jumps(omega_tilde)
    na, nb = len(a_times), len(b_times)

    seg_cache: dict[tuple[float, float, float, float], float] = {}

    def seg(u0, v0, u1, v1):
        # anchors are strictly interior, so u1 == T marks a chain-final piece
        key = (u0, v0, u1, v1)
        got = seg_cache.get(key)
        if got is None:
            got = seg_cache[key] = _segment_cost(
                omega, omega_tilde, u0, v0, u1, v1, closed_right=(u1 == T)
            )
        return got

    # minimax DP over anchor pairs (i, j): cheapest worst segment on a chain
    # from (0, 0) to (a_i, b_j)
    dist: dict[tuple[int, int], float] = {}
    for i in range(na):
        for j in range(nb):
            best = seg(0.0, 0.0, a_times[i], b_times[j])
            for i2 in range(i):
                for j2 in range(j):
                    c = max(dist[(i2, j2)], seg(a_times[i2], b_times[j2], a_times[i], b_times[j]))
                    if c < best:
                        best = c
            dist[(i, j)] = best
    best_cost = seg(0.0, 0.0, T, T)
    for (i, j), dv in dist.items():
        c = max(dv, seg(a_times[i], b_times[j], T, T))
        if c < best_cost:
            best_cost = c

    # every matching whose chain stays within tolerance of the optimum
    thresh = best_cost + _NEAR_OPTIMAL_TOL
    matchings: list[list[tuple[float, float]]] = []
    if seg(0.0, 0.0, T, T) <= thresh:
        matchings.append([])

    def backtrack(i, j, suffix):
        if len(matchings) >= _MATCHING_CAP:
            return
        if seg(0.0, 0.0, a_times[i], b_times[j]) <= thresh:
            matchings.append([(a_times[i], b_times[j])] + suffix)
        for i2 in range(i):
            for j2 in range(j):
                if dist[(i2, j2)] <= thresh and seg(
                    a_times[i2], b_times[j2], a_times[i], b_times[j]
                ) <= thresh:
                    backtrack(i2, j2, [(a_times[i], b_times[j])] + suffix)

    for (i, j), dv in dist.items():
        if max(dv, seg(a_times[i], b_times[j], T, T)) <= thresh:
            backtrack(i, j, [])

    out = best_cost
    for match in matchings:
        times = [0.0] + [u for u, _ in match] + [T]
        images = [0.0] + [v for _, v in match] + [T]
        for j in range(1, len(times) - 1):
            gap_a = min(times[j + 1] - times[j], times[j] - times[j - 1]) / 2.0
            gap_b = min(images[j + 1] - images[j], images[j] - images[j - 1]) / 2.0
            for r in range(1, refinement + 1):
                for sign in (1.0, -1.0):
                    pert = list(images)
                    pert[j] = images[j] + sign * gap_b * 2.0 ** (-r)
                    out = min(out, _anchor_chain_cost(omega, omega_tilde, times, pert))
                    pert_t = list(times)
                    pert_t[j] = times[j] + sign * gap_a * 2.0 ** (-r)
                    out = min(out, _anchor_chain_cost(omega, omega_tilde, pert_t, images))
    return out


@dataclass(frozen=True)
class HalfLineDistance:
    """Weighted sum of clipped restriction distances, plus the dropped tail weight."""

    value: float
    tail: float


def j1_halfline(
    omega: CadlagPath,
    omega_tilde: CadlagPath,
    r_max: int | None = None,
    refinement: int = 8,
) -> HalfLineDistance:
    """Half-line J1 figure: sum over r = 1..r_max of 2^-r * (1 and the
    restriction distance on [0, r]), with the neglected tail 2^-r_max reported
    separately."""
    if omega.horizon.is_finite or omega_tilde.horizon.is_finite:
        raise DomainError("half-line paths required")
    if omega.d != omega_tilde.d:
        raise DomainError("paths must share the dimension")
    if r_max is None:
        r_max = max(1, math.ceil(max(omega.horizon.T, omega_tilde.horizon.T)))
    if r_max < 1:
        raise DomainError("r_max must be at least 1")
    value = 0.0
    for r in range(1, r_max + 1):
        d_r = j1_finite(omega.restrict(float(r)), omega_tilde.restrict(float(r)), refinement)
        value += 2.0 ** (-r) * min(1.0, d_r)
    return HalfLineDistance(value=value, tail=2.0 ** (-r_max))


# -- pseudo-path functionals ----------------------------------------------


@dataclass(frozen=True)
class WindowAverage:
    """Average of coordinate i over the window [q, q + r]."""

    i: int
    q: float
    r: float

    def __post_init__(self):
        if self.i < 0:
            raise DomainError("coordinate index must be nonnegative")
        if not self.q >= 0.0:
            raise DomainError("window start must be nonnegative")
        if not self.r > 0.0:
            raise DomainError("window length must be positive")


@dataclass(frozen=True)
class ArctanMoment:
    """Integral of exp(-k t) * arctan(omega^i(t))^power against exp(-t) dt."""

    i: int
    k: int
    power: int = 1

    def __post_init__(self):
        if self.i < 0:
            raise DomainError("coordinate index must be nonnegative")
        if self.k < 0:
            raise DomainError("weight exponent must be nonnegative")
        if self.power not in (1, 2):
            raise DomainError("power must be 1 or 2")


@dataclass(frozen=True)
class TerminalValue:
    """omega^i(T) on a finite horizon."""

    i: int

    def __post_init__(self):
        if self.i < 0:
            raise DomainError("coordinate index must be nonnegative")


MzFunctional = WindowAverage | ArctanMoment | TerminalValue


def mz_eval(f: MzFunctional, path: CadlagPath) -> float:
    """Exact closed-form evaluation: the integrand is constant in the path on
    every segment, so each functional reduces to a finite sum.  Half-line
    arctan moments include the infinite tail exactly (the path is constant
    after its last breakpoint)."""
    if f.i >= path.d:
        raise DomainError(f"coordinate index {f.i} out of range for d={path.d}")
    coord = path.coords[f.i]
    end = path.horizon.end

    if isinstance(f, WindowAverage):
        hi_w = f.q + f.r
        if hi_w > end:
            raise DomainError(f"window [{f.q}, {hi_w}] reaches beyond the horizon")
        seg_end = coord.breakpoints[1:] + (end,)
        total = 0.0
        for s, e, v in zip(coord.breakpoints, seg_end, coord.values):
            lo = max(s, f.q)
            hi = min(e, hi_w)
            if hi > lo:
                total += v * (hi - lo)
        return total / f.r

    if isinstance(f, ArctanMoment):
        decay = f.k + 1
        seg_end = coord.breakpoints[1:] + (end,)
        total = 0.0
        for s, e, v in zip(coord.breakpoints, seg_end, coord.values):
            upper = 0.0 if math.isinf(e) else math.exp(-decay * e)
            total += math.atan(v) ** f.power * (math.exp(-decay * s) - upper)
        return total / decay

    if isinstance(f, TerminalValue):
        if not path.horizon.is_finite:
            raise DomainError("terminal value needs a finite horizon")
        return path.eval(path.horizon.T)[f.i]

    raise DomainError(f"unknown functional {f!r}")


def mz_truncation_bound(f: MzFunctional, horizon: TimeHorizon) -> float:
    """Worst-case weight of [T*, inf) for an arctan moment on the half-line.

    Evaluation itself is exact, so this is reporting material, not an error
    term: it bounds how much of the functional lives beyond the truncation
    time carried by the horizon.
    """
    if isinstance(f, ArctanMoment) and not horizon.is_finite:
        decay = f.k + 1
        return (math.pi / 2.0) ** f.power * math.exp(-decay * horizon.T) / decay
    return 0.0


def _check_functional_set(fs, d: int, horizon: TimeHorizon) -> None:
    if not fs:
        raise DomainError("the functional set must be nonempty")
    if horizon.is_finite:
        covered = {f.i for f in fs if isinstance(f, TerminalValue)}
        missing = [i for i in range(d) if i not in covered]
        if missing:
            raise DomainError(
                f"finite-horizon functional sets must include the terminal value of every "
                f"coordinate; missing {missing}"
            )


def mz_gap(omega: CadlagPath, omega_tilde: CadlagPath, fs) -> float:
    """Largest functional disagreement between two paths on a shared horizon."""
    if omega.horizon != omega_tilde.horizon:
        raise DomainError("paths must share the horizon")
    if omega.d != omega_tilde.d:
        raise DomainError("paths must share the dimension")
    _check_functional_set(fs, omega.d, omega.horizon)
    return max(abs(mz_eval(f, omega) - mz_eval(f, omega_tilde)) for f in fs)


@dataclass(frozen=True)
class MzConvergenceReport:
    verdict: bool
    tol: float
    gaps: tuple[float, ...]
    per_functional: tuple[tuple[float, ...], ...]


def mz_converges(sequence, limit: CadlagPath, fs, tol: float) -> MzConvergenceReport:
    """Convergence check: every gap in the trailing half of the sequence must
    sit below tol."""
    sequence = list(sequence)
    if not sequence:
        raise DomainError("the sequence must be nonempty")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    fs = list(fs)
    _check_functional_set(fs, limit.d, limit.horizon)
    table = []
    for elem in sequence:
        if elem.horizon != limit.horizon or elem.d != limit.d:
            raise DomainError("sequence elements must share the limit's horizon and dimension")
        table.append(tuple(abs(mz_eval(f, elem) - mz_eval(f, limit)) for f in fs))
    gaps = tuple(max(row) for row in table)
    tail = gaps[-math.ceil(len(gaps) / 2):]
    return MzConvergenceReport(
        verdict=all(g < tol for g in tail),
        tol=tol,
        gaps=gaps,
        per_functional=tuple(table),
    )


def default_functionals(d: int, horizon: TimeHorizon):
    """Window average over the whole (truncated) horizon, first two arctan
    moments, and the terminal value per coordinate where defined."""
    fs: list[MzFunctional] = []
    for i in range(d):
        fs.append(WindowAverage(i=i, q=0.0, r=horizon.T))
        fs.append(ArctanMoment(i=i, k=0, power=1))
        fs.append(ArctanMoment(i=i, k=1, power=2))
        if horizon.is_finite:
            fs.append(TerminalValue(i=i))
    return fs
