"""Uniform tightness diagnostics for families of step-path laws.

Four family-level conditions are checked: a uniform bound on expected
magnitude plus conditional variation (UB), uniform integrability of the
negative parts (UI), the worst-integrand tail condition (UT), and the
sup-norm / upcrossing tail condition (US).  Limits in the threshold c are
replaced by full curves over a finite c grid plus a (c_max, eps) verdict,
since genuine limits are not decidable from finite data.

The UT supremum over all admissible integrands is approached from below by a
structured library (stopped, level-crossing, and sign integrands: the
extremal mechanisms of the underlying inequalities) together with vertex
integrands.  When the full vertex sweep fits in memory the tail statistic is
exact over grid-aligned integrands, but the report still flags a certified
lower bound.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .laws import (
    DiscreteProcessLaw,
    ElementaryIntegrand,
    ExtremeEnumeration,
    IntegrandLeg,
    conditional_increment_means,
    doob_decomposition,
    elementary_integral,
    elementary_integral_by_coordinate,
    extreme_enumeration,
    sign_integrand,
    vertex_slot_coords,
)

__all__ = [
    "LEVEL_VALUES",
    "DEFAULT_LEVEL_PAIRS",
    "DEFAULT_C_GRID",
    "BoundConstants",
    "StepBound",
    "CompactnessProfile",
    "Offender",
    "ConditionReport",
    "BurkholderCheck",
    "BurkholderSweep",
    "check_UB",
    "check_UI",
    "check_UT_empirical",
    "check_US",
    "worstcase_integrands",
    "burkholder_check",
    "burkholder_sweep",
    "hitting_identity_check",
    "upcrossing_tail_check",
    "compact_mass",
]

LEVEL_VALUES = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
DEFAULT_LEVEL_PAIRS = tuple(
    (q, r) for q in LEVEL_VALUES for r in LEVEL_VALUES if q < r
)
DEFAULT_C_GRID = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


@dataclass(frozen=True)
class BoundConstants:
    """Weak-type constant a and the derived family constant b = 2(a+1)d."""

    a: float = 1.0
    d: int = 1

    def __post_init__(self):
        if not (isinstance(self.a, (int, float)) and math.isfinite(self.a) and self.a > 0):
            raise DomainError(f"constant a must be a positive real, got {self.a!r}")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")

    @property
    def b(self) -> float:
        return 2.0 * (self.a + 1.0) * self.d


@dataclass(frozen=True)
class StepBound:
    """Non-decreasing, non-negative step function t -> level."""

    times: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)
        if not times or times[0] != 0.0:
            raise DomainError("a step bound must start at time 0")
        if len(times) != len(levels):
            raise DomainError("times and levels must have equal length")
        if any(not u < w for u, w in zip(times, times[1:])):
            raise DomainError("step bound times must be strictly increasing")
        if any(not (math.isfinite(x) and x >= 0.0) for x in levels):
            raise DomainError("step bound levels must be finite and non-negative")
        if any(not u <= w for u, w in zip(levels, levels[1:])):
            raise DomainError("step bound levels must be non-decreasing")

    @classmethod
    def constant(cls, level: float) -> "StepBound":
        return cls((0.0,), (level,))

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise DomainError(f"step bound queried at negative time {t}")
        return self.levels[bisect.bisect_right(self.times, t) - 1]


@dataclass(frozen=True)
class CompactnessProfile:
    """Product-set envelope: a sup-norm bound per coordinate and an
    upcrossing bound per (level pair, coordinate)."""

    sup_bounds: tuple[StepBound, ...]
    upcross_bounds: tuple[tuple[tuple[float, float], tuple[StepBound, ...]], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sup_bounds", tuple(self.sup_bounds))
        object.__setattr__(self, "upcross_bounds", tuple(
            ((float(q), float(r)), tuple(bounds)) for (q, r), bounds in self.upcross_bounds
        ))
        if not self.sup_bounds:
            raise DomainError("a profile needs at least one coordinate bound")
        for (q, r), bounds in self.upcross_bounds:
            if not q < r:
                raise DomainError(f"level pair needs q < r, got ({q}, {r})")
            if len(bounds) != self.d:
                raise DomainError("upcrossing bounds must cover every coordinate")

    @property
    def d(self) -> int:
        return len(self.sup_bounds)


@dataclass(frozen=True)
class Offender:
    """Worst observation for one law: where the family statistic peaks."""

    law_index: int
    t: float
    value: float
    label: str = ""


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    statistic: str
    curves: dict[str, tuple[tuple[float, float], ...]]
    verdict: str
    scalar: float | None = None
    c_max: float | None = None
    eps: float | None = None
    lower_bound: bool = False
    offenders: tuple[Offender, ...] = ()

    def curve(self, label: str | None = None):
        if label is None:
            if len(self.curves) != 1:
                raise DomainError("report has several curves; pass a label")
            label = next(iter(self.curves))
        return self.curves[label]


# -- shared helpers -----------------------------------------------------------


def _checked_family(family) -> list[DiscreteProcessLaw]:
    laws = list(family)
    if not laws:
        raise DomainError("the family of laws is empty")
    horizon = laws[0].horizon
    for law in laws:
        if law.horizon != horizon:
            raise ValidationError("all laws in a family must share the horizon")
    return laws


def _checked_c_grid(c_grid) -> tuple[float, ...]:
    cs = tuple(float(c) for c in c_grid)
    if not cs:
        raise DomainError("the threshold grid is empty")
    if any(not c > 0.0 for c in cs) or any(not u < w for u, w in zip(cs, cs[1:])):
        raise DomainError("thresholds must be positive and strictly increasing")
    return cs


def _checked_levels(levels) -> tuple[tuple[float, float], ...]:
    out = []
    for a, b in levels:
        a, b = float(a), float(b)
        if not a < b:
            raise DomainError(f"level pair needs a < b, got ({a}, {b})")
        out.append((a, b))
    return tuple(out)


def _variation_by_time(law: DiscreteProcessLaw) -> np.ndarray:
    """(K, d) cumulative conditional variations Var_{t_k}(X^i)."""
    w = law.weight_array
    v = law.values
    out = np.empty((len(law.grid), law.d))
    out[0] = w @ np.abs(v[:, 0, :])
    if len(law.grid) > 1:
        cem = conditional_increment_means(law)
        steps = np.tensordot(w, np.abs(cem), axes=(0, 0))  # (K-1, d)
        out[1:] = out[0] + np.cumsum(steps, axis=0)
    return out


def _coordinate_sup(law: DiscreteProcessLaw, k_t: int) -> np.ndarray:
    """(atoms, d) running sup of |X^i| over grid times 0..k_t."""
    return np.abs(law.values[:, : k_t + 1, :]).max(axis=1)


def _upcross_counts(law: DiscreteProcessLaw, k_t: int, i: int, a: float, b: float) -> np.ndarray:
    """Upcrossing counts of [a, b] by coordinate i restricted to grid
    times 0..k_t, one entry per atom."""
    counts = np.zeros(law.n_atoms, dtype=int)
    for idx in range(law.n_atoms):
        armed = False
        n = 0
        for x in law.values[idx, : k_t + 1, i]:
            if armed:
                if x > b:
                    n += 1
                    armed = False
            elif x < a:
                armed = True
        counts[idx] = n
    return counts


def _times_for(law: DiscreteProcessLaw, t_list) -> tuple[float, ...]:
    if t_list is None:
        return law.grid.times
    times = tuple(float(t) for t in t_list)
    if not times:
        raise DomainError("the evaluation time list is empty")
    return times


# -- (UB) ----------------------------------------------------------------------


def check_UB(family) -> ConditionReport:
    """Supremum over laws and grid times of E|X_t| + sum_i Var_t(X^i).

    Finite by construction on finitely supported laws, so the verdict is
    always a pass; the point of the report is the statistic itself and the
    attaining (law, time).
    """
    laws = _checked_family(family)
    best = -math.inf
    offenders = []
    for idx, law in enumerate(laws):
        w = law.weight_array
        level = np.abs(law.values).sum(axis=2)  # (atoms, K)
        stat_k = w @ level + _variation_by_time(law).sum(axis=1)
        k_best = int(np.argmax(stat_k))
        offenders.append(Offender(idx, law.grid.times[k_best], float(stat_k[k_best])))
        best = max(best, float(stat_k[k_best]))
    return ConditionReport(
        condition="UB",
        statistic="sup over laws and grid times of E|X_t| + sum_i Var_t(X^i)",
        curves={},
        scalar=best,
        verdict="pass" if math.isfinite(best) else "fail",
        offenders=tuple(offenders),
    )


# -- (UI) ----------------------------------------------------------------------


def check_UI(family, c_grid=DEFAULT_C_GRID, eps: float = 1e-9) -> ConditionReport:
    """Tail curve of the negative parts: c -> sup E[X_t^- 1{X_t^- > c}]."""
    laws = _checked_family(family)
    cs = _checked_c_grid(c_grid)
    ub = check_UB(laws)
    if ub.verdict != "pass":
        raise ValidationError("the negative-part condition presumes a finite magnitude bound")
    curve = np.zeros(len(cs))
    offenders = []
    for idx, law in enumerate(laws):
        w = law.weight_array
        neg = np.maximum(-law.values, 0.0).sum(axis=2)  # (atoms, K)
        worst_at_cmax = -math.inf
        worst_t = law.grid.times[0]
        for j, c in enumerate(cs):
            per_time = w @ (neg * (neg > c))
            k_best = int(np.argmax(per_time))
            curve[j] = max(curve[j], float(per_time[k_best]))
            if j == len(cs) - 1 and per_time[k_best] > worst_at_cmax:
                worst_at_cmax = float(per_time[k_best])
                worst_t = law.grid.times[k_best]
        offenders.append(Offender(idx, worst_t, worst_at_cmax))
    return ConditionReport(
        condition="UI",
        statistic="sup over laws and grid times of E[X_t^- 1{X_t^- > c}]",
        curves={"negative_part": tuple(zip(cs, curve.tolist()))},
        verdict="pass" if curve[-1] < eps else "fail",
        c_max=cs[-1],
        eps=eps,
        offenders=tuple(offenders),
    )


# -- worst-case integrand library ------------------------------------------------


def _zero_coeff_rows(law: DiscreteProcessLaw) -> list[tuple[float, ...]]:
    return [tuple(0.0 for _ in range(law.n_atoms)) for _ in range(law.d)]


def _single_coordinate_integrand(law, i, k_t, h0_row, leg_coeffs) -> ElementaryIntegrand:
    """Integrand supported on coordinate i with one leg per grid step."""
    h0 = _zero_coeff_rows(law)
    h0[i] = tuple(h0_row)
    legs: list[tuple[IntegrandLeg, ...]] = [() for _ in range(law.d)]
    legs[i] = tuple(
        IntegrandLeg(law.grid.times[k - 1], law.grid.times[k], tuple(leg_coeffs[k - 1]))
        for k in range(1, k_t + 1)
    )
    return ElementaryIntegrand(h0=tuple(h0), legs=tuple(legs))


def hitting_integrand(law: DiscreteProcessLaw, i: int, t: float, c: float) -> ElementaryIntegrand:
    """1 on [0, tau ^ t] for tau the first grid time with |X^i| > c.

    Integrating it stops the coordinate at its first exceedance, so the tail
    of the integral equals the tail of the running sup exactly.
    """
    if not 0 <= i < law.d:
        raise DomainError(f"coordinate index {i} out of range for d={law.d}")
    if not c > 0.0:
        raise DomainError(f"threshold must be positive, got {c}")
    k_t = law.grid_index(t)
    absv = np.abs(law.values[:, : k_t + 1, i])
    exceeded = absv > c
    tau = np.where(exceeded.any(axis=1), exceeded.argmax(axis=1), k_t + 1)
    h0_row = np.ones(law.n_atoms)
    leg_coeffs = [(tau >= k).astype(float) for k in range(1, k_t + 1)]
    return _single_coordinate_integrand(law, i, k_t, h0_row, leg_coeffs)


def crossing_integrand(
    law: DiscreteProcessLaw, i: int, t: float, a: float, b: float, m_max: int
) -> ElementaryIntegrand:
    """Sum of indicators of the first m_max excursions ]sigma_k ^ t, tau_k ^ t]
    from strictly below a to strictly above b by coordinate i."""
    if not a < b:
        raise DomainError(f"level pair needs a < b, got ({a}, {b})")
    if m_max < 1:
        raise DomainError("m_max must be at least 1")
    k_t = law.grid_index(t)
    coeffs = np.zeros((law.n_atoms, k_t))
    for idx in range(law.n_atoms):
        vals = law.values[idx, : k_t + 1, i]
        pairs = []
        sigma = None
        for k, x in enumerate(vals):
            if sigma is None:
                if x < a:
                    sigma = k
            elif x > b:
                pairs.append((sigma, k))
                sigma = None
        if sigma is not None:
            pairs.append((sigma, k_t + 1))  # excursion still open at t
        for sig, tau in pairs[:m_max]:
            # legs sig+1 .. min(tau, k_t) live in columns sig .. min(tau, k_t)-1
            coeffs[idx, sig : min(tau, k_t)] = 1.0
    leg_coeffs = [coeffs[:, k - 1] for k in range(1, k_t + 1)]
    return _single_coordinate_integrand(law, i, k_t, np.zeros(law.n_atoms), leg_coeffs)


def worstcase_integrands(
    Q: DiscreteProcessLaw,
    t: float,
    c: float,
    levels=DEFAULT_LEVEL_PAIRS,
    m_max: int = 3,
) -> list[ElementaryIntegrand]:
    """The structured integrand library: per-coordinate stopped integrands at
    threshold c, per-(level, coordinate) crossing integrands, and the sign
    integrand.  Everything is validated against Q before it is returned."""
    levels = _checked_levels(levels)
    out = []
    for i in range(Q.d):
        out.append(hitting_integrand(Q, i, t, c))
    for a, b in levels:
        for i in range(Q.d):
            out.append(crossing_integrand(Q, i, t, a, b, m_max))
    out.append(sign_integrand(Q, t))
    for H in out:
        H.validate_for(Q)
    return out


# -- (UT) ----------------------------------------------------------------------


def _sampled_vertex_values(law, t, n, rng) -> np.ndarray:
    slot_coord = vertex_slot_coords(law, t)
    words = 1.0 - 2.0 * rng.integers(0, 2, size=(n, len(slot_coord))).astype(float)
    enum = ExtremeEnumeration(law=law, t=t, signs=words, slot_coord=slot_coord)
    return enum.values()


def check_UT_empirical(
    family,
    c_grid=DEFAULT_C_GRID,
    t_list=None,
    levels=DEFAULT_LEVEL_PAIRS,
    extra_random: int = 0,
    seed: int = 0,
    eps: float = 1e-9,
    m_max: int = 3,
    slot_cap: int = 16,
) -> ConditionReport:
    """Tail curve c -> sup over laws, times, and the integrand library of
    Q(|(H.X)_t| > c).

    The library is the structured worst-case set, the full vertex sweep when
    it fits under slot_cap, and extra_random sampled vertex integrands seeded
    per law.  A lower bound on the sup over all admissible integrands, exact
    for grid-aligned ones whenever the vertex sweep ran.
    """
    laws = _checked_family(family)
    cs = _checked_c_grid(c_grid)
    if extra_random < 0:
        raise DomainError("extra_random must be non-negative")
    curve = np.zeros(len(cs))
    offenders = []
    for idx, law in enumerate(laws):
        w = law.weight_array
        rng = np.random.default_rng((seed, idx))
        worst_value = -math.inf
        worst_t = None
        for t in _times_for(law, t_list):
            # crossing and sign integrands do not depend on c; only the
            # stopping threshold of the hitting integrands does
            checked = _checked_levels(levels)
            per_t = [crossing_integrand(law, i, t, a, b, m_max)
                     for a, b in checked for i in range(law.d)]
            per_t.append(sign_integrand(law, t))
            per_t.extend(hitting_integrand(law, i, t, c)
                         for c in cs for i in range(law.d))
            for H in per_t:
                H.validate_for(law)
            stacks = [elementary_integral(law, H, t) for H in per_t]
            enum = extreme_enumeration(law, t, slot_cap=slot_cap)
            if enum is not None:
                stacks.append(enum.values())
            if extra_random:
                stacks.append(_sampled_vertex_values(law, t, extra_random, rng))
            vals = np.abs(np.vstack([np.atleast_2d(s) for s in stacks]))
            for j, c in enumerate(cs):
                tail = float(((vals > c) @ w).max())
                curve[j] = max(curve[j], tail)
                if j == len(cs) - 1 and tail > worst_value:
                    worst_value, worst_t = tail, t
        offenders.append(Offender(idx, worst_t, worst_value))
    return ConditionReport(
        condition="UT",
        statistic=(
            "sup over laws, times, and library integrands of Q(|(H.X)_t| > c); "
            "certified lower bound on the sup over all admissible integrands"
        ),
        curves={"integral_tail": tuple(zip(cs, curve.tolist()))},
        verdict="pass" if curve[-1] < eps else "fail",
        c_max=cs[-1],
        eps=eps,
        lower_bound=True,
        offenders=tuple(offenders),
    )


# -- (US) ----------------------------------------------------------------------


def check_US(
    family,
    t_list=None,
    levels=DEFAULT_LEVEL_PAIRS,
    c_grid=DEFAULT_C_GRID,
    eps: float = 1e-9,
) -> ConditionReport:
    """Tail curves of the coordinate sup-norms and the per-level upcrossing
    counts, each supped over laws and times.  Exact: atoms are finite."""
    laws = _checked_family(family)
    cs = _checked_c_grid(c_grid)
    levels = _checked_levels(levels)
    d = laws[0].d
    if any(law.d != d for law in laws):
        raise ValidationError("all laws in a family must share the dimension")
    labels = [f"sup_norm[i={i}]" for i in range(d)]
    labels += [f"upcross[{a}:{b}][i={i}]" for a, b in levels for i in range(d)]
    curves = {lab: np.zeros(len(cs)) for lab in labels}
    offenders = []
    for idx, law in enumerate(laws):
        w = law.weight_array
        worst_value, worst_t, worst_label = -math.inf, None, ""
        for t in _times_for(law, t_list):
            k_t = law.grid_index(t)
            sups = _coordinate_sup(law, k_t)  # (atoms, d)
            per_label = {}
            for i in range(d):
                per_label[f"sup_norm[i={i}]"] = sups[:, i]
            for a, b in levels:
                for i in range(d):
                    per_label[f"upcross[{a}:{b}][i={i}]"] = _upcross_counts(law, k_t, i, a, b)
            for lab, stat in per_label.items():
                for j, c in enumerate(cs):
                    tail = float(w @ (stat > c))
                    curves[lab][j] = max(curves[lab][j], tail)
                    if j == len(cs) - 1 and tail > worst_value:
                        worst_value, worst_t, worst_label = tail, t, lab
        offenders.append(Offender(idx, worst_t, worst_value, worst_label))
    final = {lab: tuple(zip(cs, arr.tolist())) for lab, arr in curves.items()}
    worst_end = max(arr[-1] for arr in curves.values())
    return ConditionReport(
        condition="US",
        statistic="sup over laws and times of coordinate sup-norm and upcrossing tails",
        curves=final,
        verdict="pass" if worst_end < eps else "fail",
        c_max=cs[-1],
        eps=eps,
        offenders=tuple(offenders),
    )


# -- weak-type bound ---------------------------------------------------------------


@dataclass(frozen=True)
class BurkholderCheck:
    lhs: float
    rhs: float
    ratio: float
    decomposition_step_ok: bool
    constants: BoundConstants


@dataclass(frozen=True)
class BurkholderSweep:
    worst_lhs: float
    rhs: float
    worst_ratio: float
    decomposition_step_ok: bool
    exhaustive: bool
    n_integrands: int
    minimal_sufficient_a: float
    constants: BoundConstants


def _magnitude_plus_variation(law, k_t) -> tuple[float, np.ndarray]:
    w = law.weight_array
    e_abs = float(w @ np.abs(law.values[:, k_t, :]).sum(axis=1))
    var = _variation_by_time(law)[k_t]  # (d,)
    return e_abs + float(var.sum()), var


def burkholder_check(
    Q: DiscreteProcessLaw,
    H: ElementaryIntegrand,
    t: float,
    c: float,
    constants: BoundConstants | None = None,
) -> BurkholderCheck:
    """Weak-type inequality audit for a single integrand.

    lhs = Q(|(H.X)_t| > c); rhs = (b/c)(E|X_t| + sum_i Var_t(X^i)); the
    decomposition flag certifies the Markov step on the drift coordinate by
    coordinate: Q(|(H^i.A^i)_t| > c) <= Var_t(X^i)/c.
    """
    if not c > 0.0:
        raise DomainError(f"threshold must be positive, got {c}")
    constants = BoundConstants(d=Q.d) if constants is None else constants
    if constants.d != Q.d:
        raise DomainError("constants were derived for a different dimension")
    k_t = Q.grid_index(t)
    w = Q.weight_array
    vals = elementary_integral(Q, H, t)
    lhs = float(w @ (np.abs(vals) > c))
    denom, var = _magnitude_plus_variation(Q, k_t)
    rhs = constants.b / c * denom
    ratio = lhs * c / denom if denom > 0.0 else 0.0
    drift = doob_decomposition(Q).predictable_part
    contrib = elementary_integral_by_coordinate(Q, H, t, values=drift)
    ok = all(
        float(w @ (np.abs(contrib[:, i]) > c)) <= var[i] / c for i in range(Q.d)
    )
    return BurkholderCheck(lhs=lhs, rhs=rhs, ratio=ratio,
                           decomposition_step_ok=ok, constants=constants)


def burkholder_sweep(
    Q: DiscreteProcessLaw,
    t: float,
    c: float,
    constants: BoundConstants | None = None,
    slot_cap: int = 16,
    levels=DEFAULT_LEVEL_PAIRS,
    m_max: int = 3,
) -> BurkholderSweep:
    """Weak-type audit over a whole integrand family at once.

    Uses the exhaustive vertex sweep when it fits (exact over grid-aligned
    integrands), the structured library otherwise.  minimal_sufficient_a is
    the smallest constant a for which this instance satisfies the bound with
    b = 2(a+1)d; comparing it to the configured a falsifies or supports the
    choice."""
    if not c > 0.0:
        raise DomainError(f"threshold must be positive, got {c}")
    constants = BoundConstants(d=Q.d) if constants is None else constants
    if constants.d != Q.d:
        raise DomainError("constants were derived for a different dimension")
    k_t = Q.grid_index(t)
    w = Q.weight_array
    drift = doob_decomposition(Q).predictable_part
    enum = extreme_enumeration(Q, t, slot_cap=slot_cap)
    if enum is not None:
        vals = enum.values()
        worst_lhs = float(((np.abs(vals) > c) @ w).max())
        ok = True
        denom, var = _magnitude_plus_variation(Q, k_t)
        for i in range(Q.d):
            drift_tail = float(((np.abs(enum.coordinate_values(i, drift)) > c) @ w).max())
            ok = ok and drift_tail <= var[i] / c
        n = vals.shape[0]
        exhaustive = True
    else:
        library = worstcase_integrands(Q, t, c, levels, m_max)
        denom, var = _magnitude_plus_variation(Q, k_t)
        worst_lhs = 0.0
        ok = True
        for H in library:
            vals = elementary_integral(Q, H, t)
            worst_lhs = max(worst_lhs, float(w @ (np.abs(vals) > c)))
            contrib = elementary_integral_by_coordinate(Q, H, t, values=drift)
            for i in range(Q.d):
                ok = ok and float(w @ (np.abs(contrib[:, i]) > c)) <= var[i] / c
        n = len(library)
        exhaustive = False
    rhs = constants.b / c * denom
    worst_ratio = worst_lhs * c / denom if denom > 0.0 else 0.0
    a_min = max(worst_ratio / (2.0 * Q.d) - 1.0, 0.0)
    return BurkholderSweep(
        worst_lhs=worst_lhs,
        rhs=rhs,
        worst_ratio=worst_ratio,
        decomposition_step_ok=ok,
        exhaustive=exhaustive,
        n_integrands=n,
        minimal_sufficient_a=a_min,
        constants=constants,
    )


# -- identities backing the hierarchy ------------------------------------------


def hitting_identity_check(Q: DiscreteProcessLaw, i: int, t: float, c: float):
    """Exact identity between the sup-norm tail of coordinate i on [0, t]
    and the tail of the stopped integral: returns (sup_tail, stopped_tail,
    equal)."""
    k_t = Q.grid_index(t)
    w = Q.weight_array
    sup_tail = float(w @ (_coordinate_sup(Q, k_t)[:, i] > c))
    H = hitting_integrand(Q, i, t, c)
    stopped_tail = float(w @ (np.abs(elementary_integral(Q, H, t)) > c))
    return sup_tail, stopped_tail, sup_tail == stopped_tail


def upcrossing_tail_check(
    Q: DiscreteProcessLaw, i: int, t: float, level: tuple[float, float], c: float,
    m: int | None = None,
):
    """Crossing-integrand domination of the upcrossing tail.

    Checks Q(N^{a,b}(X^{i,t}) > c) <= Q(|(H.X)_t| > a^+ + c(b-a)) with the
    m-excursion crossing integrand, m defaulting to ceil(c)+1.  Sound for
    integer thresholds c with b - a >= a^+ (each completed crossing moves the
    integral by more than b - a while an open excursion costs at most a^+).
    Returns (lhs, rhs, holds).
    """
    a, b = float(level[0]), float(level[1])
    if not a < b:
        raise DomainError(f"level pair needs a < b, got ({a}, {b})")
    if not c >= 0.0:
        raise DomainError(f"threshold must be non-negative, got {c}")
    m = int(math.ceil(c)) + 1 if m is None else m
    k_t = Q.grid_index(t)
    w = Q.weight_array
    lhs = float(w @ (_upcross_counts(Q, k_t, i, a, b) > c))
    H = crossing_integrand(Q, i, t, a, b, m)
    thresh = max(a, 0.0) + c * (b - a)
    rhs = float(w @ (np.abs(elementary_integral(Q, H, t)) > thresh))
    return lhs, rhs, lhs <= rhs


# -- compact-set mass -------------------------------------------------------------


def compact_mass(Q: DiscreteProcessLaw, profile: CompactnessProfile, t_list) -> float:
    """Total weight of atoms escaping the profile's product set: some
    coordinate's sup-norm on [0, t] above its envelope, or some listed
    upcrossing count above its envelope, at some t in t_list."""
    if profile.d != Q.d:
        raise DomainError("profile and law dimensions differ")
    times = tuple(float(t) for t in t_list)
    mass = 0.0
    for idx, path in enumerate(Q.paths):
        violates = False
        for t in times:
            t_eff = min(t, Q.horizon.end)
            for i in range(Q.d):
                coord = path.coords[i]
                j = bisect.bisect_right(coord.breakpoints, t_eff)
                run_sup = max(abs(x) for x in coord.values[: max(j, 1)])
                if run_sup > profile.sup_bounds[i](t):
                    violates = True
                    break
                for (q, r), bounds in profile.upcross_bounds:
                    armed = False
                    n = 0
                    for x in coord.values[: max(j, 1)]:
                        if armed:
                            if x > r:
                                n += 1
                                armed = False
                        elif x < q:
                            armed = True
                    if n > bounds[i](t):
                        violates = True
                        break
                if violates:
                    break
            if violates:
                break
        if violates:
            mass += Q.weights[idx]
    return mass
