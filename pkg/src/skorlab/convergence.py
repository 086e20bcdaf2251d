"""Weak-convergence diagnostics for sequences of step-path laws.

Finite-dimensional gaps are taken against a bounded separating library: all
products of arctan / squared-arctan coordinate readings (or the constant 1)
at up to three times.  Functional gaps pair the laws with the topology
functionals from the metrics module.  Verdicts compare trailing gaps with a
tolerance, never proving convergence, only failing to falsify it at scale.

The stability suite checks hypothesis and conclusion of the three
class-stability facts: uniform integrand tails carry semimartingale-ness to
the limit, a uniform magnitude-plus-variation bound carries the
quasimartingale statistic (through the truncation inequality, hence the
factor 4 plus a magnitude term), and uniform integrability of negative parts
carries the supermartingale property.  Each verdict is three-valued: pass,
fail, or hypothesis_failed when the premise itself does not hold, in which
case the conclusion is not asserted.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .laws import (
    Classification,
    DiscreteProcessLaw,
    clamp,
    classify,
    conditional_variation,
)
from .metrics import default_functionals, mz_eval
from .paths import TimeHorizon
from .tightness import (
    DEFAULT_C_GRID,
    DEFAULT_LEVEL_PAIRS,
    CompactnessProfile,
    ConditionReport,
    StepBound,
    check_UB,
    check_UI,
    check_UT_empirical,
    compact_mass,
)

__all__ = [
    "DenseGrid",
    "ConvergenceReport",
    "StabilityConfig",
    "StabilityReport",
    "TruncationCheck",
    "fdd_gap",
    "weakstar_gap",
    "converges",
    "stability_suite",
    "truncation_levels",
    "truncation_variation_report",
    "tightness_profile",
]


@dataclass(frozen=True)
class DenseGrid:
    """Finite stand-in for a dense time set; must reach T on finite horizons.

    On step-path laws, finite-dimensional convergence on the union of all
    breakpoints plus T already decides weak convergence, so a finite grid
    loses nothing at desk scale.
    """

    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if not times:
            raise DomainError("a dense grid needs at least one time")
        if any(not math.isfinite(t) or t < 0.0 for t in times):
            raise DomainError("grid times must be finite and non-negative")
        if any(not u < w for u, w in zip(times, times[1:])):
            raise DomainError("grid times must be strictly increasing")

    def validate_for(self, horizon: TimeHorizon) -> None:
        if any(not horizon.contains(t) for t in self.times):
            raise DomainError("grid times must lie in the horizon")
        if horizon.is_finite and self.times[-1] != horizon.end:
            raise DomainError("a finite-horizon grid must include the terminal time")

    @classmethod
    def covering(cls, laws) -> "DenseGrid":
        """Union of the laws' grid times (with T when finite): the set on
        which fdd convergence of step-path laws decides everything."""
        laws = list(laws)
        if not laws:
            raise DomainError("no laws to cover")
        times = set()
        for law in laws:
            times.update(law.grid.times)
            if law.horizon.is_finite:
                times.add(law.horizon.end)
        return cls(tuple(sorted(times)))


def _test_function_table(law: DiscreteProcessLaw, times) -> np.ndarray:
    """(len(times), n_options, atoms) readings of the separating library:
    option 0 is the constant 1, then arctan and arctan^2 per coordinate."""
    A, d = law.n_atoms, law.d
    vals = np.empty((len(times), A, d))
    for a, path in enumerate(law.paths):
        for j, t in enumerate(times):
            vals[j, a, :] = path.eval(t)
    table = np.empty((len(times), 1 + 2 * d, A))
    table[:, 0, :] = 1.0
    at = np.arctan(vals)  # (m, A, d)
    table[:, 1 : 1 + d, :] = np.moveaxis(at, 2, 1)
    table[:, 1 + d :, :] = np.moveaxis(at * at, 2, 1)
    return table


def fdd_gap(Q1: DiscreteProcessLaw, Q2: DiscreteProcessLaw, F) -> float:
    """Largest expectation gap over the arctan product library at times F.

    Exact on atoms.  Zero gap does not prove the laws equal: the library is
    finite and bounded, it can only separate what it sees.
    """
    times = tuple(float(t) for t in F)
    if not times:
        raise DomainError("the time set F is empty")
    if len(times) > 3:
        raise DomainError("the product library covers at most three times")
    if Q1.d != Q2.d:
        raise ValidationError("laws must share the dimension")
    t1 = _test_function_table(Q1, times)
    t2 = _test_function_table(Q2, times)
    w1, w2 = Q1.weight_array, Q2.weight_array
    n_opt = t1.shape[1]
    gap = 0.0
    for choice in itertools.product(range(n_opt), repeat=len(times)):
        f1 = np.ones(Q1.n_atoms)
        f2 = np.ones(Q2.n_atoms)
        for j, g in enumerate(choice):
            f1 *= t1[j, g]
            f2 *= t2[j, g]
        gap = max(gap, abs(float(w1 @ f1) - float(w2 @ f2)))
    return gap


def weakstar_gap(Q1: DiscreteProcessLaw, Q2: DiscreteProcessLaw, fs) -> float:
    """Largest expectation gap of the topology functionals over the atoms."""
    fs = tuple(fs)
    if not fs:
        raise DomainError("the functional set is empty")
    gap = 0.0
    for f in fs:
        e1 = math.fsum(w * mz_eval(f, p) for w, p in zip(Q1.weights, Q1.paths))
        e2 = math.fsum(w * mz_eval(f, p) for w, p in zip(Q2.weights, Q2.paths))
        gap = max(gap, abs(e1 - e2))
    return gap


def _trailing_ok(gaps, tol: float) -> bool:
    tail = max(1, math.ceil(len(gaps) / 2))
    return all(g < tol for g in gaps[-tail:])


@dataclass(frozen=True)
class ConvergenceReport:
    verdict: bool
    fdd_verdict: bool
    functional_verdict: bool
    tol: float
    fdd_gaps: tuple[float, ...]
    functional_gaps: tuple[float, ...]
    library: str
    limit_classification: Classification


def converges(
    sequence,
    limit: DiscreteProcessLaw,
    D: DenseGrid,
    fs=None,
    tol: float = 1e-3,
) -> ConvergenceReport:
    """Per-index fdd gaps over all F in D with |F| <= 3 plus functional gaps
    against the limit; verdicts require the trailing half of each gap
    sequence below tol."""
    laws = list(sequence)
    if not laws:
        raise DomainError("the sequence of laws is empty")
    if not tol > 0.0:
        raise DomainError("tolerance must be positive")
    if not isinstance(D, DenseGrid):
        D = DenseGrid(tuple(D))
    for law in laws:
        if law.d != limit.d or law.horizon != limit.horizon:
            raise ValidationError("sequence and limit must share dimension and horizon")
    D.validate_for(limit.horizon)
    if fs is None:
        fs = default_functionals(limit.d, limit.horizon)
    depth = min(3, len(D.times))
    subsets = list(itertools.combinations(D.times, depth))
    fdd_gaps = []
    functional_gaps = []
    for law in laws:
        # the constant-1 slots make every smaller F a special case of depth-3
        fdd_gaps.append(max(fdd_gap(law, limit, F) for F in subsets))
        functional_gaps.append(weakstar_gap(law, limit, fs))
    fdd_ok = _trailing_ok(fdd_gaps, tol)
    fun_ok = _trailing_ok(functional_gaps, tol)
    return ConvergenceReport(
        verdict=fdd_ok and fun_ok,
        fdd_verdict=fdd_ok,
        functional_verdict=fun_ok,
        tol=tol,
        fdd_gaps=tuple(fdd_gaps),
        functional_gaps=tuple(functional_gaps),
        library="products of {1, arctan(x_i), arctan(x_i)^2} at up to 3 times",
        limit_classification=classify(limit),
    )


# -- class stability -----------------------------------------------------------


@dataclass(frozen=True)
class StabilityConfig:
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    levels: tuple[tuple[float, float], ...] = DEFAULT_LEVEL_PAIRS
    eps: float = 1e-9
    tol: float = 1e-9
    extra_random: int = 0
    seed: int = 0
    m_max: int = 3
    slot_cap: int = 16


@dataclass(frozen=True)
class StabilityReport:
    ut_report: ConditionReport
    ub_report: ConditionReport
    ui_report: ConditionReport
    limit_ut: ConditionReport
    limit_classification: Classification
    semimartingale: str
    quasimartingale: str
    supermartingale: str
    quasi_bound: float


def _verdict(hypothesis_ok: bool, conclusion_ok: bool) -> str:
    if not hypothesis_ok:
        return "hypothesis_failed"
    return "pass" if conclusion_ok else "fail"


def stability_suite(
    sequence, limit: DiscreteProcessLaw, config: StabilityConfig | None = None
) -> StabilityReport:
    """Hypothesis-and-conclusion audit of the three stability facts.

    Semimartingale: integrand tails uniformly small along the sequence, and
    still small for the limit.  Quasimartingale: a finite uniform
    magnitude-plus-variation statistic bounds the limit's statistic by
    4*statistic + sup E|X_t| (the truncation inequality's constants).
    Supermartingale: uniformly integrable negative parts, and the limit's
    per-coordinate flags hold at the configured tolerance.  A failed premise
    reports hypothesis_failed and asserts nothing about the conclusion.
    """
    cfg = StabilityConfig() if config is None else config
    laws = list(sequence)
    if not laws:
        raise DomainError("the sequence of laws is empty")
    ut = check_UT_empirical(
        laws,
        c_grid=cfg.c_grid,
        levels=cfg.levels,
        extra_random=cfg.extra_random,
        seed=cfg.seed,
        eps=cfg.eps,
        m_max=cfg.m_max,
        slot_cap=cfg.slot_cap,
    )
    ub = check_UB(laws)
    ui = check_UI(laws, c_grid=cfg.c_grid, eps=cfg.eps)
    limit_ut = check_UT_empirical(
        [limit],
        c_grid=cfg.c_grid,
        levels=cfg.levels,
        extra_random=cfg.extra_random,
        seed=cfg.seed,
        eps=cfg.eps,
        m_max=cfg.m_max,
        slot_cap=cfg.slot_cap,
    )
    limit_cls = classify(limit, tol=cfg.tol)

    sup_e_abs = 0.0
    for law in laws:
        level = np.abs(law.values).sum(axis=2)
        sup_e_abs = max(sup_e_abs, float((law.weight_array @ level).max()))
    quasi_bound = 4.0 * ub.scalar + sup_e_abs

    semi = _verdict(ut.verdict == "pass", limit_ut.verdict == "pass")
    quasi = _verdict(
        ub.verdict == "pass" and math.isfinite(ub.scalar),
        limit_cls.quasimartingale_statistic <= quasi_bound + 1e-9,
    )
    supere = _verdict(ui.verdict == "pass", all(limit_cls.supermartingale))
    return StabilityReport(
        ut_report=ut,
        ub_report=ub,
        ui_report=ui,
        limit_ut=limit_ut,
        limit_classification=limit_cls,
        semimartingale=semi,
        quasimartingale=quasi,
        supermartingale=supere,
        quasi_bound=quasi_bound,
    )


# -- truncation inequality --------------------------------------------------------


@dataclass(frozen=True)
class TruncationCheck:
    coordinate: int
    c: float
    t: float
    var_truncated: float
    var: float
    magnitude: float
    holds_bare: bool
    holds: bool


def truncation_levels(law: DiscreteProcessLaw) -> tuple[float, ...]:
    """Positive truncation thresholds from the law's own scale: the 50% and
    90% quantiles and the maximum of the pooled |values|."""
    pooled = np.abs(law.values).ravel()
    qs = np.quantile(pooled, (0.5, 0.9, 1.0))
    out = []
    for c in qs:
        c = float(c)
        if c > 0.0 and c not in out:
            out.append(c)
    return tuple(out)


def truncation_variation_report(
    law: DiscreteProcessLaw, c: float, t: float | None = None
) -> tuple[TruncationCheck, ...]:
    """Conditional variation of the clamped process against two envelopes.

    The bare factor-4 bound fails in general (clamping can create variation
    where conditional means cancelled); adding twice the expected magnitude
    repairs it: Var(clamp) <= 4 Var + 2 E|X_t|.  Both comparisons are
    reported per coordinate.
    """
    t = law.grid.times[-1] if t is None else float(t)
    clamped = clamp(law, c)
    k_t = law.grid_index(t)
    w = law.weight_array
    out = []
    for i in range(law.d):
        var_trunc = conditional_variation(clamped, i, t)
        var = conditional_variation(law, i, t)
        mag = float(w @ np.abs(law.values[:, k_t, i]))
        out.append(
            TruncationCheck(
                coordinate=i,
                c=float(c),
                t=t,
                var_truncated=var_trunc,
                var=var,
                magnitude=mag,
                holds_bare=var_trunc <= 4.0 * var + 1e-12,
                holds=var_trunc <= 4.0 * var + 2.0 * mag + 1e-12,
            )
        )
    return tuple(out)


# -- smallest covering profile ------------------------------------------------------


def _atom_statistics(law: DiscreteProcessLaw, times, levels):
    """Per-atom dict key -> value for every envelope statistic."""
    per_atom = []
    for path in law.paths:
        stats = {}
        for t in times:
            t_eff = min(t, law.horizon.end)
            for i in range(law.d):
                coord = path.coords[i]
                j = max(bisect.bisect_right(coord.breakpoints, t_eff), 1)
                vals = coord.values[:j]
                stats[("sup", i, t)] = max(abs(x) for x in vals)
                for q, r in levels:
                    armed = False
                    n = 0
                    for x in vals:
                        if armed:
                            if x > r:
                                n += 1
                                armed = False
                        elif x < q:
                            armed = True
                    stats[("up", (q, r), i, t)] = float(n)
        per_atom.append(stats)
    return per_atom


def _mass_quantile(values, weights, eps: float) -> float:
    """Smallest observed level v with total weight of {value > v} <= eps."""
    order = sorted(range(len(values)), key=lambda a: values[a], reverse=True)
    above = 0.0
    level = values[order[0]]
    for a in order:
        if above > eps:
            break
        level = values[a]
        above += weights[a]
    return level


def tightness_profile(
    family, eps: float, t_list=None, levels=DEFAULT_LEVEL_PAIRS
) -> CompactnessProfile:
    """Smallest observed-value envelope keeping every law's escaping mass
    at or below eps.

    Start from per-statistic (1-eps)-quantile levels, verify the joint mass
    law by law, and escalate: while some law leaks more than eps, lift the
    envelopes to cover its heaviest violating atom.  Envelopes are then made
    non-decreasing in t.  Exact by construction: the final profile is
    re-verified with compact_mass.
    """
    laws = list(family)
    if not laws:
        raise DomainError("the family of laws is empty")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    d = laws[0].d
    if any(law.d != d for law in laws):
        raise ValidationError("all laws in a family must share the dimension")
    levels = tuple((float(q), float(r)) for q, r in levels)
    for q, r in levels:
        if not q < r:
            raise DomainError(f"level pair needs q < r, got ({q}, {r})")
    if t_list is None:
        times = sorted({t for law in laws for t in law.grid.times})
    else:
        times = sorted({float(t) for t in t_list})
    if not times:
        raise DomainError("the envelope time list is empty")

    stats = [_atom_statistics(law, times, levels) for law in laws]
    keys = list(stats[0][0].keys())
    level_map = {}
    for key in keys:
        level_map[key] = max(
            _mass_quantile([atom[key] for atom in per_law], law.weights, eps)
            for per_law, law in zip(stats, laws)
        )

    def law_mass(per_law, law):
        mass = 0.0
        worst = None
        for atom, weight in zip(per_law, law.weights):
            if any(atom[k] > level_map[k] for k in keys):
                mass += weight
                if worst is None or weight > worst[0]:
                    worst = (weight, atom)
        return mass, worst

    for per_law, law in zip(stats, laws):
        while True:
            mass, worst = law_mass(per_law, law)
            if mass <= eps:
                break
            # cover the heaviest escaping atom outright
            for k in keys:
                level_map[k] = max(level_map[k], worst[1][k])

    def envelope(key_of):
        # non-decreasing in t by cumulative max
        by_t = []
        running = 0.0
        for t in times:
            running = max(running, level_map[key_of(t)])
            by_t.append(running)
        ts, ls = list(times), by_t
        if ts[0] != 0.0:
            ts = [0.0, *ts]
            ls = [ls[0], *ls]
        return StepBound(tuple(ts), tuple(ls))

    sup_bounds = tuple(envelope(lambda t, i=i: ("sup", i, t)) for i in range(d))
    upcross = tuple(
        ((q, r), tuple(envelope(lambda t, i=i, q=q, r=r: ("up", (q, r), i, t)) for i in range(d)))
        for q, r in levels
    )
    profile = CompactnessProfile(sup_bounds=sup_bounds, upcross_bounds=upcross)
    for law in laws:
        if compact_mass(law, profile, times) > eps:
            raise ValidationError("internal escalation failed to cover the family")
    return profile
