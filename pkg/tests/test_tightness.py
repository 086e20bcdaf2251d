from __future__ import annotations

import math

import numpy as np
import pytest

from skorlab.errors import DomainError, ValidationError
from skorlab.generators import random_tree_law
from skorlab.laws import DiscreteProcessLaw, elementary_integral
from skorlab.paths import TimeHorizon
from skorlab.tightness import (
    DEFAULT_LEVEL_PAIRS,
    BoundConstants,
    CompactnessProfile,
    StepBound,
    burkholder_check,
    burkholder_sweep,
    check_UB,
    check_UI,
    check_US,
    check_UT_empirical,
    compact_mass,
    crossing_integrand,
    hitting_identity_check,
    hitting_integrand,
    upcrossing_tail_check,
    worstcase_integrands,
)


def law_from(T, times, values, weights):
    return DiscreteProcessLaw.from_values(
        TimeHorizon.finite(T), times, np.asarray(values, dtype=float), weights
    )


def fair_tree():
    return law_from(1.0, (0.0, 1.0), [[[0.0], [1.0]], [[0.0], [-1.0]]], (0.5, 0.5))


def ramp():
    return law_from(2.0, (0.0, 1.0, 2.0), [[[0.0], [1.0], [2.0]]], (1.0,))


def spike():
    return law_from(2.0, (0.0, 1.0, 2.0), [[[0.0], [2.0], [0.0]]], (1.0,))


def zero_law():
    return law_from(1.0, (0.0, 1.0), [[[0.0], [0.0]]], (1.0,))


def tree_family(n_laws, seed, **kw):
    # a fixed grid length keeps the horizon shared across the family
    rng = np.random.default_rng(seed)
    return [random_tree_law(rng, times_count=4, **kw) for _ in range(n_laws)]


# -- constants and envelopes -----------------------------------------------------


def test_derived_constant_formula():
    assert BoundConstants(1.0, 1).b == 4.0
    assert BoundConstants(1.0, 3).b == 12.0  # 2*(1+1)*3, not 16
    assert BoundConstants(0.5, 2).b == 6.0
    with pytest.raises(DomainError):
        BoundConstants(0.0, 1)
    with pytest.raises(DomainError):
        BoundConstants(1.0, 0)


def test_step_bound_lookup_and_validation():
    sb = StepBound((0.0, 1.0, 2.0), (1.0, 2.0, 5.0))
    assert sb(0.0) == 1.0 and sb(0.99) == 1.0 and sb(1.0) == 2.0 and sb(10.0) == 5.0
    with pytest.raises(DomainError):
        StepBound((0.5,), (1.0,))
    with pytest.raises(DomainError):
        StepBound((0.0, 1.0), (2.0, 1.0))
    with pytest.raises(DomainError):
        StepBound((0.0,), (-1.0,))
    with pytest.raises(DomainError):
        sb(-0.5)


def test_profile_validation():
    with pytest.raises(DomainError):
        CompactnessProfile(sup_bounds=())
    with pytest.raises(DomainError):
        CompactnessProfile(
            sup_bounds=(StepBound.constant(1.0),),
            upcross_bounds=(((1.0, 0.5), (StepBound.constant(1.0),)),),
        )


# -- (UB) -------------------------------------------------------------------------


def test_ub_worked_examples():
    assert check_UB([fair_tree()]).scalar == 1.0
    rep = check_UB([ramp()])
    assert rep.scalar == 4.0
    assert rep.offenders[0].t == 2.0
    assert check_UB([zero_law()]).scalar == 0.0
    doubled = law_from(1.0, (0.0, 1.0), [[[0.0], [2.0]]], (1.0,))
    assert check_UB([fair_tree(), doubled]).scalar == 4.0


def test_ub_rejects_bad_families():
    with pytest.raises(DomainError):
        check_UB([])
    with pytest.raises(ValidationError):
        check_UB([fair_tree(), spike()])  # horizons differ


# -- (UI) -------------------------------------------------------------------------


def test_ui_negative_part_examples():
    nonneg = ramp()
    rep = check_UI([nonneg], c_grid=(1.0, 2.0))
    assert all(v == 0.0 for _, v in rep.curve())
    assert rep.verdict == "pass"

    heavy = law_from(1.0, (0.0, 1.0), [[[0.0], [-10.0]], [[0.0], [0.0]]], (0.1, 0.9))
    rep = check_UI([heavy], c_grid=(5.0, 9.5, 10.0))
    assert rep.curve() == ((5.0, 1.0), (9.5, 1.0), (10.0, 0.0))
    assert check_UI([heavy], c_grid=(5.0,), eps=0.5).verdict == "fail"

    bounded = law_from(1.0, (0.0, 1.0), [[[-5.0], [-3.0]]], (1.0,))
    rep = check_UI([bounded], c_grid=(4.0, 5.0))
    assert rep.curve() == ((4.0, 5.0), (5.0, 0.0))


def test_ui_validates_inputs():
    with pytest.raises(DomainError):
        check_UI([fair_tree()], c_grid=())
    with pytest.raises(DomainError):
        check_UI([fair_tree()], c_grid=(2.0, 1.0))


# -- worst-case integrands -----------------------------------------------------------


def test_constant_path_worstcase_library():
    law = law_from(1.0, (0.0, 1.0), [[[3.0], [3.0]]], (1.0,))
    for H in worstcase_integrands(law, 1.0, c=5.0, levels=((0.0, 1.0),)):
        H.validate_for(law)
    hit = hitting_integrand(law, 0, 1.0, 5.0)
    # never stopped: the integral carries the full path, X0 + increments
    assert elementary_integral(law, hit, 1.0).tolist() == [3.0]
    cross = crossing_integrand(law, 0, 1.0, 0.0, 1.0, m_max=2)
    assert elementary_integral(law, cross, 1.0).tolist() == [0.0]


def test_spike_hitting_and_crossing_examples():
    law = spike()
    hit = hitting_integrand(law, 0, 2.0, 1.0)
    assert elementary_integral(law, hit, 2.0).tolist() == [2.0]  # stopped at t=1
    cross = crossing_integrand(law, 0, 2.0, 0.5, 1.5, m_max=1)
    assert elementary_integral(law, cross, 2.0).tolist() == [2.0]
    with pytest.raises(DomainError):
        worstcase_integrands(law, 2.0, 1.0, levels=((1.0, 1.0),))
    with pytest.raises(DomainError):
        hitting_integrand(law, 0, 2.0, 0.0)


def test_hitting_stops_at_time_zero_when_already_large():
    law = law_from(1.0, (0.0, 1.0), [[[4.0], [9.0]]], (1.0,))
    hit = hitting_integrand(law, 0, 1.0, 2.0)
    assert elementary_integral(law, hit, 1.0).tolist() == [4.0]


def test_crossing_counts_only_the_first_m_excursions():
    law = law_from(
        4.0,
        (0.0, 1.0, 2.0, 3.0, 4.0),
        [[[0.0], [2.0], [0.0], [2.0], [0.0]]],
        (1.0,),
    )
    one = crossing_integrand(law, 0, 4.0, 0.5, 1.5, m_max=1)
    two = crossing_integrand(law, 0, 4.0, 0.5, 1.5, m_max=2)
    assert elementary_integral(law, one, 4.0).tolist() == [2.0]
    assert elementary_integral(law, two, 4.0).tolist() == [4.0]


# -- (UT) -------------------------------------------------------------------------


def test_ut_worked_examples():
    assert all(v == 0.0 for _, v in check_UT_empirical([zero_law()], c_grid=(0.5, 1.0)).curve())

    rep = check_UT_empirical([fair_tree()], c_grid=(0.5, 1.0, 2.0))
    assert rep.curve() == ((0.5, 1.0), (1.0, 0.0), (2.0, 0.0))
    assert rep.lower_bound

    rep = check_UT_empirical([ramp()], c_grid=(1.5, 2.0, 4.0))
    assert rep.curve() == ((1.5, 1.0), (2.0, 0.0), (4.0, 0.0))


def test_ut_is_deterministic_given_seed():
    fam = tree_family(4, seed=2, max_atoms=8, max_children=2)
    a = check_UT_empirical(fam, extra_random=16, seed=11)
    b = check_UT_empirical(fam, extra_random=16, seed=11)
    assert a.curve() == b.curve()


def test_ut_curves_are_non_increasing():
    fam = tree_family(6, seed=8, max_atoms=8, max_children=2)
    rep = check_UT_empirical(fam, extra_random=4, seed=0)
    vals = [v for _, v in rep.curve()]
    assert vals == sorted(vals, reverse=True)


# -- (US) -------------------------------------------------------------------------


def test_us_worked_examples():
    const = law_from(1.0, (0.0, 1.0), [[[3.0], [3.0]]], (1.0,))
    rep = check_US([const], levels=((0.5, 1.5),), c_grid=(2.0, 3.0, 4.0))
    assert rep.curves["sup_norm[i=0]"] == ((2.0, 1.0), (3.0, 0.0), (4.0, 0.0))
    assert all(v == 0.0 for _, v in rep.curves["upcross[0.5:1.5][i=0]"])

    rep = check_US([spike()], levels=((0.5, 1.5),), c_grid=(0.5, 1.0))
    assert rep.curves["upcross[0.5:1.5][i=0]"] == ((0.5, 1.0), (1.0, 0.0))


def test_us_level_validation():
    with pytest.raises(DomainError):
        check_US([spike()], levels=((1.5, 0.5),), c_grid=(1.0,))


# -- hierarchy ----------------------------------------------------------------------


def test_ut_curve_is_bounded_by_the_weak_type_envelope():
    for seed in (41, 42, 43):
        fam = tree_family(5, seed=seed, max_atoms=8, max_children=2, d=1)
        ub = check_UB(fam)
        rep = check_UT_empirical(fam, extra_random=8, seed=seed)
        b = BoundConstants(1.0, fam[0].d).b
        for c, val in rep.curve():
            assert val <= b / c * ub.scalar + 1e-12


def test_hitting_identity_is_exact():
    for seed in (1, 2, 3):
        for law in tree_family(10, seed=seed, max_atoms=10):
            t = law.grid.times[-1]
            for c in (0.25, 0.5, 1.0, 2.0):
                sup_tail, stopped_tail, equal = hitting_identity_check(law, 0, t, c)
                assert equal and sup_tail == stopped_tail


def test_ut_pass_implies_us_pass_on_tight_families():
    fam = tree_family(5, seed=77, max_atoms=8, max_children=2)
    grid = (1.0, 2.0, 4.0, 8.0)
    ut = check_UT_empirical(fam, c_grid=grid, eps=1e-9)
    us = check_US(fam, c_grid=grid, eps=1e-9)
    if ut.verdict == "pass":
        assert us.verdict == "pass"
    # the sup-norm tail never exceeds the UT tail at matched thresholds
    ut_vals = dict(ut.curve())
    for i in range(fam[0].d):
        for c, v in us.curves[f"sup_norm[i={i}]"]:
            assert v <= ut_vals[c] + 1e-12


def test_upcrossing_tail_domination_on_integer_thresholds():
    # sound for integer c on level pairs with b - a >= max(a, 0)
    pairs = [(q, r) for q, r in DEFAULT_LEVEL_PAIRS if r - q >= max(q, 0.0)]
    assert pairs
    for law in tree_family(15, seed=10, max_atoms=10):
        t = law.grid.times[-1]
        for level in pairs[:6]:
            for c in (0.0, 1.0, 2.0):
                lhs, rhs, holds = upcrossing_tail_check(law, 0, t, level, c)
                assert holds and lhs <= rhs


def test_upcrossing_tail_example():
    lhs, rhs, holds = upcrossing_tail_check(spike(), 0, 2.0, (0.5, 1.5), 0.0)
    assert (lhs, rhs, holds) == (1.0, 1.0, True)


# -- weak-type bound ------------------------------------------------------------------


def test_burkholder_worked_example():
    law = ramp()
    H = worstcase_integrands(law, 2.0, 1.0, levels=())[-1]  # sign integrand, all +1
    rep = burkholder_check(law, H, 2.0, 1.0)
    assert rep.lhs == 1.0
    assert rep.rhs == 16.0  # b=4 times (E|X_2| + Var) = 4 * 4
    assert rep.ratio == 0.25
    assert rep.decomposition_step_ok
    with pytest.raises(DomainError):
        burkholder_check(law, H, 2.0, 0.0)
    with pytest.raises(DomainError):
        burkholder_check(law, H, 2.0, 1.0, BoundConstants(1.0, 2))


def test_burkholder_trivial_when_integral_is_small():
    law = fair_tree()
    H = worstcase_integrands(law, 1.0, 1.0, levels=())[-1]
    rep = burkholder_check(law, H, 1.0, 2.0)
    assert rep.lhs == 0.0 and rep.decomposition_step_ok


def test_burkholder_sweep_is_exhaustive_on_small_trees():
    rep = burkholder_sweep(fair_tree(), 1.0, 0.5)
    assert rep.exhaustive and rep.n_integrands == 4
    assert rep.worst_lhs == 1.0 and rep.rhs == 8.0
    assert rep.worst_ratio == 0.5 and rep.minimal_sufficient_a == 0.0
    assert rep.decomposition_step_ok

    fallback = burkholder_sweep(fair_tree(), 1.0, 0.5, slot_cap=1)
    assert not fallback.exhaustive
    assert fallback.worst_lhs <= rep.worst_lhs


def test_burkholder_holds_across_random_laws():
    for law in tree_family(25, seed=55, max_atoms=8, max_children=2):
        t = law.grid.times[-1]
        for c in (0.5, 1.0, 4.0):
            rep = burkholder_sweep(law, t, c)
            assert rep.exhaustive
            assert rep.worst_lhs <= rep.rhs
            assert rep.decomposition_step_ok
            assert rep.minimal_sufficient_a <= 1.0


# -- compact-set mass ------------------------------------------------------------------


def test_compact_mass_examples():
    generous = CompactnessProfile(sup_bounds=(StepBound.constant(1e9),))
    assert compact_mass(spike(), generous, (1.0, 2.0)) == 0.0

    tight = CompactnessProfile(sup_bounds=(StepBound.constant(2.0),))
    big = law_from(1.0, (0.0, 1.0), [[[0.0], [3.0]]], (1.0,))
    assert compact_mass(big, tight, (1.0,)) == 1.0

    half = law_from(1.0, (0.0, 1.0), [[[0.0], [3.0]], [[0.0], [1.0]]], (0.5, 0.5))
    assert compact_mass(half, tight, (1.0,)) == 0.5


def test_compact_mass_upcrossing_bounds_and_monotonicity():
    prof = CompactnessProfile(
        sup_bounds=(StepBound.constant(10.0),),
        upcross_bounds=(((0.5, 1.5), (StepBound.constant(0.0),)),),
    )
    assert compact_mass(spike(), prof, (2.0,)) == 1.0  # one upcrossing > 0
    assert compact_mass(spike(), prof, (0.5,)) == 0.0  # not yet armed and fired
    looser = CompactnessProfile(
        sup_bounds=(StepBound.constant(10.0),),
        upcross_bounds=(((0.5, 1.5), (StepBound.constant(1.0),)),),
    )
    assert compact_mass(spike(), looser, (2.0,)) <= compact_mass(spike(), prof, (2.0,))


def test_compact_mass_time_dependent_envelope():
    # envelope grows at t=1, so the early bound is the binding one
    prof = CompactnessProfile(
        sup_bounds=(StepBound((0.0, 1.0), (0.5, 5.0)),),
    )
    assert compact_mass(spike(), prof, (0.5,)) == 0.0
    assert compact_mass(spike(), prof, (2.0,)) == 0.0
    early = CompactnessProfile(sup_bounds=(StepBound((0.0, 1.5), (0.5, 5.0)),))
    assert compact_mass(spike(), early, (1.0, 2.0)) == 1.0


def test_compact_mass_dimension_mismatch():
    two_d = CompactnessProfile(
        sup_bounds=(StepBound.constant(1.0), StepBound.constant(1.0))
    )
    with pytest.raises(DomainError):
        compact_mass(spike(), two_d, (1.0,))
