from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import indicator, random_path
from oracles import j1_finite_oracle, riemann_integral
from skorlab.errors import DomainError
from skorlab.metrics import (
    ArctanMoment,
    TerminalValue,
    TimeChange,
    WindowAverage,
    default_functionals,
    j1_cost,
    j1_finite,
    j1_halfline,
    mz_converges,
    mz_eval,
    mz_gap,
    mz_truncation_bound,
)
from skorlab.paths import CadlagPath, TimeHorizon

H2 = TimeHorizon.finite(2.0)
H3 = TimeHorizon.finite(3.0)
H4 = TimeHorizon.finite(4.0)
HL2 = TimeHorizon.half_line(2.0)


def test_time_change_eval_inverse_slopes():
    lam = TimeChange((0.0, 0.5, 1.25, 2.0), (0.0, 0.8, 1.5, 2.0))
    assert lam(0.0) == 0.0
    assert lam(2.0) == 2.0
    assert lam(0.5) == 0.8
    assert math.isclose(lam(1.0), 0.8 + 0.7 * (0.5 / 0.75), abs_tol=1e-15)
    for s in (0.0, 0.3, 0.8, 1.1, 1.9, 2.0):
        assert math.isclose(lam(lam.inverse(s)), s, abs_tol=1e-12)
    assert lam.slopes() == ((0.8 - 0.0) / 0.5, 0.7 / 0.75, 0.5 / 0.75)
    ident = TimeChange.identity(3.0)
    assert ident(1.234) == 1.234
    with pytest.raises(DomainError):
        lam(2.5)
    with pytest.raises(DomainError):
        lam.inverse(-0.1)


def test_time_change_rejects_bad_knots():
    with pytest.raises(DomainError):
        TimeChange((0.5, 2.0), (0.0, 2.0))
    with pytest.raises(DomainError):
        TimeChange((0.0, 2.0), (0.0, 1.5))
    with pytest.raises(DomainError):
        TimeChange((0.0, 1.0, 1.0, 2.0), (0.0, 0.5, 1.0, 2.0))
    with pytest.raises(DomainError):
        TimeChange((0.0,), (0.0,))
    with pytest.raises(DomainError):
        TimeChange((0.0, 1.0, 2.0), (0.0, 2.0))
    with pytest.raises(DomainError):
        TimeChange((0.0, math.inf), (0.0, math.inf))


def test_j1_cost_aligning_a_shifted_jump():
    omega = indicator(H2, 1.0)
    omega_tilde = indicator(H2, 1.1)
    aligned = TimeChange((0.0, 1.0, 2.0), (0.0, 1.1, 2.0))
    # slopes 1.1 and 0.9; the flatter piece dominates
    assert math.isclose(j1_cost(omega, omega_tilde, aligned), abs(math.log(0.9)), abs_tol=1e-12)
    assert j1_cost(omega, omega_tilde, TimeChange.identity(2.0)) == 1.0
    with pytest.raises(DomainError):
        j1_cost(omega, omega_tilde, TimeChange.identity(3.0))
    with pytest.raises(DomainError):
        j1_cost(omega, indicator(H3, 1.0), TimeChange.identity(2.0))


def test_log_slope_sup_reduces_to_single_pieces():
    # difference quotients are convex combinations of piece slopes, so the
    # two-point sup never exceeds the piece sup
    lam = TimeChange((0.0, 0.5, 1.25, 2.0), (0.0, 0.8, 1.5, 2.0))
    piece_sup = max(abs(math.log(s)) for s in lam.slopes())
    grid = [k / 40.0 for k in range(81)]
    sample_sup = max(
        abs(math.log((lam(t) - lam(s)) / (t - s)))
        for s in grid
        for t in grid
        if t > s
    )
    assert sample_sup <= piece_sup + 1e-12
    assert math.isclose(sample_sup, piece_sup, abs_tol=1e-12)


def test_j1_finite_jump_time_shift():
    omega = indicator(H2, 1.0)
    omega_tilde = indicator(H2, 1.1)
    want = abs(math.log(0.9))
    assert math.isclose(j1_finite(omega, omega_tilde), want, abs_tol=1e-12)
    assert math.isclose(j1_finite(omega_tilde, omega), want, abs_tol=1e-12)


def test_j1_finite_jump_height_scale():
    omega = indicator(H2, 1.0)
    omega_tilde = indicator(H2, 1.0, height=2.0)
    assert j1_finite(omega, omega_tilde) == 1.0


def test_j1_finite_zero_on_equal_paths():
    rng = np.random.default_rng(7)
    for _ in range(6):
        x = random_path(rng, T=2.0, max_segments=4)
        assert j1_finite(x, x) == 0.0


def test_j1_finite_jump_at_the_horizon_end():
    late = CadlagPath.scalar(H2, (0.0, 2.0), (0.0, 1.0))
    flat = CadlagPath.constant(H2, (0.0,))
    assert j1_finite(late, flat) == 1.0


def test_j1_finite_bounded_by_identity_cost():
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = random_path(rng, T=2.0, max_segments=4)
        y = random_path(rng, T=2.0, max_segments=4)
        assert j1_finite(x, y, refinement=3) <= j1_cost(x, y, TimeChange.identity(2.0)) + 1e-12


def test_j1_finite_matches_bruteforce():
    rng = np.random.default_rng(23)
    for _ in range(12):
        x = random_path(rng, T=2.0, max_segments=3)
        y = random_path(rng, T=2.0, max_segments=3)
        lib = j1_finite(x, y, refinement=3)
        ref = j1_finite_oracle(x, y, refinement=3)
        assert abs(lib - ref) <= 1e-9


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_j1_finite_symmetric(seed):
    rng = np.random.default_rng(seed)
    x = random_path(rng, T=2.0, max_segments=3)
    y = random_path(rng, T=2.0, max_segments=3)
    assert math.isclose(j1_finite(x, y, refinement=2), j1_finite(y, x, refinement=2),
                        abs_tol=1e-9)


def test_j1_halfline_weighted_restrictions():
    omega = indicator(HL2, 1.0)
    omega_tilde = indicator(HL2, 1.1)
    got = j1_halfline(omega, omega_tilde)
    # restriction to [0, 1] keeps the first path's jump but not the second's,
    # so the r=1 term saturates at 1
    assert math.isclose(got.value, 0.5 + 0.25 * abs(math.log(0.9)), abs_tol=1e-12)
    assert got.tail == 0.25
    short = j1_halfline(omega, omega_tilde, r_max=1)
    assert short.value == 0.5 and short.tail == 0.5
    same = j1_halfline(omega, omega)
    assert same.value == 0.0
    with pytest.raises(DomainError):
        j1_halfline(indicator(H2, 1.0), indicator(H2, 1.1))
    with pytest.raises(DomainError):
        j1_halfline(omega, omega_tilde, r_max=0)


def test_window_average_exact_overlap():
    spike = CadlagPath.scalar(H4, (0.0, 1.0, 2.0), (0.0, 1.0, 0.0))
    assert mz_eval(WindowAverage(0, q=0.5, r=1.0), spike) == 0.5
    assert mz_eval(WindowAverage(0, q=0.0, r=4.0), spike) == 0.25
    with pytest.raises(DomainError):
        mz_eval(WindowAverage(0, q=3.5, r=1.0), spike)
    flat = CadlagPath.constant(HL2, (1.0,))
    assert mz_eval(WindowAverage(0, q=0.0, r=10.0), flat) == 1.0


def test_window_average_matches_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(8):
        x = random_path(rng, T=4.0, max_segments=5)
        f = WindowAverage(0, q=0.5, r=2.5)
        ref = riemann_integral(lambda t: x.eval(t)[0], 0.5, 3.0,
                               x.coords[0].breakpoints) / 2.5
        assert math.isclose(mz_eval(f, x), ref, abs_tol=1e-9)


def test_arctan_moment_closed_form():
    one = CadlagPath.constant(HL2, (1.0,))
    assert math.isclose(mz_eval(ArctanMoment(0, k=0), one), math.pi / 4.0, abs_tol=1e-15)
    one_fin = CadlagPath.constant(H2, (1.0,))
    want = (math.pi / 4.0) * (1.0 - math.exp(-2.0))
    assert math.isclose(mz_eval(ArctanMoment(0, k=0), one_fin), want, abs_tol=1e-15)
    step = indicator(TimeHorizon.half_line(3.0), 1.0)
    assert math.isclose(mz_eval(ArctanMoment(0, k=0), step),
                        (math.pi / 4.0) * math.exp(-1.0), abs_tol=1e-15)


def test_arctan_moment_matches_quadrature():
    rng = np.random.default_rng(5)
    for _ in range(6):
        x = random_path(rng, T=2.0, max_segments=4)
        f = ArctanMoment(0, k=1, power=2)
        ref = riemann_integral(
            lambda t: math.atan(x.eval(t)[0]) ** 2 * math.exp(-2.0 * t),
            0.0, 2.0, x.coords[0].breakpoints, n_per_segment=3000,
        )
        assert math.isclose(mz_eval(f, x), ref, abs_tol=1e-5)


def test_truncation_bound_only_for_halfline_arctan():
    f = ArctanMoment(0, k=1, power=2)
    want = (math.pi / 2.0) ** 2 * math.exp(-4.0) / 2.0
    assert math.isclose(mz_truncation_bound(f, HL2), want, abs_tol=1e-15)
    assert mz_truncation_bound(f, H2) == 0.0
    assert mz_truncation_bound(WindowAverage(0, 0.0, 1.0), HL2) == 0.0
    assert mz_truncation_bound(TerminalValue(0), H2) == 0.0


def test_terminal_value():
    spike = CadlagPath.scalar(H4, (0.0, 1.0, 2.0), (0.0, 1.0, 0.25))
    assert mz_eval(TerminalValue(0), spike) == 0.25
    with pytest.raises(DomainError):
        mz_eval(TerminalValue(0), CadlagPath.constant(HL2, (1.0,)))
    with pytest.raises(DomainError):
        mz_eval(TerminalValue(1), spike)


def test_functional_validation():
    with pytest.raises(DomainError):
        WindowAverage(0, q=-1.0, r=1.0)
    with pytest.raises(DomainError):
        WindowAverage(0, q=0.0, r=0.0)
    with pytest.raises(DomainError):
        ArctanMoment(0, k=-1)
    with pytest.raises(DomainError):
        ArctanMoment(0, k=0, power=3)
    with pytest.raises(DomainError):
        TerminalValue(-1)


def test_mz_gap_shifted_indicator():
    fs = [WindowAverage(0, q=0.0, r=3.0), TerminalValue(0)]
    limit = indicator(H3, 1.0)
    for n in (1, 2, 5):
        elem = indicator(H3, 1.0 + 1.0 / n)
        assert math.isclose(mz_gap(elem, limit, fs), 1.0 / (3.0 * n), abs_tol=1e-12)


def test_mz_gap_validation():
    limit = indicator(H3, 1.0)
    with pytest.raises(DomainError):
        mz_gap(limit, limit, [])
    with pytest.raises(DomainError):
        mz_gap(limit, limit, [WindowAverage(0, 0.0, 1.0)])  # no terminal value
    with pytest.raises(DomainError):
        mz_gap(limit, indicator(H4, 1.0), [TerminalValue(0)])
    flat = CadlagPath.constant(HL2, (0.0,))
    assert mz_gap(flat, flat, [WindowAverage(0, 0.0, 1.0)]) == 0.0


def test_mz_converges_judges_the_trailing_half():
    fs = [WindowAverage(0, q=0.0, r=3.0), TerminalValue(0)]
    limit = indicator(H3, 1.0)
    seq = [indicator(H3, 1.0 + 1.0 / n) for n in range(1, 9)]
    report = mz_converges(seq, limit, fs, tol=0.1)
    assert report.verdict
    assert len(report.gaps) == 8
    assert report.per_functional[0] == (1.0 / 3.0, 0.0)
    assert math.isclose(report.gaps[-1], 1.0 / 24.0, abs_tol=1e-12)
    assert not mz_converges(seq, limit, fs, tol=0.05).verdict
    with pytest.raises(DomainError):
        mz_converges([], limit, fs, tol=0.1)
    with pytest.raises(DomainError):
        mz_converges(seq, limit, fs, tol=0.0)


def test_vanishing_spike_separates_the_topologies():
    # pseudo-path functionals forgive a shrinking spike; J1 never does
    limit = CadlagPath.constant(H4, (0.0,))
    fs = default_functionals(1, H4)
    seq = [indicator(H4, 1.0, stop=1.0 + 1.0 / n) for n in (4, 8, 16, 32)]
    report = mz_converges(seq, limit, fs, tol=0.05)
    assert report.verdict
    for elem in seq:
        assert j1_finite(elem, limit) == 1.0


def test_default_functionals_cover_coordinates():
    fs = default_functionals(2, H4)
    assert len(fs) == 8
    assert {f.i for f in fs} == {0, 1}
    assert sum(isinstance(f, TerminalValue) for f in fs) == 2
    fs_hl = default_functionals(2, HL2)
    assert len(fs_hl) == 6
    assert not any(isinstance(f, TerminalValue) for f in fs_hl)
