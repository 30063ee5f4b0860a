"""Closed-form correlation patterns for the two-pinhole geometry."""

import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostfringe.analytic import (
    CROSS_RATIO_MIN,
    WITHIN_RATIO_MAX,
    CorrelationPattern,
    b_phase,
    check_pair_conditions,
    coherence_length,
    dn_corr_basic,
    four_pair_sum,
    fringe_period_xc,
    g1_pair,
    pattern_visibility,
    phase_phi_basic,
    separation_ratios,
)
from ghostfringe.core import wrap_angle
from ghostfringe.geometry import ConditionWarning, ParaxialWarning, SetupBasic
from ghostfringe.patterns import evaluate_pattern, make_grid


def two_path_setup(ratio: float = 20.0, offset: float = 0.0) -> SetupBasic:
    """Geometry with cross separations at `ratio` coherence lengths.

    l_coh = 5e-4 m for these numbers. `offset` shifts both arm-T pinholes
    together, leaving the within-pair separations equal to each other.
    """
    l_coh = 5e-4
    sep = ratio * l_coh
    return SetupBasic(
        a=0.5e-3, wavelength=500e-9, z=1.0, f=1.0,
        x1=-sep / 2.0, x2=sep / 2.0,
        x1p=-sep / 2.0 + offset, x2p=sep / 2.0 + offset,
    )


positions = st.floats(min_value=-1e-2, max_value=1e-2)
detector = st.floats(min_value=-1e-3, max_value=1e-3)


def setups(draw):
    a = draw(st.floats(min_value=1e-4, max_value=1e-3))
    wavelength = draw(st.floats(min_value=400e-9, max_value=700e-9))
    return SetupBasic(
        a=a, wavelength=wavelength, z=1.0, f=1.0,
        x1=draw(positions), x2=draw(positions),
        x1p=draw(positions), x2p=draw(positions),
    )


setup_strategy = st.composite(setups)()


# ---------------------------------------------------------------------------
# Geometry-derived scales
# ---------------------------------------------------------------------------


def test_coherence_length_values():
    assert coherence_length(two_path_setup()) == pytest.approx(5e-4, rel=1e-12)
    wide = SetupBasic(a=1e-3, wavelength=1e-6, z=1.0, f=1.0, x1=0, x2=0, x1p=0, x2p=0)
    assert coherence_length(wide) == pytest.approx(5e-4, rel=1e-12)


def test_reduced_distance():
    setup = two_path_setup()
    assert setup.h == pytest.approx(0.5, rel=1e-12)


def test_setup_rejects_nonpositive_lengths():
    with pytest.raises(ValueError, match="z must be positive, got z=-1.0"):
        SetupBasic(a=1e-3, wavelength=500e-9, z=-1.0, f=1.0, x1=0, x2=0, x1p=0, x2p=0)
    with pytest.raises(ValueError, match="a must be positive"):
        SetupBasic(a=0.0, wavelength=500e-9, z=1.0, f=1.0, x1=0, x2=0, x1p=0, x2p=0)


def test_paraxial_warning_on_wide_mask():
    with pytest.warns(ParaxialWarning, match="exceeds z/10"):
        SetupBasic(a=1e-3, wavelength=500e-9, z=1.0, f=1.0, x1=0.2, x2=0, x1p=0, x2p=0)


def test_fringe_period_values():
    setup = two_path_setup()  # |x1 - x2| = 1e-2
    assert fringe_period_xc(setup) == pytest.approx(5e-5, rel=1e-12)
    narrow = SetupBasic(
        a=0.5e-3, wavelength=500e-9, z=1.0, f=1.0, x1=-5e-4, x2=5e-4, x1p=-5e-4, x2p=5e-4
    )
    assert fringe_period_xc(narrow) == pytest.approx(5e-4, rel=1e-12)


def test_fringe_period_rejects_coincident_pinholes():
    setup = SetupBasic(a=1e-3, wavelength=500e-9, z=1.0, f=1.0, x1=1e-3, x2=1e-3, x1p=0, x2p=0)
    with pytest.raises(ValueError, match="coincide"):
        fringe_period_xc(setup)


# ---------------------------------------------------------------------------
# Propagation factor and pair contributions
# ---------------------------------------------------------------------------


def test_b_phase_known_value():
    # omega/(2*c*h) * xj^2 = (2*pi/lambda/h) * xj^2 / 2 = 4*pi exactly here
    setup = SetupBasic(a=1e-3, wavelength=500e-9, z=1.0, f=1.0, x1=0, x2=0, x1p=0, x2p=0)
    assert b_phase(1e-3, 0.0, setup) == pytest.approx(1.0 + 0.0j, abs=1e-9)


@given(setup_strategy, detector, detector)
@settings(max_examples=100)
def test_b_phase_unit_modulus(setup, xj, xd):
    assert abs(abs(b_phase(xj, xd, setup)) - 1.0) < 1e-12


@given(setup_strategy, detector, detector)
@settings(max_examples=100)
def test_pair_phase_identity(setup, x_c, x_t):
    """The surviving pairs' relative propagation phase is the fringe phase."""
    pair_11 = g1_pair(setup, 1, 1, x_c, x_t)
    pair_22 = g1_pair(setup, 2, 2, x_c, x_t)
    if abs(pair_11.envelope) < 1e-12 or abs(pair_22.envelope) < 1e-12:
        return  # a sinc zero leaves no phase to compare
    # divide out the (signed) envelopes to isolate the propagation phases
    got = cmath.phase((pair_22.value / pair_22.envelope) * (pair_11.value / pair_11.envelope).conjugate())
    want = wrap_angle(phase_phi_basic(setup, x_c, x_t))
    assert cmath.exp(1j * got) == pytest.approx(cmath.exp(1j * want), abs=1e-7)


@given(setup_strategy, detector, detector)
@settings(max_examples=100)
def test_pair_value_consistent_with_phase_field(setup, x_c, x_t):
    pair = g1_pair(setup, 2, 1, x_c, x_t)
    assert pair.value == pytest.approx(pair.envelope * cmath.exp(1j * pair.phase), abs=1e-9)


def test_g1_pair_rejects_bad_index():
    with pytest.raises(ValueError, match="must be 1 or 2"):
        g1_pair(two_path_setup(), 3, 1, 0.0, 0.0)


@given(detector, detector, st.floats(min_value=0.25, max_value=4.0))
def test_phase_scales_linearly_with_frequency(x_c, x_t, factor):
    setup = two_path_setup(offset=1e-5)
    scaled = SetupBasic(
        a=setup.a, wavelength=setup.wavelength / factor, z=setup.z, f=setup.f,
        x1=setup.x1, x2=setup.x2, x1p=setup.x1p, x2p=setup.x2p,
    )
    assert phase_phi_basic(scaled, x_c, x_t) == pytest.approx(
        factor * phase_phi_basic(setup, x_c, x_t), rel=1e-12
    )


# ---------------------------------------------------------------------------
# Regime bookkeeping
# ---------------------------------------------------------------------------


def test_separation_ratios_keys_and_values():
    ratios = separation_ratios(two_path_setup(ratio=20.0))
    assert ratios["within_11p"] == pytest.approx(0.0, abs=1e-12)
    assert ratios["within_22p"] == pytest.approx(0.0, abs=1e-12)
    assert ratios["cross_12p"] == pytest.approx(20.0, rel=1e-12)
    assert ratios["cross_21p"] == pytest.approx(20.0, rel=1e-12)


def test_check_pair_conditions_clean_and_violated():
    assert check_pair_conditions(two_path_setup(ratio=20.0)) == []
    bad = two_path_setup(ratio=2.0, offset=2e-4)
    problems = check_pair_conditions(bad)
    assert any("cross" in p for p in problems)
    assert any("within" in p for p in problems)


def test_asymptotic_mode_warns_on_bad_geometry():
    bad = two_path_setup(ratio=2.0)
    with pytest.warns(ConditionWarning, match="cross"):
        dn_corr_basic(bad, 0.0, 0.0, mode="asymptotic")


def test_asymptotic_mode_silent_on_good_geometry():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dn_corr_basic(two_path_setup(ratio=20.0), 0.0, 0.0, mode="asymptotic")


# ---------------------------------------------------------------------------
# Correlation values
# ---------------------------------------------------------------------------


def test_asymptotic_is_two_path_fringe_law():
    setup = two_path_setup()
    for x_c in (0.0, 1.3e-5, 2.7e-5):
        phi = phase_phi_basic(setup, x_c, 0.0)
        assert dn_corr_basic(setup, x_c, 0.0, mode="asymptotic") == pytest.approx(
            2.0 + 2.0 * math.cos(phi), rel=1e-12
        )


def test_mode_validation():
    with pytest.raises(ValueError, match="mode"):
        dn_corr_basic(two_path_setup(), 0.0, 0.0, mode="montecarlo")


@given(setup_strategy, detector, detector)
@settings(max_examples=200)
def test_exact_value_bounded(setup, x_c, x_t):
    value = dn_corr_basic(setup, x_c, x_t, mode="exact")
    assert 0.0 <= value <= 4.0 + 1e-9, f"correlation {value} outside [0, 4]"


@given(setup_strategy, detector, detector)
@settings(max_examples=100)
def test_exact_symmetric_under_arm_swap(setup, x_c, x_t):
    """Swapping the two arms (pinholes and detectors together) changes nothing."""
    swapped = SetupBasic(
        a=setup.a, wavelength=setup.wavelength, z=setup.z, f=setup.f,
        x1=setup.x1p, x2=setup.x2p, x1p=setup.x1, x2p=setup.x2,
    )
    lhs = dn_corr_basic(setup, x_c, x_t, mode="exact")
    rhs = dn_corr_basic(swapped, x_t, x_c, mode="exact")
    assert abs(lhs - rhs) < 1e-10 + 1e-9 * abs(lhs)


@given(
    setup_strategy,
    detector,
    detector,
    st.floats(min_value=-math.pi, max_value=math.pi),
    st.floats(min_value=-math.pi, max_value=math.pi),
)
@settings(max_examples=100)
def test_arm_phase_gauge_invariance(setup, x_c, x_t, gamma_c, gamma_t):
    """A common phase on all paths of an arm cancels in the correlation."""
    values = {}
    envelopes = {}
    gauge = cmath.exp(1j * (gamma_t - gamma_c))
    for i, j in ((1, 1), (2, 2), (1, 2), (2, 1)):
        pair = g1_pair(setup, i, j, x_c, x_t)
        values[(i, j)] = gauge * pair.value
        envelopes[(i, j)] = pair.envelope
    direct = dn_corr_basic(setup, x_c, x_t, mode="exact")
    assert four_pair_sum(values, envelopes) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_fully_coherent_point_reaches_four():
    # all four pinholes coincide: every envelope is 1 and every phase equal
    setup = SetupBasic(a=1e-4, wavelength=500e-9, z=1.0, f=1.0, x1=0, x2=0, x1p=0, x2p=0)
    assert dn_corr_basic(setup, 0.0, 0.0, mode="exact") == pytest.approx(4.0, rel=1e-12)


def test_four_pair_sum_with_no_coherence_is_zero():
    pairs = ((1, 1), (2, 2), (1, 2), (2, 1))
    values = {pair: 0.0 + 0.0j for pair in pairs}
    envelopes = {pair: 0.0 for pair in pairs}
    assert four_pair_sum(values, envelopes) == 0.0


@given(
    st.integers(min_value=5, max_value=20),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=-5e-3, max_value=5e-3),
)
@settings(max_examples=100)
def test_cross_pair_envelopes_bounded(n, slack_a, slack_b, center):
    """Cross separations of at least N*l_coh keep both cross envelopes below 1/(N*pi)."""
    l_coh = 5e-4
    setup = SetupBasic(
        a=0.5e-3, wavelength=500e-9, z=1.0, f=1.0,
        x1=0.0, x2p=n * l_coh * (1.0 + slack_a),
        x2=center, x1p=center + n * l_coh * (1.0 + slack_b),
    )
    env_12 = abs(g1_pair(setup, 1, 2, 0.0, 0.0).envelope)
    env_21 = abs(g1_pair(setup, 2, 1, 0.0, 0.0).envelope)
    bound = 2.0 / (n * math.pi)
    assert env_12 + env_21 <= bound * (1.0 + 1e-12), (
        f"cross envelopes {env_12 + env_21} exceed {bound} at N={n}"
    )


def test_two_path_visibility_at_ratio_twenty():
    setup = two_path_setup(ratio=20.0, offset=2.5e-5)
    period = fringe_period_xc(setup)
    grid = make_grid("x_C", 0.0, period, period / 80.0)
    exact = evaluate_pattern(setup, grid, "exact")
    asymptotic = evaluate_pattern(setup, grid, "asymptotic")
    assert pattern_visibility(asymptotic.values) >= 0.99
    assert pattern_visibility(exact.values) >= 0.95


def test_exact_matches_asymptotic_at_ratio_twenty():
    """Within 1% of the peak when the regime conditions hold."""
    setup = two_path_setup(ratio=20.0, offset=2.5e-5)
    period = fringe_period_xc(setup)
    grid = make_grid("x_C", 0.0, period, period / 80.0)
    exact = evaluate_pattern(setup, grid, "exact")
    asymptotic = evaluate_pattern(setup, grid, "asymptotic")
    worst = float(np.max(np.abs(exact.values - asymptotic.values)))
    assert worst <= 0.01 * 4.0, f"exact deviates from two-path law by {worst}"


def test_exact_converges_to_asymptotic_in_separation_ratio():
    """Worst-case disagreement shrinks like the residual cross envelopes.

    Odd half-integer separation ratios leak a negative cross envelope, the
    adversarial case: it enters both the interference sum and its
    normalization, so the pattern error approaches sixteen times the
    single-envelope bound instead of cancelling.
    """
    worsts = []
    for n in (11, 21, 41):
        setup = two_path_setup(ratio=n + 0.5)
        period = fringe_period_xc(setup)
        grid = make_grid("x_C", 0.0, period, period / 80.0)
        exact = evaluate_pattern(setup, grid, "exact")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            asymptotic = evaluate_pattern(setup, grid, "asymptotic")
        worst = float(np.max(np.abs(exact.values - asymptotic.values))) / 4.0
        assert worst <= 4.0 / (n * math.pi), f"relative error {worst} too large at N={n}"
        worsts.append(worst)
    assert worsts[0] > worsts[1] > worsts[2], f"error not decreasing: {worsts}"


# ---------------------------------------------------------------------------
# Pattern container and helpers
# ---------------------------------------------------------------------------


def test_pattern_validation():
    grid = np.array([[0.0, 0.0], [1.0, 1.0]])
    CorrelationPattern(grid=grid, values=np.array([1.0, 2.0]), mode="exact")
    with pytest.raises(ValueError, match="mode"):
        CorrelationPattern(grid=grid, values=np.array([1.0, 2.0]), mode="closed-form")
    with pytest.raises(ValueError, match="shape"):
        CorrelationPattern(grid=np.zeros(3), values=np.array([1.0]), mode="exact")
    with pytest.raises(ValueError, match="does not match"):
        CorrelationPattern(grid=grid, values=np.array([1.0]), mode="exact")
    with pytest.raises(ValueError, match="nonnegative"):
        CorrelationPattern(grid=grid, values=np.array([1.0, -0.5]), mode="exact")
    with pytest.raises(ValueError, match="stderr"):
        CorrelationPattern(
            grid=grid, values=np.array([1.0, 2.0]), mode="monte-carlo",
            stderr=np.array([0.1]),
        )


def test_pattern_axis_accessors():
    grid = np.array([[1.0, 2.0], [3.0, 4.0]])
    pattern = CorrelationPattern(grid=grid, values=np.array([0.0, 1.0]), mode="exact")
    assert pattern.x_c.tolist() == [1.0, 3.0]
    assert pattern.x_t.tolist() == [2.0, 4.0]


def test_pattern_visibility_values():
    assert pattern_visibility(np.array([4.0, 0.0])) == 1.0
    assert pattern_visibility(np.array([3.0, 1.0])) == pytest.approx(0.5)
    assert pattern_visibility(np.array([2.0, 2.0])) == 0.0
    assert pattern_visibility(np.zeros(3)) == 0.0


def test_make_grid_axes():
    grid = make_grid("x_C", -1e-4, 1e-4, 5e-5, fixed=3e-5)
    assert grid.shape == (5, 2)
    assert np.allclose(grid[:, 1], 3e-5)
    grid = make_grid("x_T", 0.0, 1e-4, 5e-5, fixed=-2e-5)
    assert np.allclose(grid[:, 0], -2e-5)
    grid = make_grid("diagonal", 0.0, 1e-4, 5e-5)
    assert np.allclose(grid[:, 0], grid[:, 1])


def test_make_grid_includes_endpoints():
    grid = make_grid("diagonal", 0.0, 1.0, 0.1)
    assert grid.shape[0] == 11
    assert grid[0, 0] == 0.0
    assert grid[-1, 0] == pytest.approx(1.0)


def test_make_grid_validation():
    with pytest.raises(ValueError, match="axis"):
        make_grid("x_D", 0.0, 1.0, 0.1)
    with pytest.raises(ValueError, match="step"):
        make_grid("x_C", 0.0, 1.0, 0.0)
    with pytest.raises(ValueError, match="below start"):
        make_grid("x_C", 1.0, 0.0, 0.1)


def test_evaluate_pattern_modes_match_pointwise():
    setup = two_path_setup()
    grid = make_grid("x_C", 0.0, 5e-5, 1e-5)
    pattern = evaluate_pattern(setup, grid, "exact")
    for (x_c, x_t), value in zip(pattern.grid, pattern.values):
        assert value == dn_corr_basic(setup, x_c, x_t, mode="exact")
