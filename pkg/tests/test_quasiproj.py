"""Tests for the quasi-projection engine.

Oracle strategy:
  * hand-computable pairs (indicator / hat) give exact closed forms;
  * dual routes: analytic built-ins (Sgn/Monomial) vs generic quadrature of
    the same signal must agree to near machine precision whenever the
    quadrature is exact (polynomial integrands on dyadic grids);
  * operator identities (dyadic scaling, shift periodicity, support locality)
    are checked as exact index-aligned array equalities.
"""

import math

import numpy as np
import pytest

from gibbslab.catalog import resolve_pair
from gibbslab.errors import DimensionMismatchError, PreconditionError
from gibbslab.funcmodel import PiecewisePoly, bspline
from gibbslab.quasiproj import (
    GridSpec,
    Monomial,
    QuasiProjectionPair,
    Sgn,
    accuracy_order,
    apply,
    approximation_rate,
    check_qp1,
    kernel_K,
    kernel_criterion,
    poly_reproduction,
)


@pytest.fixture(scope="module")
def haar():
    return resolve_pair("haar")


@pytest.fixture(scope="module")
def b2():
    return resolve_pair("bspline:2")


@pytest.fixture(scope="module")
def b3():
    return resolve_pair("bspline:3")


@pytest.fixture(scope="module")
def d2():
    return resolve_pair("daubechies:2")


@pytest.fixture(scope="module")
def d3():
    return resolve_pair("daubechies:3")


# -- grids ------------------------------------------------------------------


def test_gridspec_snaps_to_dyadic_points():
    i0, xs = GridSpec(3, 0.1, 0.9).resolve(-1.0, 1.0)
    assert i0 == 0
    assert xs[0] == 0.0 and xs[-1] == 1.0
    assert np.allclose(np.diff(xs), 0.125)


def test_gridspec_defaults_come_from_caller():
    _, xs = GridSpec(2).resolve(-1.5, 0.75)
    assert xs[0] == -1.5 and xs[-1] == 0.75


def test_gridspec_rejects_bad_level_and_empty_window():
    with pytest.raises(PreconditionError):
        GridSpec(17).resolve(0.0, 1.0)
    with pytest.raises(PreconditionError):
        GridSpec(8, 2.0, -2.0).resolve(0.0, 1.0)


# -- pair bookkeeping ---------------------------------------------------------


def test_support_bound_is_integer_radius(haar, b3):
    assert haar.support_bound == 1
    assert b3.support_bound == 3
    assert resolve_pair("bspline:2").support_bound == 2


def test_component_mismatch_rejected():
    two = PiecewisePoly([0.0, 1.0], np.ones((1, 2, 1)))
    with pytest.raises(DimensionMismatchError):
        QuasiProjectionPair(bspline(1), two)


def test_swapped_exchanges_roles(b2):
    pair = QuasiProjectionPair(bspline(2), bspline(3))
    sw = pair.swapped()
    assert sw.phi is pair.phi_tilde and sw.phi_tilde is pair.phi


def test_pair_json_roundtrip(b2):
    pair2 = QuasiProjectionPair.from_json_dict(b2.to_json_dict())
    a = apply(b2, Sgn(0.0), 0, 0.0, GridSpec(6, -6, 6))
    b = apply(pair2, Sgn(0.0), 0, 0.0, GridSpec(6, -6, 6))
    assert np.array_equal(a.values, b.values)


# -- sign signal --------------------------------------------------------------


def test_haar_reproduces_sign_everywhere(haar):
    sf = apply(haar, Sgn(0.0), 0, 0.0, GridSpec(8, -4, 4))
    xs, v = sf.xs(), sf.values[:, 0]
    # on the jump cell the output is the cell value; half-open pieces put
    # x = 0 with the positive side
    expect = np.where(xs >= 0, 1.0, -1.0)
    assert np.max(np.abs(v - expect)) == 0.0


def test_hat_pair_sign_is_exact_outside_interaction_zone(b2):
    sf = apply(b2, Sgn(0.0), 0, 0.0, GridSpec(8, -8, 8))
    xs, v = sf.xs(), sf.values[:, 0]
    far = np.abs(xs) >= 5.0
    assert np.max(np.abs(v[far] - np.sign(xs[far]))) < 1e-12


def test_sign_window_must_cover_interaction_zone(b2):
    with pytest.raises(PreconditionError, match="interaction zone"):
        apply(b2, Sgn(0.0), 0, 0.0, GridSpec(10, -3.0, 6.0))


def test_shifted_sign_center_moves_zone(b2):
    sf = apply(b2, Sgn(2.0), 0, 0.0, GridSpec(8, -4, 8))
    xs, v = sf.xs(), sf.values[:, 0]
    far = np.abs(xs - 2.0) >= 5.0
    assert np.max(np.abs(v[far] - np.sign(xs[far] - 2.0))) < 1e-12


def test_rejects_negative_scale_level(b2):
    with pytest.raises(PreconditionError):
        apply(b2, Sgn(0.0), -1, 0.0, GridSpec(8, -8, 8))


def test_dyadic_scaling_identity(b2):
    """Level-n output at x equals level-0 output at 2^n x, index-aligned."""
    fine = apply(b2, Sgn(0.0), 2, 0.0, GridSpec(12, -2.0, 2.0))
    coarse = apply(b2, Sgn(0.0), 0, 0.0, GridSpec(10, -8.0, 8.0))
    assert fine.values.shape == coarse.values.shape
    assert np.max(np.abs(fine.values - coarse.values)) < 1e-12


def test_shift_periodicity_in_t(b2):
    a = apply(b2, Sgn(0.0), 0, 0.3, GridSpec(8, -8, 8))
    b = apply(b2, Sgn(0.0), 0, 1.3, GridSpec(8, -8, 8))
    assert np.max(np.abs(a.values - b.values)) < 1e-10


@pytest.mark.parametrize("c", [0.25, 1.0 / 3.0])
def test_shifted_pair_route_matches_t_parameter(b2, c):
    """Q with shift parameter t = c equals the operator of the c-shifted pair."""
    direct = apply(b2, Sgn(0.0), 0, c, GridSpec(9, -8, 8))
    shifted = apply(b2.shifted(c), Sgn(0.0), 0, 0.0, GridSpec(9, -8, 8))
    assert np.max(np.abs(direct.values - shifted.values)) < 1e-12


def test_small_t_perturbation_moves_output_little(b2):
    a = apply(b2, Sgn(0.0), 0, 0.0, GridSpec(9, -8, 8))
    b = apply(b2, Sgn(0.0), 0, 1e-3, GridSpec(9, -8, 8))
    assert np.max(np.abs(a.values - b.values)) < 0.05


def test_sign_coefficients_match_quadrature_route(b3):
    """Sgn tail-integral coefficients vs brute-force quadrature of sgn."""
    analytic = apply(b3, Sgn(0.25), 0, 0.1, GridSpec(7, -8, 8))
    sgn = lambda x: np.where(x - 0.25 >= 0, 1.0, -1.0)
    quad = apply(b3, sgn, 0, 0.1, GridSpec(7, -8, 8))
    # the jump sits inside one Simpson panel of width 2^-11, so the
    # quadrature route carries an O(h) error ~2e-5; the analytic route is exact
    assert np.max(np.abs(analytic.values - quad.values)) < 1e-4


# -- polynomial signals --------------------------------------------------------


def test_constant_reproduced(b2, b3, d2):
    for pair in (b2, b3, d2):
        res = poly_reproduction(pair, 1)
        assert res[0] < 1e-9


def test_hat_pair_reproduces_linears_exactly(b2):
    res = poly_reproduction(b2, 2)
    assert res[1] < 1e-12


def test_hat_pair_degree_two_residual_value(b2):
    # Q x^2 - x^2 = (piecewise-linear interpolant of x^2 at the integers
    # minus x^2) + second-moment excess = 1/4 at half-integers + 1/6
    res = poly_reproduction(b2, 3, GridSpec(8, -6, 6))
    assert res[2] == pytest.approx(5.0 / 12.0, abs=1e-10)


def test_monomial_route_with_shift(b2):
    sf = apply(b2, Monomial(1), 0, 0.3, GridSpec(8, -6, 6))
    assert np.max(np.abs(sf.values[:, 0] - sf.xs())) < 1e-12


def test_monomial_rejects_negative_degree(b2):
    with pytest.raises(PreconditionError):
        apply(b2, Monomial(-1), 0, 0.0, GridSpec(8, -6, 6))


@pytest.mark.parametrize(
    "spec,expected",
    [("haar", 1), ("bspline:2", 2), ("bspline:3", 2), ("daubechies:2", 2), ("daubechies:3", 3)],
)
def test_accuracy_orders(spec, expected):
    pair = resolve_pair(spec)
    assert accuracy_order(pair, m_max=4, tol=1e-8, grid=GridSpec(10)) == expected


def test_monomial_coefficients_match_quadrature_route(b2):
    """Moment-expansion coefficients vs Simpson quadrature of x -> x^2.

    The integrand is a cubic against the dyadic grid, so composite Simpson
    is exact and the two routes must agree to rounding.
    """
    analytic = apply(b2, Monomial(2), 1, 0.2, GridSpec(7, -6, 6))
    quad = apply(b2, lambda x: x**2, 1, 0.2, GridSpec(7, -6, 6))
    assert np.max(np.abs(analytic.values - quad.values)) < 1e-10


# -- function-handle signals ---------------------------------------------------


def test_piecewise_signal_exact_route_matches_quadrature(b2):
    f = bspline(3)
    exact = apply(b2, f, 0, 0.0, GridSpec(7, -6, 6))
    quad = apply(b2, lambda x: f.evaluate(x)[:, 0], 0, 0.0, GridSpec(7, -6, 6))
    assert np.max(np.abs(exact.values - quad.values)) < 1e-10


def test_projection_onto_own_span_haar(haar):
    """Indicator pair projects piecewise constants on integer cells onto
    themselves."""
    f = PiecewisePoly([-2.0, -1.0, 0.0, 1.0, 2.0], [[[2.0]], [[-1.0]], [[0.5]], [[3.0]]])
    sf = apply(haar, f, 0, 0.0, GridSpec(8, -4, 4))
    xs = sf.xs()
    assert np.max(np.abs(sf.values[:, 0] - f.evaluate(xs)[:, 0])) < 1e-8


def test_vector_signals_rejected(b2):
    two = PiecewisePoly([0.0, 1.0], np.ones((1, 2, 1)))
    with pytest.raises(DimensionMismatchError):
        apply(b2, two, 0, 0.0, GridSpec(6, -6, 6))


# -- operator diagnostics --------------------------------------------------------


def test_check_qp1_clean_pairs(b2, b3, d3):
    for pair in (b2, b3, d3):
        rep = check_qp1(pair)
        assert rep["ok"]
        assert rep["residuals"]["normalization"] < 1e-12
        assert rep["residuals"]["constancy"] < 1e-9


def test_check_qp1_detects_bad_normalization():
    pair = QuasiProjectionPair(bspline(2), 2.0 * bspline(2))
    rep = check_qp1(pair)
    assert not rep["ok"]
    assert rep["residuals"]["normalization"] == pytest.approx(1.0, abs=1e-12)


def test_kernel_values_indicator_pair(haar):
    assert kernel_K(haar, 0.5, 0.5) == pytest.approx(1.0)
    assert kernel_K(haar, 0.5, 1.7) == pytest.approx(0.0)
    assert kernel_K(haar, 1.2, 1.7) == pytest.approx(1.0)


def test_kernel_reproducing_property(b2):
    """sum_k K(x, k') weights reproduce Q f pointwise for a hat signal."""
    f = bspline(2)
    x = 0.7
    # integral K(x, y) f(y) dy by fine quadrature
    ys = np.linspace(-1.0, 4.0, 2001)
    kv = np.array([kernel_K(b2, x, y).real for y in ys])
    integral = np.trapezoid(kv * f.evaluate(ys)[:, 0], ys)
    sf = apply(b2, f, 0, 0.0, GridSpec(10, -2, 4))
    direct = sf.evaluate(np.array([x]))[0, 0]
    assert integral == pytest.approx(direct, abs=5e-6)


def test_kernel_criterion_nonnegative_pairs_pass(haar, b2, b3):
    for pair in (haar, b2, b3):
        rep = kernel_criterion(pair, level=9)
        assert rep["ok"], rep


def test_kernel_criterion_flags_oscillating_duals(d2, d3):
    rep2 = kernel_criterion(d2, level=9)
    assert not rep2["ok"] and rep2["worst_value"] > 1.01
    rep3 = kernel_criterion(d3, level=9)
    assert not rep3["ok"]
    assert rep3["worst_value"] > 1.01 or rep3["worst_value"] < -0.01


# -- convergence rates -----------------------------------------------------------


def test_rate_matches_accuracy_order_haar(haar):
    f = lambda x: np.exp(-4.0 * (x - 0.3) ** 2)
    rate = approximation_rate(haar, f, range(2, 7), level=10)
    assert abs(rate - 1.0) < 0.3


def test_rate_matches_accuracy_order_hat(b2):
    f = lambda x: np.exp(-4.0 * (x - 0.3) ** 2)
    rate = approximation_rate(b2, f, range(2, 7), level=10)
    assert abs(rate - 2.0) < 0.3
