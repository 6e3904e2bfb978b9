import math

import numpy as np
import pytest
from scipy.integrate import quad

from duopoly_invest.errors import (
    QuadratureNotConvergedError,
    TooCloseToBoundaryError,
    ZeroCapacityError,
)
from duopoly_invest.model import derive_params
from duopoly_invest.values import (
    AbstainValue,
    DynamicValue,
    PerturbedValue,
    QuadratureSettings,
    SoleInvestorValue,
)

GOLDEN_STATE_VALUE = 0.7818953180863912  # p*/(r-mu) * (1/2 - (1/2)**beta / beta)


@pytest.fixture(scope="module")
def golden():
    return derive_params(1.0, 0.0, math.sqrt(2.0), 1.5)


@pytest.fixture(scope="module")
def state_grid(golden):
    rng = np.random.default_rng(17)
    states = []
    for _ in range(120):
        q_i = rng.uniform(0.02, 4.0)
        q_mi = rng.uniform(0.02, 4.0)
        x = rng.uniform(0.05, 1.6) * golden.p_star * (q_i + q_mi) ** (1 / golden.gamma)
        states.append((x, q_i, q_mi))
    return states


# ---------------------------------------------------------------------------
# abstain value
# ---------------------------------------------------------------------------

def test_abstain_boundary_value(golden):
    # at the trigger the value is p (beta-1) q_i / ((r-mu) beta); q_i at p = p*
    for p in (0.7 * golden.p_star, golden.p_star, 1.3 * golden.p_star):
        fn = AbstainValue(golden, p)
        q_i, q_mi = 1.7, 0.4
        xb = p * (q_i + q_mi) ** (1 / golden.gamma)
        expected = p / (golden.r - golden.mu) * (golden.beta - 1) / golden.beta * q_i
        assert fn.value(xb, q_i, q_mi) == pytest.approx(expected, rel=1e-12)
    fn = AbstainValue(golden, golden.p_star)
    xb = golden.p_star * 2.0 ** (1 / golden.gamma)
    assert fn.value(xb, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)


def test_abstain_golden_state(golden):
    fn = AbstainValue(golden, golden.p_star)
    x = golden.p_star * 2.0 ** (1 / golden.gamma) / 2.0  # price p*/2 at (1, 1)
    assert fn.value(x, 1.0, 1.0) == pytest.approx(GOLDEN_STATE_VALUE, rel=1e-12)


def test_abstain_vanishes_linearly(golden):
    fn = AbstainValue(golden, golden.p_star)
    small = fn.value(1e-9, 1.0, 1.0)
    assert small == pytest.approx(1e-9 * fn.value_x(1e-12, 1.0, 1.0), rel=1e-3)
    assert fn.value(1e-12, 1.0, 1.0) < 1e-11


def test_abstain_own_derivative_above_boundary(golden):
    fn = AbstainValue(golden, 1.2 * golden.p_star)
    q_i, q_mi = 0.8, 1.1
    xb = fn.opponent_boundary.trigger(q_i, q_mi)
    for x in (xb, 1.5 * xb, 4 * xb):
        assert fn.partials(x, q_i, q_mi, ("qi",))["qi"] == pytest.approx(1.2, rel=1e-12)


def test_abstain_own_derivative_increasing_in_x(golden):
    fn = AbstainValue(golden, golden.p_star)
    q_i, q_mi = 1.3, 0.7
    xb = fn.opponent_boundary.trigger(q_i, q_mi)
    xs = np.linspace(0.05, 1.0, 40) * xb
    d = [fn.partials(float(x), q_i, q_mi, ("qi",))["qi"] for x in xs]
    assert all(a < b for a, b in zip(d, d[1:]))


# ---------------------------------------------------------------------------
# sole-investor value
# ---------------------------------------------------------------------------

def test_investor_opponent_coefficient_zero_at_p_star(golden):
    fn = SoleInvestorValue(golden, golden.p_star)
    assert fn.k_opp == pytest.approx(0.0, abs=1e-14)


def test_investor_equals_abstain_at_p_star(golden, state_grid):
    va = AbstainValue(golden, golden.p_star)
    vi = SoleInvestorValue(golden, golden.p_star)
    for x, q_i, q_mi in state_grid:
        a, b = va.value(x, q_i, q_mi), vi.value(x, q_i, q_mi)
        assert abs(a - b) <= 1e-10 * max(abs(a), abs(b), 1e-12)


def test_investor_exceeds_abstain_above_p_star(golden):
    p = 1.1 * golden.p_star
    va, vi = AbstainValue(golden, p), SoleInvestorValue(golden, p)
    rng = np.random.default_rng(23)
    for _ in range(50):
        q_i, q_mi = rng.uniform(0.05, 3.0, size=2)
        x = rng.uniform(0.1, 1.0) * p * (q_i + q_mi) ** (1 / golden.gamma)
        assert vi.value(x, q_i, q_mi) > va.value(x, q_i, q_mi)


def test_value_gap_sign_tracks_threshold(golden):
    """sign(investor - abstain) = sign(p - p*) off the boundary."""
    rng = np.random.default_rng(29)
    for fac in (0.8, 0.9, 1.1, 1.2):
        p = fac * golden.p_star
        va, vi = AbstainValue(golden, p), SoleInvestorValue(golden, p)
        for _ in range(25):
            q_i, q_mi = rng.uniform(0.05, 3.0, size=2)
            x = rng.uniform(0.1, 2.0) * p * (q_i + q_mi) ** (1 / golden.gamma)
            gap = vi.value(x, q_i, q_mi) - va.value(x, q_i, q_mi)
            assert math.copysign(1.0, gap) == math.copysign(1.0, fac - 1.0)


def test_investor_smooth_fit(golden):
    fn = SoleInvestorValue(golden, 1.15 * golden.p_star)
    q_i, q_mi = 0.9, 1.4
    xb = fn.own_boundary.trigger(q_i, q_mi)
    assert fn.partials(xb, q_i, q_mi, ("qi",))["qi"] == pytest.approx(1.0, abs=1e-12)
    assert fn.partials(1.7 * xb, q_i, q_mi, ("qi",))["qi"] == 1.0


def test_fd_matches_analytic_partials(golden):
    """Cross-check the closed-form q-derivatives with the generic stencil."""
    from duopoly_invest.values import ValueFunction

    fn = SoleInvestorValue(golden, 1.1 * golden.p_star)
    rng = np.random.default_rng(31)
    for _ in range(40):
        q_i, q_mi = rng.uniform(0.3, 3.0, size=2)
        x = rng.uniform(0.1, 0.9) * fn.own_boundary.trigger(q_i, q_mi)
        fd_own = ValueFunction._fd(fn, x, q_i, q_mi, own=True, boundary_mode="error")
        fd_opp = ValueFunction._fd(fn, x, q_i, q_mi, own=False, boundary_mode="error")
        assert fd_own == pytest.approx(fn.partials(x, q_i, q_mi, ("qi",))["qi"], abs=1e-6)
        assert fd_opp == pytest.approx(fn.partials(x, q_i, q_mi, ("qmi",))["qmi"], abs=1e-6)


def test_power_rule_second_derivative(golden):
    fn = SoleInvestorValue(golden, golden.p_star)
    q_i, q_mi = 1.2, 0.8
    x = 0.5 * fn.own_boundary.trigger(q_i, q_mi)
    P = (q_i + q_mi) ** (-1 / golden.gamma)
    btil = fn._btil(q_i, q_mi)
    expected = btil * golden.beta * (golden.beta - 1) \
        * (x * P / fn.p) ** (golden.beta - 2) * (P / fn.p) ** 2
    assert fn.value_xx(x, q_i, q_mi) == pytest.approx(expected, rel=1e-12)


def test_pde_identity_analytic_kinds(golden, state_grid):
    for fn in (AbstainValue(golden, golden.p_star),
               SoleInvestorValue(golden, 1.2 * golden.p_star)):
        for x, q_i, q_mi in state_grid:
            xb = fn.opponent_boundary.trigger(q_i, q_mi) if fn.kind == "abstain" \
                else fn.own_boundary.trigger(q_i, q_mi)
            if x > xb:
                continue
            v = fn.value(x, q_i, q_mi)
            vx = fn.value_x(x, q_i, q_mi)
            vxx = fn.value_xx(x, q_i, q_mi)
            pi = golden.profit_flow(x, q_i, q_mi)
            resid = -golden.r * v + pi + golden.mu * x * vx \
                + 0.5 * golden.sigma ** 2 * x ** 2 * vxx
            assert abs(resid) / (golden.r * abs(v) + 1.0) < 1e-9


# ---------------------------------------------------------------------------
# dynamic (capital-dependent) value
# ---------------------------------------------------------------------------

def test_dynamic_c0_reduces_to_abstain(golden):
    fn = DynamicValue(golden, 0.0)
    va = AbstainValue(golden, golden.p_star)
    rng = np.random.default_rng(37)
    for _ in range(60):
        q_i, q_mi = rng.uniform(0.05, 4.0, size=2)
        x = rng.uniform(0.05, 1.0) * fn.boundary.trigger(q_i, q_mi)
        assert fn.value(x, q_i, q_mi) == pytest.approx(
            va.value(x, q_i, q_mi), abs=1e-8, rel=1e-8)


def test_dynamic_b_against_scipy_oracle(golden):
    """Independent quadrature route: scipy QAGS on a compactified domain."""
    fn = DynamicValue(golden, 1.0)
    pr = golden

    def integrand(q, q_mi):
        s = q + q_mi
        xbar = (pr.p_star + 1.0 / max(q, q_mi)) * s ** (1 / pr.gamma)
        mr = s ** (-1 / pr.gamma - 1) * ((pr.gamma - 1) / pr.gamma * q + q_mi)
        return (1 - xbar * mr / (pr.r - pr.mu)) * xbar ** (-pr.beta)

    for (q_i, q_mi) in [(1.0, 1.0), (0.8, 1.5), (2.5, 0.9), (1.2, 1.2)]:
        s0 = q_i + q_mi

        def transformed(t):
            q = q_i + s0 * t / (1.0 - t)
            return integrand(q, q_mi) * s0 / (1.0 - t) ** 2

        ref = 0.0
        kink = (q_mi - q_i) / (q_mi - q_i + s0) if q_mi > q_i else None
        pieces = [0.0] + ([kink] if kink else []) + [1.0]
        for a, b in zip(pieces, pieces[1:]):
            val, _ = quad(transformed, a, b, limit=300)
            ref += val
        assert fn.B(q_i, q_mi) == pytest.approx(-ref, rel=2e-6)


def test_dynamic_b_linear_bound(golden):
    for c in (0.0, 0.5, 1.0):
        fn = DynamicValue(golden, c)
        floor = fn.q_floor
        rng = np.random.default_rng(41)
        for _ in range(40):
            q_i = rng.uniform(max(floor, 0.05), 5.0)
            q_mi = rng.uniform(max(floor, 0.05), 5.0)
            assert abs(fn.B(q_i, q_mi)) <= fn.b_linear_bound(q_i, q_mi) * (1 + 1e-9)


def test_dynamic_smooth_fit_own(golden):
    fn = DynamicValue(golden, 1.0)
    for (q_i, q_mi) in [(1.0, 0.9), (0.9, 1.3), (fn.q_floor, fn.q_floor), (2.2, 2.2)]:
        xb = fn.boundary.trigger(q_i, q_mi)
        d = fn.partials(xb, q_i, q_mi, ("qi",), boundary_mode="allow")["qi"]
        assert d == pytest.approx(1.0, abs=1e-6)


def test_dynamic_opponent_derivative_zero_when_bigger(golden):
    fn = DynamicValue(golden, 1.0)
    for (q_i, q_mi) in [(1.0, 0.9), (2.0, 1.0), (1.5, 1.5)]:
        xb = fn.boundary.trigger(q_i, q_mi)
        d = fn.partials(xb, q_i, q_mi, ("qmi",), boundary_mode="allow")["qmi"]
        assert d == pytest.approx(0.0, abs=1e-6)


def test_branch_continuity_all_kinds(golden):
    """Value and x-derivative paste continuously across the trigger."""
    fns = [AbstainValue(golden, golden.p_star),
           SoleInvestorValue(golden, 1.1 * golden.p_star),
           DynamicValue(golden, 0.5)]
    for fn in fns:
        if fn.kind == "abstain":
            trig = fn.opponent_boundary.trigger
        elif fn.kind == "sole_investor":
            trig = fn.own_boundary.trigger
        else:
            trig = fn.boundary.trigger
        q_i = max(1.1, getattr(fn, "q_floor", 0.0) + 0.3)
        q_mi = q_i + 0.2
        xb = trig(q_i, q_mi)
        slope = abs(fn.value_x(0.999 * xb, q_i, q_mi)) * xb
        for eps in (1e-7, 1e-9):
            below = fn.value(xb * (1 - eps), q_i, q_mi)
            above = fn.value(xb * (1 + eps), q_i, q_mi)
            assert abs(above - below) <= 1e-9 * (1 + abs(below)) + 3 * eps * slope
            dbelow = fn.value_x(xb * (1 - eps), q_i, q_mi)
            dabove = fn.value_x(xb * (1 + eps), q_i, q_mi)
            assert abs(dabove - dbelow) <= 1e-6 * (1 + abs(dbelow))


def test_dynamic_quadrature_rejects_near_critical():
    """Close to the integrability edge the certified truncation point
    overflows and the quadrature refuses rather than silently truncating."""
    pp = derive_params(1.0, 0.16, math.sqrt(2.0), 1.5)  # beta/gamma ~ 1.003
    fn = DynamicValue(pp, 0.5)
    with pytest.raises(QuadratureNotConvergedError):
        fn.B(1.0, 1.0)


def test_dynamic_zero_capacity(golden):
    fn = DynamicValue(golden, 0.0)
    with pytest.raises(ZeroCapacityError):
        fn.B(0.0, 0.0)
    with pytest.raises(ZeroCapacityError):
        fn.value(1.0, 0.0, 0.0)


def test_partials_straddle_guard(golden):
    fn = DynamicValue(golden, 1.0)
    q_i, q_mi = 1.0, 1.1
    xb = fn.boundary.trigger(q_i, q_mi)
    with pytest.raises(TooCloseToBoundaryError):
        fn.partials(xb, q_i, q_mi, ("qi",), boundary_mode="error")
    # and the explicit opt-in works
    fn.partials(xb, q_i, q_mi, ("qi",), boundary_mode="allow")


def test_perturbed_value_channel_only(golden):
    base = DynamicValue(golden, 0.5)
    bad = PerturbedValue(base, 1.01)
    q_i, q_mi = 1.0, 1.2
    x = 0.6 * base.boundary.trigger(q_i, q_mi)
    assert bad.value(x, q_i, q_mi) != base.value(x, q_i, q_mi)
    assert bad.value_x(x, q_i, q_mi) == base.value_x(x, q_i, q_mi)


def test_quadrature_settings_respected(golden):
    loose = DynamicValue(golden, 1.0, QuadratureSettings(rel_tol=1e-6, tail_rel_tol=1e-8))
    tight = DynamicValue(golden, 1.0)
    assert loose.B(1.0, 1.0) == pytest.approx(tight.B(1.0, 1.0), rel=1e-6)
