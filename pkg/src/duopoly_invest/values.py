"""Candidate value functions and their partial derivatives.

Three families, each piecewise around the relevant investment trigger and of
the form A(q_i, q_mi) * x + B(q_i, q_mi) * x**beta below it:

  AbstainValue(p)        payoff from never investing while the opponent
                         reflects the price at the constant threshold p
  SoleInvestorValue(p)   payoff from doing all the investment alone at the
                         constant threshold p
  DynamicValue(c)        payoff under the symmetric capital-dependent
                         trigger with premium coefficient c

Above the trigger the first two have explicit continuations; all three use
the smooth-pasting recursion

    V(x, q_i, q_mi) = V(x, phi(x, q_mi), q_mi) - phi(x, q_mi) + q_i

which is evaluated directly against the below-trigger branch (never by
re-dispatching, so floating-point ties at the trigger cannot recurse).

DynamicValue's B coefficient is an improper integral evaluated by panels of
Gauss-Kronrod 15 on a geometric grid anchored at the integrand's kink
q = q_mi, truncated where a closed-form envelope certifies the remaining
tail below 1e-12 * (1 + |B|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundaries import (
    ConstantPriceBoundary,
    DynamicBoundary,
    InfiniteBoundary,
)
from .errors import (
    QuadratureNotConvergedError,
    TooCloseToBoundaryError,
    ZeroCapacityError,
)
from .model import ModelParams

# 15-point Kronrod nodes on [-1, 1] with Kronrod weights and the embedded
# 7-point Gauss weights (zero at Kronrod-only nodes); standard constants.
_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_GK_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_WEIGHTS = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])

_FD_STEP = 1e-5


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-10       # target |error| <= rel_tol * (1 + |B|)
    tail_rel_tol: float = 1e-12  # envelope tail budget, relative to 1 + |B|
    max_splits: int = 8          # refinement rounds before giving up
    s_max: float = 1e300         # largest representable truncation point


def _gk15_panels(f, edges):
    """Integrate f over consecutive [edges[j], edges[j+1]] panels.

    One vectorized call evaluates f at all 15-point node sets; returns the
    per-panel Kronrod integrals and |K15 - G7| error gauges.
    """
    a = edges[:-1]
    half = 0.5 * (edges[1:] - a)
    center = a + half
    nodes = center[:, None] + half[:, None] * _GK_NODES[None, :]
    vals = f(nodes.reshape(-1)).reshape(nodes.shape)
    k15 = (vals * _GK_WEIGHTS).sum(axis=1) * half
    g7 = (vals * _G7_WEIGHTS).sum(axis=1) * half
    return k15, np.abs(k15 - g7)


class ValueFunction:
    """Shared evaluation plumbing; concrete kinds fill in the branch math."""

    params: ModelParams

    # -- branch anatomy supplied by subclasses --------------------------------

    def _own_trigger(self, q_i, q_mi):
        raise NotImplementedError

    def _below(self, x, q_i, q_mi):
        raise NotImplementedError

    def _below_x(self, x, q_i, q_mi):
        raise NotImplementedError

    def _below_xx(self, x, q_i, q_mi):
        raise NotImplementedError

    def _phi(self, x, q_mi):
        raise NotImplementedError

    # -- generic surface ------------------------------------------------------

    def value(self, x, q_i, q_mi):
        if q_i + q_mi <= 0.0:
            raise ZeroCapacityError("value needs positive aggregate capacity")
        if x <= self._own_trigger(q_i, q_mi):
            return self._below(x, q_i, q_mi)
        phi = self._phi(x, q_mi)
        return self._below(x, phi, q_mi) - phi + q_i

    def value_x(self, x, q_i, q_mi):
        if x <= self._own_trigger(q_i, q_mi):
            return self._below_x(x, q_i, q_mi)
        phi = self._phi(x, q_mi)
        return self._below_x(x, phi, q_mi)

    def value_xx(self, x, q_i, q_mi):
        if x <= self._own_trigger(q_i, q_mi):
            return self._below_xx(x, q_i, q_mi)
        raise TooCloseToBoundaryError("second x-derivative is only provided below the trigger")

    def option_term(self, x, q_i, q_mi):
        """x**beta component of the below-trigger branch."""
        raise NotImplementedError

    def partials(self, x, q_i, q_mi, which=("x", "xx", "qi", "qmi"),
                 boundary_mode: str = "error") -> dict:
        """Requested partial derivatives at one state.

        Analytic where the kind has closed forms; finite differences with one
        Richardson level otherwise.  With boundary_mode="error" a stencil
        that would straddle the trigger raises TooCloseToBoundaryError;
        "allow" trusts the built-in value-matching across the trigger (the
        function is C1 there by construction) and differentiates through it.
        """
        if isinstance(which, str):
            which = (which,)
        out = {}
        for key in which:
            if key == "x":
                out[key] = self.value_x(x, q_i, q_mi)
            elif key == "xx":
                out[key] = self.value_xx(x, q_i, q_mi)
            elif key == "qi":
                out[key] = self._d_own(x, q_i, q_mi, boundary_mode)
            elif key == "qmi":
                out[key] = self._d_opp(x, q_i, q_mi, boundary_mode)
            else:
                raise ValueError(f"unknown partial {key!r}")
        return out

    # Default q-derivatives by finite differences; analytic kinds override.

    def _d_own(self, x, q_i, q_mi, boundary_mode):
        return self._fd(x, q_i, q_mi, own=True, boundary_mode=boundary_mode)

    def _d_opp(self, x, q_i, q_mi, boundary_mode):
        return self._fd(x, q_i, q_mi, own=False, boundary_mode=boundary_mode)

    def _fd_floor(self) -> float:
        return 0.0

    def _fd(self, x, q_i, q_mi, own: bool, boundary_mode: str):
        coord = q_i if own else q_mi
        h = _FD_STEP * max(1.0, abs(coord))

        def v(q):
            return self.value(x, q, q_mi) if own else self.value(x, q_i, q)

        floor = self._fd_floor()
        if coord - h < floor:
            # One-sided second-order stencil stays inside the domain.
            def fwd(step):
                return (-3.0 * v(coord) + 4.0 * v(coord + step) - v(coord + 2.0 * step)) \
                    / (2.0 * step)
            return (4.0 * fwd(h / 2.0) - fwd(h)) / 3.0

        if boundary_mode == "error":
            probes = (coord - h, coord + h)
            trig = [self._own_trigger(q, q_mi) if own else self._own_trigger(q_i, q)
                    for q in probes]
            if (x > min(trig)) != (x > max(trig)):
                raise TooCloseToBoundaryError(
                    "finite-difference stencil straddles the trigger; "
                    "pass boundary_mode='allow' to differentiate through it"
                )

        def central(step):
            return (v(coord + step) - v(coord - step)) / (2.0 * step)

        # 2*D(h/2) - D(h) cancels the leading error term of either parity:
        # the O(h) term from a curvature kink at the trigger, and (partially)
        # the O(h^2) term at interior states, where central() is already well
        # inside tolerance.
        return 2.0 * central(h / 2.0) - central(h)


# ---------------------------------------------------------------------------
# Constant-threshold kinds: fully closed form
# ---------------------------------------------------------------------------


class AbstainValue(ValueFunction):
    """Value of never investing while the opponent holds the price at p.

    Below the opponent trigger (price y = x*P/p <= 1):
        V = p/(r-mu) * (y - y**beta / beta) * q_i
    above it the opponent reflects the price at p immediately, so the value
    is the constant annuity p/(r-mu) * (beta-1)/beta * q_i.
    """

    def __init__(self, params: ModelParams, p: float):
        self.params = params
        self.p = p
        self.own_boundary = InfiniteBoundary(params)
        self.opponent_boundary = ConstantPriceBoundary(params, p)

    kind = "abstain"

    def strategy_pair(self):
        return self.own_boundary, self.opponent_boundary

    def _y(self, x, q_i, q_mi):
        if q_i + q_mi <= 0.0:
            raise ZeroCapacityError("value needs positive aggregate capacity")
        return x * (q_i + q_mi) ** (-1.0 / self.params.gamma) / self.p

    # The "own" trigger of the piecewise formula is the opponent's: the
    # abstainer itself never invests.
    def _own_trigger(self, q_i, q_mi):
        return self.opponent_boundary.trigger(q_i, q_mi)

    def _phi(self, x, q_mi):
        raise AssertionError("abstain value has an explicit continuation branch")

    def value(self, x, q_i, q_mi):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        scale = self.p / (pr.r - pr.mu)
        if y <= 1.0:
            return scale * (y - y ** pr.beta / pr.beta) * q_i
        return scale * (pr.beta - 1.0) / pr.beta * q_i

    def option_term(self, x, q_i, q_mi):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        return -self.p / (pr.r - pr.mu) * min(y, 1.0) ** pr.beta / pr.beta * q_i

    def value_x(self, x, q_i, q_mi):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        if y > 1.0:
            return 0.0
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        return self.p / (pr.r - pr.mu) * (1.0 - y ** (pr.beta - 1.0)) * (P / self.p) * q_i

    def value_xx(self, x, q_i, q_mi):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        if y > 1.0:
            return 0.0
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        return -self.p / (pr.r - pr.mu) * (pr.beta - 1.0) * y ** (pr.beta - 2.0) \
            * (P / self.p) ** 2 * q_i

    def _d_own(self, x, q_i, q_mi, boundary_mode):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        if y > 1.0:
            return self.p / pr.p_star
        q = q_i + q_mi
        P = q ** (-1.0 / pr.gamma)
        Pp = -P / (pr.gamma * q)
        scale = self.p / (pr.r - pr.mu)
        return scale * ((y - y ** pr.beta / pr.beta)
                        + q_i * (1.0 - y ** (pr.beta - 1.0)) * x * Pp / self.p)

    def _d_opp(self, x, q_i, q_mi, boundary_mode):
        pr = self.params
        y = self._y(x, q_i, q_mi)
        if y > 1.0:
            return 0.0
        q = q_i + q_mi
        P = q ** (-1.0 / pr.gamma)
        Pp = -P / (pr.gamma * q)
        return self.p / (pr.r - pr.mu) * q_i * (1.0 - y ** (pr.beta - 1.0)) * x * Pp / self.p

    def below_branch_arrays(self, x, q_i, q_mi):
        """(value, V_x, V_xx) vectorized over x, valid for x <= trigger."""
        pr = self.params
        x = np.asarray(x, dtype=float)
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = x * P / self.p
        scale = self.p / (pr.r - pr.mu)
        v = scale * (y - y ** pr.beta / pr.beta) * q_i
        vx = scale * (1.0 - y ** (pr.beta - 1.0)) * (P / self.p) * q_i
        vxx = -scale * (pr.beta - 1.0) * y ** (pr.beta - 2.0) * (P / self.p) ** 2 * q_i
        return v, vx, vxx


class SoleInvestorValue(ValueFunction):
    """Value of doing all investment alone at the constant threshold p.

    Below the trigger, V = x*P*q_i/(r-mu) + Btil(q_i, q_mi) * y**beta with
    Btil chosen so that the own-capital derivative is one on the trigger.
    """

    def __init__(self, params: ModelParams, p: float):
        self.params = params
        self.p = p
        self.own_boundary = ConstantPriceBoundary(params, p)
        self.opponent_boundary = ConstantPriceBoundary(params, p)
        rm = params.r - params.mu
        self.k_own = p * (params.gamma - 1.0) / (rm * params.gamma) - 1.0
        self.k_opp = p * (params.beta - 1.0) / (rm * params.beta) - 1.0
        self.coef = params.gamma / (params.beta - params.gamma)

    kind = "sole_investor"

    def strategy_pair(self):
        return self.own_boundary, self.opponent_boundary

    def _btil(self, q_i, q_mi):
        return self.coef * (self.k_own * q_i + self.k_opp * q_mi)

    def _own_trigger(self, q_i, q_mi):
        return self.own_boundary.trigger(q_i, q_mi)

    def _phi(self, x, q_mi):
        return self.own_boundary.base_capacity(x, q_mi)

    def _below(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = x * P / self.p
        return x * P * q_i / (pr.r - pr.mu) + self._btil(q_i, q_mi) * y ** pr.beta

    def _below_x(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = x * P / self.p
        return P * q_i / (pr.r - pr.mu) \
            + self._btil(q_i, q_mi) * pr.beta * y ** (pr.beta - 1.0) * P / self.p

    def _below_xx(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = x * P / self.p
        return self._btil(q_i, q_mi) * pr.beta * (pr.beta - 1.0) \
            * y ** (pr.beta - 2.0) * (P / self.p) ** 2

    def option_term(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = min(x * P / self.p, 1.0)
        return self._btil(q_i, q_mi) * y ** pr.beta

    def _d_own(self, x, q_i, q_mi, boundary_mode):
        pr = self.params
        if x > self._own_trigger(q_i, q_mi):
            return 1.0
        q = q_i + q_mi
        P = q ** (-1.0 / pr.gamma)
        Pp = -P / (pr.gamma * q)
        y = x * P / self.p
        return x * (P + q_i * Pp) / (pr.r - pr.mu) \
            + self.coef * self.k_own * y ** pr.beta \
            + self._btil(q_i, q_mi) * pr.beta * y ** (pr.beta - 1.0) * x * Pp / self.p

    def _opp_below(self, x, q_i, q_mi):
        pr = self.params
        q = q_i + q_mi
        P = q ** (-1.0 / pr.gamma)
        Pp = -P / (pr.gamma * q)
        y = x * P / self.p
        return x * q_i * Pp / (pr.r - pr.mu) \
            + self.coef * self.k_opp * y ** pr.beta \
            + self._btil(q_i, q_mi) * pr.beta * y ** (pr.beta - 1.0) * x * Pp / self.p

    def _d_opp(self, x, q_i, q_mi, boundary_mode):
        if x > self._own_trigger(q_i, q_mi):
            # Differentiating the continuation branch: the phi terms cancel
            # because the own-capital derivative is one at the paste point.
            return self._opp_below(x, self._phi(x, q_mi), q_mi)
        return self._opp_below(x, q_i, q_mi)

    def below_branch_arrays(self, x, q_i, q_mi):
        pr = self.params
        x = np.asarray(x, dtype=float)
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        y = x * P / self.p
        btil = self._btil(q_i, q_mi)
        v = x * P * q_i / (pr.r - pr.mu) + btil * y ** pr.beta
        vx = P * q_i / (pr.r - pr.mu) + btil * pr.beta * y ** (pr.beta - 1.0) * P / self.p
        vxx = btil * pr.beta * (pr.beta - 1.0) * y ** (pr.beta - 2.0) * (P / self.p) ** 2
        return v, vx, vxx


# ---------------------------------------------------------------------------
# Capital-dependent trigger kind: B by certified quadrature
# ---------------------------------------------------------------------------


class DynamicValue(ValueFunction):
    """Value under the symmetric capital-dependent trigger with premium c.

    B(q_i, q_mi) = -int_{q_i}^inf (1 - Xbar(q) * MR(q)/(r-mu)) * Xbar(q)**-beta dq

    where Xbar is the trigger at (q, q_mi) and MR the marginal revenue.  The
    integrand is B's own q_i-derivative, so the construction pins the
    own-capital derivative to one on the trigger.  q-derivatives of the value
    are finite differences (the x-partials stay analytic given B).
    """

    def __init__(self, params: ModelParams, c: float,
                 quadrature: QuadratureSettings = QuadratureSettings()):
        self.params = params
        self.c = c
        self.quadrature = quadrature
        self.boundary = DynamicBoundary(params, c)
        self._b_cache: dict = {}

    kind = "dynamic_c"

    def strategy_pair(self):
        return self.boundary, self.boundary

    @property
    def q_floor(self) -> float:
        return self.boundary.q_floor

    def _fd_floor(self) -> float:
        return self.q_floor

    def _own_trigger(self, q_i, q_mi):
        # Raw formula: finite-difference stencils sit within one step of the
        # floor and must not trip the public domain check.
        return float(self.boundary._raw_trigger(q_i, q_mi))

    def _phi(self, x, q_mi):
        return self.boundary.base_capacity(x, q_mi)

    def value(self, x, q_i, q_mi):
        self.boundary._check_floor(q_i, q_mi)
        return super().value(x, q_i, q_mi)

    # -- the B integral -------------------------------------------------------

    def _integrand(self, q, q_mi):
        pr = self.params
        s = q + q_mi
        prem = self.c / np.maximum(q, q_mi) if self.c > 0.0 else 0.0
        xbar = (pr.p_star + prem) * s ** (1.0 / pr.gamma)
        mr = s ** (-1.0 / pr.gamma - 1.0) * ((pr.gamma - 1.0) / pr.gamma * q + q_mi)
        return (1.0 - xbar * mr / (pr.r - pr.mu)) * xbar ** (-pr.beta)

    def _tail_envelope(self, s):
        """Certified bound on |integral from s-qmi to inf|; decreasing in s."""
        pr = self.params
        decay = pr.beta / pr.gamma - 1.0
        k_env = (1.0 + pr.beta / (pr.beta - 1.0) * 2.0 * pr.gamma / (2.0 * pr.gamma - 1.0)) \
            * pr.p_star ** (-pr.beta)
        return k_env * s ** (-decay) / decay

    def _edges(self, q_i, q_mi):
        """Geometric panel edges anchored at the kink q = q_mi.

        Anchoring at q_mi (not q_i) keeps the interior grid identical across
        nearby q_i, so finite-difference stencils of B stay smooth.
        """
        qs = self.quadrature
        pr = self.params
        decay = pr.beta / pr.gamma - 1.0
        k_env = (1.0 + pr.beta / (pr.beta - 1.0) * 2.0 * pr.gamma / (2.0 * pr.gamma - 1.0)) \
            * pr.p_star ** (-pr.beta)
        log_s_needed = (math.log(k_env) - math.log(decay * qs.tail_rel_tol)) / decay
        if log_s_needed > math.log(qs.s_max):
            raise QuadratureNotConvergedError(
                "certified truncation point exceeds the floating-point range; "
                "parameters are too close to the integrability limit "
                f"(beta/gamma = {pr.beta / pr.gamma:.6g})"
            )
        anchor = q_mi if q_mi > 0.0 else 1.0
        k_lo = math.floor(math.log2(max(q_i, anchor * 2.0 ** -6) / anchor)) + 1
        k_hi = math.ceil((log_s_needed - math.log(anchor)) / math.log(2.0)) + 1
        edges = anchor * 2.0 ** np.arange(k_lo, k_hi + 1, dtype=float)
        edges = edges[edges > q_i * (1.0 + 1e-12)] if q_i > 0.0 else edges
        if edges.size == 0:
            edges = np.array([2.0 * q_i])
        return np.concatenate(([q_i], edges))

    def B(self, q_i: float, q_mi: float) -> float:
        """Coefficient of x**beta, with panel refinement and a tail budget."""
        key = (float(q_i), float(q_mi))
        hit = self._b_cache.get(key)
        if hit is not None:
            return hit
        if q_i + q_mi <= 0.0:
            raise ZeroCapacityError("B needs positive aggregate capacity")
        qs = self.quadrature
        edges = self._edges(q_i, q_mi)
        vals, errs = _gk15_panels(lambda q: self._integrand(q, q_mi), edges)
        total = vals.sum()
        tail = self._tail_envelope(edges[-1] + q_mi)
        splits = 0
        while True:
            budget = qs.rel_tol * (1.0 + abs(total))
            if errs.sum() + tail <= budget:
                break
            if splits >= qs.max_splits:
                raise QuadratureNotConvergedError(
                    f"panel error {errs.sum():.3g} above tolerance after refinement"
                )
            split = errs > budget / (2.0 * len(errs))
            if not split.any():
                split = errs == errs.max()
            mids = 0.5 * (edges[:-1] + edges[1:])
            edges = np.sort(np.concatenate((edges, mids[split])))
            vals, errs = _gk15_panels(lambda q: self._integrand(q, q_mi), edges)
            total = vals.sum()
            splits += 1
        b = -float(total)
        bound = self.b_linear_bound(q_i, q_mi)
        if abs(b) > bound * (1.0 + 1e-6) + 1e-250:
            raise QuadratureNotConvergedError(
                f"|B|={abs(b):.6g} violates its certified bound {bound:.6g}"
            )
        self._b_cache[key] = b
        return b

    def b_linear_bound(self, q_i: float, q_mi: float) -> float:
        """Linear growth bound |B| <= beta/(beta-1) (P/p*)^beta gamma/(beta-gamma) (q_i+q_mi)."""
        pr = self.params
        s = q_i + q_mi
        return pr.beta / (pr.beta - 1.0) * (s ** (-1.0 / pr.gamma) / pr.p_star) ** pr.beta \
            * pr.gamma / (pr.beta - pr.gamma) * s

    # -- branch formulas ------------------------------------------------------

    def _below(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        return x * P * q_i / (pr.r - pr.mu) + self.B(q_i, q_mi) * x ** pr.beta

    def _below_x(self, x, q_i, q_mi):
        pr = self.params
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        return P * q_i / (pr.r - pr.mu) + pr.beta * self.B(q_i, q_mi) * x ** (pr.beta - 1.0)

    def _below_xx(self, x, q_i, q_mi):
        pr = self.params
        return pr.beta * (pr.beta - 1.0) * self.B(q_i, q_mi) * x ** (pr.beta - 2.0)

    def option_term(self, x, q_i, q_mi):
        return self.B(q_i, q_mi) * x ** self.params.beta

    def below_branch_arrays(self, x, q_i, q_mi):
        pr = self.params
        x = np.asarray(x, dtype=float)
        P = (q_i + q_mi) ** (-1.0 / pr.gamma)
        b = self.B(q_i, q_mi)
        v = x * P * q_i / (pr.r - pr.mu) + b * x ** pr.beta
        vx = P * q_i / (pr.r - pr.mu) + pr.beta * b * x ** (pr.beta - 1.0)
        vxx = pr.beta * (pr.beta - 1.0) * b * x ** (pr.beta - 2.0)
        return v, vx, vxx


class PerturbedValue:
    """Negative-control candidate: the option term is scaled in the value
    channel only, while every reported derivative stays that of the base
    function.  The resulting value/derivative mismatch violates the pricing
    equation, which residual checks must flag.
    """

    def __init__(self, base: ValueFunction, option_scale: float):
        self.base = base
        self.params = base.params
        self.option_scale = option_scale
        self.kind = f"perturbed({base.kind})"

    def strategy_pair(self):
        return self.base.strategy_pair()

    def value(self, x, q_i, q_mi):
        return self.base.value(x, q_i, q_mi) \
            + (self.option_scale - 1.0) * self.base.option_term(x, q_i, q_mi)

    def value_x(self, x, q_i, q_mi):
        return self.base.value_x(x, q_i, q_mi)

    def value_xx(self, x, q_i, q_mi):
        return self.base.value_xx(x, q_i, q_mi)

    def partials(self, x, q_i, q_mi, which=("x", "xx", "qi", "qmi"),
                 boundary_mode: str = "error"):
        return self.base.partials(x, q_i, q_mi, which, boundary_mode)

    def below_branch_arrays(self, x, q_i, q_mi):
        v, vx, vxx = self.base.below_branch_arrays(x, q_i, q_mi)
        x = np.asarray(x, dtype=float)
        opt = np.array([self.base.option_term(xx, q_i, q_mi) for xx in np.atleast_1d(x)])
        return v + (self.option_scale - 1.0) * opt.reshape(np.shape(v)), vx, vxx
