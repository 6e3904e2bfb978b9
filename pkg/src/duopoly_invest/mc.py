"""Monte Carlo payoff estimation and equilibrium deviation experiments.

Per-path payoffs are independent across paths, so the sample mean carries a
standard error from the i.i.d. payoffs; the horizon-truncation bias is
reported separately as a closed-form tail bound (never folded into the SE).
All comparisons run under common random numbers: the same (seed, path_index)
pair reproduces the same shock path in every arm of an experiment.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boundaries import Boundary, ConstantPriceBoundary, DynamicBoundary
from .model import ModelParams
from .outcomes import Outcome, build_joint_outcome, payoff
from .paths import generate_path


@dataclass(frozen=True)
class PayoffEstimate:
    mean: float
    se: float
    n: int
    dt: float
    horizon: float
    tail_bound: float

    def to_json(self) -> dict:
        return {"mean": self.mean, "se": self.se, "n": self.n,
                "dt": self.dt, "T": self.horizon, "tail_bound": self.tail_bound}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def value_linear_bound_coeff(params: ModelParams, boundary: Boundary) -> float:
    """Coefficient a with |V| <= a * (1 + q_i + q_mi) on the containment
    region of the given strategy family; used for horizon-tail bounds."""
    pr = params
    if isinstance(boundary, DynamicBoundary):
        lever = 2.0 * pr.gamma / (2.0 * pr.gamma - 1.0)
        return (pr.p_star / (pr.r - pr.mu) * lever
                + pr.beta / (pr.beta - 1.0) * lever ** pr.beta
                * pr.gamma / (pr.beta - pr.gamma))
    p = boundary.p if isinstance(boundary, ConstantPriceBoundary) else pr.p_star
    rm = pr.r - pr.mu
    k_own = abs(p * (pr.gamma - 1.0) / (rm * pr.gamma) - 1.0)
    k_opp = abs(p * (pr.beta - 1.0) / (rm * pr.beta) - 1.0)
    return p / rm * (1.0 + 1.0 / pr.beta) + pr.gamma / (pr.beta - pr.gamma) * (k_own + k_opp)


def _collect(fn, n_paths: int, threads: int) -> np.ndarray:
    """Evaluate fn(path_index) for 0..n_paths-1 into a fixed-order array.

    Work may run on several threads; results land at their own index, so the
    reduction is identical for any thread count.
    """
    out = np.empty(n_paths)
    if threads <= 1:
        for j in range(n_paths):
            out[j] = fn(j)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for j, v in zip(range(n_paths), pool.map(fn, range(n_paths), chunksize=64)):
            out[j] = v
    return out


def estimate_payoff(params: ModelParams, builder, firm: int, x0: float,
                    n_paths: int, dt: float, horizon: float, seed: int,
                    tail_boundary: Boundary | None = None,
                    threads: int = 1) -> PayoffEstimate:
    """Mean and standard error of the discounted payoff of `firm` under the
    outcome construction `builder` (a callable mapping a shock path to an
    Outcome)."""
    q_ends = np.empty(n_paths)

    def one(j: int) -> float:
        path = generate_path(params, x0, dt, horizon, seed, j)
        out: Outcome = builder(path)
        q_ends[j] = out.Q1[-1] + out.Q2[-1]
        return payoff(params, out, firm)

    vals = _collect(one, n_paths, threads)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else np.inf
    if tail_boundary is not None:
        coeff = value_linear_bound_coeff(params, tail_boundary)
        tail = float(np.exp(-params.r * horizon) * coeff * (1.0 + np.mean(q_ends)))
    else:
        tail = float("nan")
    return PayoffEstimate(mean=mean, se=se, n=n_paths, dt=dt,
                          horizon=horizon, tail_bound=tail)


@dataclass(frozen=True)
class DeviationResult:
    """Payoff comparison for firm 1 deviating from an equilibrium boundary."""

    payoff_deviant: float
    payoff_equilibrium: float
    diff_mean: float
    diff_se: float
    n: int

    @property
    def significant_loss(self) -> bool:
        """Deviation loses beyond three pooled standard errors."""
        return self.diff_mean < -3.0 * self.diff_se

    def to_json(self) -> dict:
        return {"payoff_deviant": self.payoff_deviant,
                "payoff_equilibrium": self.payoff_equilibrium,
                "diff_mean": self.diff_mean, "diff_se": self.diff_se, "n": self.n}


def deviation_experiment(params: ModelParams, equilibrium_boundary: Boundary,
                         deviant_boundary: Boundary, x0: float, q1_0: float,
                         q2_0: float, n_paths: int, dt: float, horizon: float,
                         seed: int, threads: int = 1) -> DeviationResult:
    """Compare firm 1's payoff when it switches to `deviant_boundary` while
    firm 2 keeps the equilibrium strategy, against the same construction with
    firm 1 also on the equilibrium boundary.

    Both arms build the joint outcome by sequential per-step reflection
    (deviant first) on the same shock path, so with the deviant equal to the
    equilibrium boundary the difference is identically zero.
    """
    diffs = np.empty(n_paths)
    devs = np.empty(n_paths)

    def one(j: int) -> float:
        path = generate_path(params, x0, dt, horizon, seed, j)
        out_dev = build_joint_outcome(deviant_boundary, equilibrium_boundary,
                                      path, q1_0, q2_0)
        out_eq = build_joint_outcome(equilibrium_boundary, equilibrium_boundary,
                                     path, q1_0, q2_0)
        pd = payoff(params, out_dev, 1)
        devs[j] = pd
        return pd - payoff(params, out_eq, 1)

    diffs = _collect(one, n_paths, threads)
    diff_mean = float(np.mean(diffs))
    diff_se = float(np.std(diffs, ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else np.inf
    pi_dev = float(np.mean(devs))
    return DeviationResult(payoff_deviant=pi_dev,
                           payoff_equilibrium=pi_dev - diff_mean,
                           diff_mean=diff_mean, diff_se=diff_se, n=n_paths)


def npv_at_boundary(params: ModelParams, p: float) -> float:
    """Net present value per marginal unit invested at the price threshold p:
    (p / p_star) - 1; zero exactly at the competitive threshold."""
    return p / params.p_star - 1.0
