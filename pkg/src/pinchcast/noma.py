"""Power-domain superposition with successive interference cancellation.

Groups are decoded in ascending order of their bottleneck CNR: each receiver
strips the messages of all weaker groups before decoding its own, so the
remaining interference at a group comes only from stronger groups.  For a
target equalized SINR the minimum power of each group follows a backward
recursion from the strongest group, and the largest supportable SINR is found
by bisection on the power budget.  The two-group case has a quadratic closed
form used directly as the placement objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import group_gains
from .config import SystemConfig
from .records import SchemeSolution, trace_summary
from .seo import SweepTrace, hoe_sweep, random_placement, seo_sweep
from .topology import GroupGains, Placement, Topology


@dataclass(frozen=True)
class DecodingOrder:
    """Stable ascending sort of groups by bottleneck CNR."""

    order: np.ndarray         # group indices, weakest first
    gains_sorted: np.ndarray

    @property
    def num_groups(self) -> int:
        return self.order.size


def decoding_order(gains: np.ndarray) -> DecodingOrder:
    a = np.asarray(gains, dtype=float)
    if np.any(a <= 0):
        raise ValueError("gains must be positive")
    order = np.argsort(a, kind="stable")
    return DecodingOrder(order=order, gains_sorted=a[order])


def two_group_power(a_s: float, a_w: float, p_t: float) -> tuple[float, float, float]:
    """Closed-form split for two groups: (strong power, weak power, SINR).

    The equalized SINR solves a quadratic in the strong group's power; the
    root is evaluated in a cancellation-free form.
    """
    if a_s < a_w:
        raise ValueError(f"strong gain {a_s} must be >= weak gain {a_w}")
    if a_w <= 0 or p_t < 0:
        raise ValueError("gains must be positive and the budget nonnegative")
    b = a_s + a_w
    p_s = 2.0 * p_t * a_w / (b + math.sqrt(b * b + 4.0 * p_t * a_s * a_w * a_w))
    return p_s, p_t - p_s, p_s * a_s


def recursive_power(gains_sorted: np.ndarray, gamma: float) -> tuple[np.ndarray, float]:
    """Minimum per-group powers for target SINR ``gamma``, decoding order in.

    ``gains_sorted`` must be ascending.  Powers are computed from the
    strongest group backward: each group must overcome the noise floor plus
    the power of all stronger (uncancelled) groups.  Returns powers aligned
    with ``gains_sorted`` and their total.
    """
    a = np.asarray(gains_sorted, dtype=float)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    g = a.size
    powers = np.zeros(g)
    stronger = 0.0
    for k in range(g - 1, -1, -1):
        powers[k] = gamma * (1.0 / a[k] + stronger)
        stronger += powers[k]
    return powers, float(stronger)


def single_pa_required_power(gains_sorted: np.ndarray, gamma: float) -> float:
    """Closed-form total power for target SINR ``gamma``: the backward
    recursion telescopes into sum_g gamma*(1+gamma)^(g-1) / a_(g)."""
    a = np.asarray(gains_sorted, dtype=float)
    total = 0.0
    factor = gamma
    for ak in a:
        total += factor / ak
        factor *= 1.0 + gamma
    return total


def noma_upper_bound(gains: np.ndarray, p_t: float) -> float:
    """Rate of the bottleneck group if it received the entire budget alone."""
    return math.log2(1.0 + p_t * float(np.min(gains)))


def upper_bound_batch(p_t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized form of :func:`noma_upper_bound` over candidate gain columns."""

    def bound(gain_matrix: np.ndarray) -> np.ndarray:
        return np.log2(1.0 + p_t * gain_matrix.min(axis=0))

    return bound


def _required_total(inv_sorted: list[float], gamma: float) -> float:
    # backward recursion on plain floats; hot path of the bisection
    s = 0.0
    for inv in reversed(inv_sorted):
        s += gamma * (inv + s)
    return s


def _mmf_gamma(a_sorted: list[float], p_t: float, iters: int, rel_tol: float) -> float:
    gamma_max = p_t * a_sorted[0]
    inv_sorted = [1.0 / a for a in a_sorted]
    if _required_total(inv_sorted, gamma_max) <= p_t:
        return gamma_max
    lo, hi = 0.0, gamma_max
    width_tol = max(1e-15, rel_tol * gamma_max)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _required_total(inv_sorted, mid) <= p_t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width_tol:
            break
    return lo


def noma_mmf_bisection(
    gains: np.ndarray,
    p_t: float,
    *,
    iters: int = 60,
    rel_tol: float = 1e-12,
) -> tuple[float, np.ndarray]:
    """Largest equalized SINR whose recursive power total fits the budget.

    Bisects over [0, p_t * min(gains)]; the total required power is strictly
    increasing in the target SINR.  Returns the SINR and per-group powers in
    the original group order.
    """
    a = np.asarray(gains, dtype=float)
    if np.any(a <= 0) or p_t < 0:
        raise ValueError("gains must be positive and the budget nonnegative")
    dec = decoding_order(a)
    gamma = _mmf_gamma(dec.gains_sorted.tolist(), p_t, iters, rel_tol)
    powers_sorted, _ = recursive_power(dec.gains_sorted, gamma)
    powers = np.empty_like(powers_sorted)
    powers[dec.order] = powers_sorted
    return gamma, powers


def noma_sinrs(gains: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Self-decoding SINR of each group's bottleneck user, group order in/out."""
    a = np.asarray(gains, dtype=float)
    p = np.asarray(powers, dtype=float)
    dec = decoding_order(a)
    g = a.size
    sinr = np.empty(g)
    stronger = 0.0
    for k in range(g - 1, -1, -1):
        gi = dec.order[k]
        sinr[gi] = p[gi] * a[gi] / (1.0 + a[gi] * stronger)
        stronger += p[gi]
    return sinr


def sic_feasibility_margin(gains: np.ndarray, powers: np.ndarray) -> float:
    """Worst slack of the cancellation conditions.

    For every weaker group, each stronger group's bottleneck user must decode
    the weaker message at least as reliably as the weaker group itself; under
    ascending-CNR ordering the slack should never be materially negative.
    """
    a = np.asarray(gains, dtype=float)
    p = np.asarray(powers, dtype=float)
    dec = decoding_order(a)
    g = a.size
    self_sinr = noma_sinrs(a, p)
    margin = math.inf
    suffix = np.concatenate([np.cumsum(p[dec.order][::-1])[::-1][1:], [0.0]])
    for k in range(g):          # decoded group pi(k)
        gk = dec.order[k]
        for t in range(k + 1, g):  # stronger observer pi(t)
            at = a[dec.order[t]]
            cross = p[gk] * at / (1.0 + at * suffix[k])
            margin = min(margin, cross - self_sinr[gk])
    return margin


def single_pa_asymptotic_objective(
    x: float,
    topology: Topology,
    config: SystemConfig,
    regime: str,
    p_t: float | None = None,
) -> float:
    """Placement score for a lone antenna in the limiting power regimes.

    ``low`` reduces to balancing all groups (budget over summed inverse
    gains); ``high`` is limited by the weakest compounded decoding stage,
    min_g (p_t * a_(g))^(1/g) over the ascending order.
    """
    if regime not in ("low", "high"):
        raise ValueError(f"regime must be 'low' or 'high', got {regime!r}")
    p_t = config.power_budget_w if p_t is None else p_t
    gains = group_gains(Placement(x_m=np.array([x])), topology, config)
    if regime == "low":
        return p_t / gains.inv_sum
    a_sorted = np.sort(gains.a)
    return float(np.min([(p_t * a_sorted[g - 1]) ** (1.0 / g) for g in range(1, a_sorted.size + 1)]))


@dataclass
class NomaSolution:
    equalized_sinr: float
    power_w: np.ndarray
    order: DecodingOrder
    placement: Placement
    gains: GroupGains
    mmf_rate: float
    sic_feasibility_margin: float
    trace: SweepTrace

    def to_solution(self) -> SchemeSolution:
        rates = np.log2(1.0 + noma_sinrs(self.gains.a, self.power_w))
        return SchemeSolution(
            scheme="noma",
            mmf_rate=self.mmf_rate,
            per_group_rates=rates,
            power_w=self.power_w,
            tau=np.ones(self.gains.num_groups),
            placements=[self.placement.x_m],
            iterations=self.trace.sweeps,
            converged=self.trace.converged,
            traces=[trace_summary(self.trace)],
            extras={
                "equalized_sinr": self.equalized_sinr,
                "decoding_order": self.order.order.tolist(),
                "sic_feasibility_margin": self.sic_feasibility_margin,
            },
        )


def two_group_rate_batch(p_t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized two-group equalized rate over candidate gain columns."""

    def rate(gain_matrix: np.ndarray) -> np.ndarray:
        a_s = gain_matrix.max(axis=0)
        a_w = gain_matrix.min(axis=0)
        b = a_s + a_w
        gamma = 2.0 * p_t * a_s * a_w / (b + np.sqrt(b * b + 4.0 * p_t * a_s * a_w * a_w))
        return np.log2(1.0 + gamma)

    return rate


def solve_noma(
    topology: Topology,
    config: SystemConfig,
    *,
    placement: Placement | None = None,
    n_antennas: int | None = None,
    rng: np.random.Generator | None = None,
    use_hoe: bool = True,
) -> NomaSolution:
    """Joint placement and power optimization under cancellation decoding.

    The decoding order is recomputed for every candidate placement.  Two
    groups use the closed-form SINR as a vectorized sweep objective; larger
    instances screen candidates with the exclusive-budget bound before
    running the bisection solver.
    """
    if placement is None:
        rng = np.random.default_rng() if rng is None else rng
        placement = random_placement(config, rng, n_antennas)
    p_t = config.power_budget_w
    g = topology.num_groups

    if g == 1:
        batch = lambda A: np.log2(1.0 + p_t * A[0])  # noqa: E731
        best, trace = seo_sweep(placement, topology, config, objective_batch=batch)
    elif g == 2:
        best, trace = seo_sweep(
            placement, topology, config, objective_batch=two_group_rate_batch(p_t)
        )
    else:
        iters = config.gamma_bisect_iters

        def exact(a: np.ndarray) -> float:
            a_sorted = sorted(a.tolist())
            return math.log2(1.0 + _mmf_gamma(a_sorted, p_t, iters, 1e-12))

        if use_hoe:
            best, trace = hoe_sweep(placement, topology, config, upper_bound_batch(p_t), exact)
        else:
            best, trace = seo_sweep(placement, topology, config, objective=exact)

    gains = group_gains(best, topology, config)
    gamma, powers = noma_mmf_bisection(gains.a, p_t, iters=config.gamma_bisect_iters)
    return NomaSolution(
        equalized_sinr=gamma,
        power_w=powers,
        order=decoding_order(gains.a),
        placement=best,
        gains=gains,
        mmf_rate=math.log2(1.0 + gamma),
        sic_feasibility_margin=sic_feasibility_margin(gains.a, powers),
        trace=trace,
    )
