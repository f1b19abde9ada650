"""Orthogonal-slot solvers with joint time and energy allocation.

Each group transmits alone in a slot of length tau_g using energy
E_g = tau_g * P_g, giving the jointly concave slot rate
tau * log2(1 + E * A / tau).  For a target common rate t the cheapest energy
of a group is tau/A * (2^(t/tau) - 1); minimizing the summed energy over the
slot lengths is a strictly convex problem whose stationarity condition ties
every slot length to one multiplier nu.  The allocator therefore bisects nu
until the slot lengths fill the frame and bisects the rate until the energy
budget is met.

Two placement protocols are supported: slot-switched placements optimized per
group in isolation (PS) and one shared placement optimized against the
allocator itself (PM).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import group_gains
from .config import SystemConfig
from .errors import PinchcastError
from .noma import upper_bound_batch
from .records import SchemeSolution, trace_summary
from .seo import SweepTrace, hoe_sweep, random_placement, seo_sweep
from .topology import Placement, Topology

LN2 = math.log(2.0)
_EXP_CAP = 700.0      # exponent cap for 2^(t/tau); larger means infeasible tau
_U_CAP = 1021.0       # keeps exp(LN2 * u) below float overflow


def min_energy(a_g: float, t: float, tau: float) -> float:
    """Least energy for one group to sustain rate ``t`` in a slot of length ``tau``.

    Evaluates tau/a * (2^(t/tau) - 1); slot lengths implying an overflowing
    exponent are reported as infinitely expensive.
    """
    if a_g <= 0 or tau <= 0 or t < 0:
        raise ValueError("requires a_g > 0, tau > 0, t >= 0")
    if t == 0.0:
        return 0.0
    u = t / tau
    if u * LN2 > _EXP_CAP:
        return math.inf
    return tau * math.expm1(u * LN2) / a_g


def _omega(u: float) -> float:
    # derivative of the per-slot energy w.r.t. slot length, rescaled:
    # omega(u) = 2^u (u ln2 - 1) + 1, strictly increasing from 0 on u >= 0
    e = math.exp(LN2 * u)
    return e * (u * LN2 - 1.0) + 1.0


def _omega_inv(y: float, seed: float | None = None) -> float:
    """Invert ``_omega`` on u > 0 by safeguarded Newton iteration."""
    if y <= 0.0:
        raise ValueError("omega inverse requires a positive target")
    if seed is not None and seed > 0.0:
        u = min(seed, _U_CAP)
    elif y < 1.0:
        u = max(math.sqrt(2.0 * y) / LN2, 1e-12)
    else:
        u = min(math.log2(y + 2.0), _U_CAP)
    for _ in range(100):
        e = math.exp(LN2 * u)
        f = e * (u * LN2 - 1.0) + 1.0 - y
        d = (LN2 * LN2) * u * e
        step = f / d
        u_new = u - step
        if u_new <= 0.0:
            u_new = 0.5 * u
        elif u_new > _U_CAP:
            u_new = _U_CAP
        if abs(u_new - u) <= 5e-16 * u:
            return u_new
        u = u_new
    return u


def tau_from_nu(a_g: float, t: float, nu: float) -> float:
    """Slot length at which the marginal energy saving equals ``nu``.

    Unique root of (1/a)(2^(t/tau)(1 - t ln2 / tau) - 1) + nu = 0; no root
    exists for nu <= 0.
    """
    if nu <= 0.0:
        raise ValueError("the stationarity condition has no root for nu <= 0")
    if t <= 0.0 or a_g <= 0.0:
        raise ValueError("requires t > 0 and a_g > 0")
    return t / _omega_inv(a_g * nu)


def _tau_vector(a: list[float], t: float, nu: float, seeds: list[float] | None) -> tuple[list[float], list[float]]:
    us = []
    taus = []
    for gi, ag in enumerate(a):
        u = _omega_inv(ag * nu, seed=None if seeds is None else seeds[gi])
        us.append(u)
        taus.append(t / u)
    return taus, us


def _min_total_energy(
    a: list[float],
    t: float,
    iters: int,
    nu_seed: float | None = None,
) -> tuple[float, list[float], float]:
    """Minimize total slot energy at rate ``t`` subject to a unit frame.

    Bisects the multiplier nu until the slot lengths sum to one.  Returns
    (total energy, slot lengths, nu).
    """
    if t <= 0.0:
        raise ValueError("t must be positive")

    seeds: list[float] | None = None

    def total_tau(nu: float) -> float:
        nonlocal seeds
        taus, seeds = _tau_vector(a, t, nu, seeds)
        return sum(taus)

    # frame use decreases in nu; expand geometrically to bracket a unit frame
    nu = 1.0 if nu_seed is None else nu_seed
    s = total_tau(nu)
    lo = hi = nu
    if s > 1.0:
        for _ in range(120):
            lo = nu
            nu *= 10.0
            s = total_tau(nu)
            if s <= 1.0:
                hi = nu
                break
        else:
            raise PinchcastError("failed to bracket the frame constraint from above")
    else:
        for _ in range(120):
            hi = nu
            nu /= 10.0
            s = total_tau(nu)
            if s >= 1.0:
                lo = nu
                break
        else:
            raise PinchcastError("failed to bracket the frame constraint from below")

    best_nu = nu
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        s = total_tau(mid)
        best_nu = mid
        if s >= 1.0:
            lo = mid
        else:
            hi = mid
        if abs(s - 1.0) <= 1e-12 or (hi - lo) <= 1e-12 * hi:
            break
    taus, _ = _tau_vector(a, t, best_nu, seeds)
    energy = sum(min_energy(ag, t, tg) for ag, tg in zip(a, taus))
    return energy, taus, best_nu


def min_total_energy(gains: np.ndarray, t: float, *, iters: int = 80) -> tuple[float, np.ndarray]:
    """Least total energy sustaining common rate ``t`` over one frame."""
    a = np.asarray(gains, dtype=float)
    if np.any(a <= 0):
        raise ValueError("gains must be positive")
    if a.size == 1:
        return min_energy(float(a[0]), t, 1.0), np.ones(1)
    energy, taus, _ = _min_total_energy(a.tolist(), t, iters)
    return energy, np.asarray(taus)


@dataclass(frozen=True)
class TimeEnergyAllocation:
    """Slot lengths and energies for one frame; powers follow as E/tau."""

    tau: np.ndarray
    energy_w: np.ndarray
    nu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "energy_w", np.asarray(self.energy_w, dtype=float))

    @property
    def power_w(self) -> np.ndarray:
        return self.energy_w / self.tau

    def rates(self, gains: np.ndarray) -> np.ndarray:
        a = np.asarray(gains, dtype=float)
        return self.tau * np.log2(1.0 + self.energy_w * a / self.tau)


def pm_resource_allocation(
    gains: np.ndarray,
    p_t: float,
    *,
    rate_iters: int = 60,
    nu_iters: int = 80,
) -> tuple[float, TimeEnergyAllocation]:
    """Largest common rate whose minimum energy fits the budget.

    Outer bisection over the rate with the frame allocator as the
    feasibility oracle.  Applies unchanged to slot-switched placements since
    the resource problem only sees per-group gains.
    """
    a = np.asarray(gains, dtype=float)
    if np.any(a <= 0) or p_t <= 0:
        raise ValueError("gains and power budget must be positive")
    if a.size == 1:
        a0 = float(a[0])
        t = math.log2(1.0 + p_t * a0)
        return t, TimeEnergyAllocation(
            tau=np.ones(1), energy_w=np.array([p_t]), nu=_omega(t) / a0
        )
    a_list = a.tolist()
    t_hi = min(math.log2(1.0 + p_t * ag) for ag in a_list)
    t_lo = 0.0
    best: tuple[float, list[float], float] | None = None
    nu_seed = None
    for _ in range(rate_iters):
        mid = 0.5 * (t_lo + t_hi)
        energy, taus, nu = _min_total_energy(a_list, mid, nu_iters, nu_seed)
        nu_seed = nu
        if energy <= p_t:
            t_lo = mid
            best = (mid, taus, nu)
        else:
            t_hi = mid
        if (t_hi - t_lo) <= 1e-12 * t_hi:
            break
    if best is None:
        raise PinchcastError("rate bisection found no feasible point")
    t_star, taus, nu = best
    tau = np.asarray(taus)
    energy = np.array([min_energy(ag, t_star, tg) for ag, tg in zip(a_list, taus)])
    return t_star, TimeEnergyAllocation(tau=tau, energy_w=energy, nu=nu)


class _PmRateSolver:
    """Fast equal-rate frontier solver used as the placement sweep objective.

    At the optimum the frame and energy constraints are tight and all slot
    rates are equal, which pins every quantity to the single multiplier nu.
    Newton iteration on the energy residual with warm starts across
    candidate evaluations converges in a handful of steps and is iterated to
    machine precision so results do not depend on evaluation order.
    """

    def __init__(self, p_t: float):
        self.p_t = p_t
        self._nu = 1.0
        self._useeds: list[float] | None = None

    def _state(self, a: list[float], nu: float) -> tuple[float, float, float]:
        # returns (energy, d_energy/d_nu, rate); omega-inverse Newton inlined
        g = len(a)
        us = self._useeds
        if us is None or len(us) != g:
            us = [0.0] * g
        ln2 = LN2
        ln2sq = ln2 * ln2
        inv_u_sum = 0.0
        e_sum = 0.0
        dt_acc = 0.0
        de_acc = 0.0
        new_seeds = [0.0] * g
        for gi in range(g):
            ag = a[gi]
            y = ag * nu
            u = us[gi]
            if u <= 0.0:
                u = math.sqrt(2.0 * y) / ln2 if y < 1.0 else math.log2(y + 2.0)
                if u > _U_CAP:
                    u = _U_CAP
                elif u < 1e-12:
                    u = 1e-12
            for _ in range(60):
                e = math.exp(ln2 * u)
                f = e * (u * ln2 - 1.0) + 1.0 - y
                u_new = u - f / (ln2sq * u * e)
                if u_new <= 0.0:
                    u_new = 0.5 * u
                elif u_new > _U_CAP:
                    u_new = _U_CAP
                if abs(u_new - u) <= 1e-15 * u:
                    u = u_new
                    break
                u = u_new
            new_seeds[gi] = u
            e = math.exp(ln2 * u)
            em1 = e - 1.0
            du = ag / (ln2sq * u * e)
            inv_u_sum += 1.0 / u
            e_sum += em1 / (u * ag)
            dt_acc += du / (u * u)
            de_acc += (ln2 * e * u - em1) / (u * u * ag) * du
        self._useeds = new_seeds
        t = 1.0 / inv_u_sum
        dt = t * t * dt_acc
        energy = t * e_sum
        d_energy = dt * e_sum + t * de_acc
        return energy, d_energy, t

    def rate(self, gains: np.ndarray) -> float:
        a = gains.tolist()
        if len(a) == 1:
            return math.log2(1.0 + self.p_t * a[0])
        p_t = self.p_t
        nu = self._nu
        lo = 0.0
        hi = math.inf
        t = 0.0
        for _ in range(200):
            energy, d_energy, t = self._state(a, nu)
            f = energy - p_t
            if f > 0.0:
                hi = nu
            else:
                lo = nu
            if lo > 0.0 and math.isfinite(hi) and hi - lo <= 4e-16 * hi:
                break
            nu_new = nu - f / d_energy
            if not lo < nu_new < hi:
                nu_new = 0.5 * (lo + hi) if math.isfinite(hi) else nu * 16.0
            if abs(nu_new - nu) <= 1e-15 * nu:
                nu = nu_new
                break
            nu = nu_new
        else:
            if not math.isfinite(hi):
                raise PinchcastError("energy frontier iteration failed to bracket the budget")
        self._nu = nu
        _, _, t = self._state(a, nu)
        return t


def pm_rate(gains: np.ndarray, p_t: float) -> float:
    """Optimal common rate for one gain vector (stateless convenience)."""
    return _PmRateSolver(p_t).rate(np.asarray(gains, dtype=float))


def equal_time_power(gains: np.ndarray, p_t: float) -> tuple[np.ndarray, float]:
    """Closed-form power split under equal slot lengths 1/G.

    Powers are inversely proportional to the gains so every product P_g * a_g
    equals G * p_t / sum(1/a), and all slot rates coincide.
    """
    a = np.asarray(gains, dtype=float)
    if np.any(a <= 0) or p_t <= 0:
        raise ValueError("gains and power budget must be positive")
    g = a.size
    f_a = float(np.sum(1.0 / a))
    common_snr = g * p_t / f_a
    powers = common_snr / a
    rate = math.log2(1.0 + common_snr) / g
    return powers, rate


def single_pa_pm(
    x: float, topology: Topology, config: SystemConfig, p_t: float | None = None
) -> tuple[np.ndarray, float]:
    """Equal-time power split and rate for a lone antenna at position ``x``."""
    p_t = config.power_budget_w if p_t is None else p_t
    gains = group_gains(Placement(x_m=np.array([float(x)])), topology, config)
    return equal_time_power(gains.a, p_t)


@dataclass
class TdmaSolution:
    protocol: str                 # "PS" or "PM"
    placements: list[Placement]
    allocation: TimeEnergyAllocation
    gains: np.ndarray             # per-group gains seen by the allocator
    mmf_rate: float
    per_group_rates: np.ndarray
    traces: list[SweepTrace]
    equal_time: bool = False

    def to_solution(self) -> SchemeSolution:
        return SchemeSolution(
            scheme=f"tdma-{self.protocol.lower()}",
            mmf_rate=self.mmf_rate,
            per_group_rates=self.per_group_rates,
            power_w=self.allocation.power_w,
            tau=self.allocation.tau,
            placements=[p.x_m for p in self.placements],
            iterations=max(t.sweeps for t in self.traces),
            converged=all(t.converged for t in self.traces),
            traces=[trace_summary(t) for t in self.traces],
            extras={"nu": self.allocation.nu, "equal_time": self.equal_time},
        )


def solve_tdma_ps(
    topology: Topology,
    config: SystemConfig,
    *,
    seed_placement: Placement | None = None,
    n_antennas: int | None = None,
    rng: np.random.Generator | None = None,
) -> TdmaSolution:
    """Slot-switched protocol: optimize each group's placement in isolation,
    then split time and energy across the resulting gains.

    ``seed_placement`` starts every per-group search from the same point
    (e.g. a shared-placement solution) instead of random initials.
    """
    g = topology.num_groups
    p_t = config.power_budget_w
    rng = np.random.default_rng() if rng is None else rng
    placements: list[Placement] = []
    traces: list[SweepTrace] = []
    gains = np.empty(g)
    for gi in range(g):
        start = seed_placement if seed_placement is not None else random_placement(config, rng, n_antennas)

        def own_rate(gain_matrix: np.ndarray, _gi: int = gi) -> np.ndarray:
            return np.log2(1.0 + p_t * gain_matrix[_gi])

        best, trace = seo_sweep(start, topology, config, objective_batch=own_rate)
        placements.append(best)
        traces.append(trace)
        gains[gi] = group_gains(best, topology, config).a[gi]
    t_star, alloc = pm_resource_allocation(
        gains, p_t, rate_iters=config.rate_bisect_iters, nu_iters=config.nu_bisect_iters
    )
    return TdmaSolution(
        protocol="PS",
        placements=placements,
        allocation=alloc,
        gains=gains,
        mmf_rate=t_star,
        per_group_rates=alloc.rates(gains),
        traces=traces,
    )


def solve_tdma_pm(
    topology: Topology,
    config: SystemConfig,
    *,
    placement: Placement | None = None,
    n_antennas: int | None = None,
    rng: np.random.Generator | None = None,
    use_hoe: bool = True,
    equal_time: bool = False,
) -> TdmaSolution:
    """Shared-placement protocol: one placement serves every slot, optimized
    against the joint time/energy allocator.

    ``equal_time`` pins all slot lengths to 1/G and uses the closed-form
    power split, making the placement search a vectorized sweep.
    """
    if placement is None:
        rng = np.random.default_rng() if rng is None else rng
        placement = random_placement(config, rng, n_antennas)
    p_t = config.power_budget_w
    g = topology.num_groups

    if equal_time and g > 1:
        def eq_rate(gain_matrix: np.ndarray) -> np.ndarray:
            f_a = np.sum(1.0 / gain_matrix, axis=0)
            return np.log2(1.0 + g * p_t / f_a) / g

        best, trace = seo_sweep(placement, topology, config, objective_batch=eq_rate)
        gains = group_gains(best, topology, config)
        powers, rate = equal_time_power(gains.a, p_t)
        tau = np.full(g, 1.0 / g)
        alloc = TimeEnergyAllocation(tau=tau, energy_w=tau * powers, nu=math.nan)
        return TdmaSolution(
            protocol="PM",
            placements=[best],
            allocation=alloc,
            gains=gains.a,
            mmf_rate=rate,
            per_group_rates=alloc.rates(gains.a),
            traces=[trace],
            equal_time=True,
        )

    if g == 1:
        batch = lambda A: np.log2(1.0 + p_t * A[0])  # noqa: E731
        best, trace = seo_sweep(placement, topology, config, objective_batch=batch)
    else:
        solver = _PmRateSolver(p_t)
        if use_hoe:
            best, trace = hoe_sweep(placement, topology, config, upper_bound_batch(p_t), solver.rate)
        else:
            best, trace = seo_sweep(placement, topology, config, objective=solver.rate)

    gains = group_gains(best, topology, config)
    t_star, alloc = pm_resource_allocation(
        gains.a, p_t, rate_iters=config.rate_bisect_iters, nu_iters=config.nu_bisect_iters
    )
    return TdmaSolution(
        protocol="PM",
        placements=[best],
        allocation=alloc,
        gains=gains.a,
        mmf_rate=t_star,
        per_group_rates=alloc.rates(gains.a),
        traces=[trace],
    )
