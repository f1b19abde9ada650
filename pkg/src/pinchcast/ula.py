"""Fixed uniform linear array baseline with quantized analog beamforming.

The antennas sit at half-wavelength spacing centered on the aperture and
cannot move; the only degrees of freedom are per-element phase shifts drawn
from a uniform codebook.  Phases are optimized element-by-element against the
same scheme objectives used for the movable-antenna solvers, and the
resource allocation is shared unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import distances
from .config import SystemConfig
from .errors import PinchcastError
from .noma import (
    _mmf_gamma,
    decoding_order,
    noma_mmf_bisection,
    noma_sinrs,
    sic_feasibility_margin,
    two_group_rate_batch,
    upper_bound_batch,
)
from .records import SchemeSolution, trace_summary
from .seo import SweepTrace, _candidate_gains, _select_batch, _select_plain_scalar, _select_screened
from .tdma import TimeEnergyAllocation, _PmRateSolver, equal_time_power, pm_resource_allocation
from .tin import inv_cnr_sum_batch, tin_power, tin_sinrs
from .topology import Topology


@dataclass(frozen=True)
class UlaConfig:
    """Geometry and codebook of the fixed array."""

    num_elements: int
    center_m: float
    spacing_m: float
    phase_levels: int

    @classmethod
    def from_system(cls, config: SystemConfig, n_elements: int | None = None) -> "UlaConfig":
        n = config.num_antennas if n_elements is None else int(n_elements)
        return cls(
            num_elements=n,
            center_m=config.waveguide_length_m / 2.0,
            spacing_m=config.wavelength_m / 2.0,
            phase_levels=config.grid_points,
        )

    def positions(self) -> np.ndarray:
        n = self.num_elements
        offsets = (np.arange(1, n + 1) - (n + 1) / 2.0) * self.spacing_m
        return self.center_m + offsets

    def codebook(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.phase_levels) / self.phase_levels


def _element_channels(ula: UlaConfig, topology: Topology, config: SystemConfig) -> np.ndarray:
    """Per-element free-space channels (no phase weights), shape (K, N)."""
    d = distances(ula.positions(), topology.user_xyz_m, config)
    amp = np.sqrt(config.path_gain_m2) / d
    return amp * np.exp(-1j * config.free_space_wavenumber * d)


def ula_effective_channel(phases: np.ndarray, user_xyz, config: SystemConfig) -> complex:
    """Channel seen by one user under phase weights exp(j*theta)/sqrt(N)."""
    phases = np.asarray(phases, dtype=float)
    ula = UlaConfig.from_system(config, phases.size)
    d = distances(ula.positions(), np.asarray(user_xyz, dtype=float).reshape(1, 3), config)[0]
    elem = np.sqrt(config.path_gain_m2) / d * np.exp(-1j * config.free_space_wavenumber * d)
    weights = np.exp(1j * phases) / math.sqrt(phases.size)
    return complex(elem @ weights)


def _phase_sweep(
    topology: Topology,
    config: SystemConfig,
    ula: UlaConfig,
    *,
    maximize: bool = True,
    exact=None,
    exact_batch=None,
    bound_batch=None,
    init_phases: np.ndarray | None = None,
) -> tuple[np.ndarray, SweepTrace]:
    """Element-wise phase search mirroring the placement sweep mechanics."""
    n = ula.num_elements
    phases = np.zeros(n) if init_phases is None else np.asarray(init_phases, dtype=float).copy()
    elem = _element_channels(ula, topology, config)        # (K, N)
    codebook = ula.codebook()
    phasors = np.exp(1j * codebook)                        # (L,)
    noise = topology.noise_w
    group_idx = topology.group_indices()
    trace = SweepTrace()

    def gains_now() -> np.ndarray:
        h = (elem * np.exp(1j * phases)[None, :]).sum(axis=1)
        cnr = (h.real**2 + h.imag**2) / (n * noise)
        return np.array([cnr[idx].min() for idx in group_idx])

    def value_of(gains: np.ndarray) -> float:
        if exact is not None:
            return float(exact(gains))
        return float(exact_batch(gains[:, None])[0])

    f_prev = value_of(gains_now())
    trace.objective.append(f_prev)
    for _ in range(config.max_outer_iters):
        for i in range(n):
            w = np.exp(1j * phases)
            w[i] = 0.0
            h_bar = (elem * w[None, :]).sum(axis=1)
            cand_terms = elem[:, i][:, None] * phasors[None, :]   # (K, L)
            inc_hits = np.nonzero(codebook == phases[i])[0]
            inc_j = int(inc_hits[0]) if inc_hits.size else None
            A = _candidate_gains(h_bar, cand_terms, noise, n, group_idx)
            n_cand = A.shape[1]
            trace.total_candidates += n_cand
            if exact_batch is not None:
                vals = np.asarray(exact_batch(A), dtype=float)
                j, v = _select_batch(vals, maximize, inc_j)
                trace.stage2_evals += n_cand
            elif bound_batch is None:
                j, v, evals = _select_plain_scalar(A, exact, maximize, inc_j)
                trace.stage2_evals += evals
            else:
                bounds = np.asarray(bound_batch(A), dtype=float)
                j, v, evals = _select_screened(A, exact, bounds, inc_j)
                trace.stage2_evals += evals
            phases[i] = codebook[j]
            trace.accepted_x.append(float(phases[i]))
        trace.sweeps += 1
        f_new = v
        trace.objective.append(f_new)
        if abs(f_new - f_prev) <= config.tol * min(1.0, abs(f_prev)):
            trace.converged = True
            break
        f_prev = f_new
    return phases, trace


def _group_gains_for_phases(
    phases: np.ndarray, topology: Topology, config: SystemConfig, ula: UlaConfig
) -> np.ndarray:
    elem = _element_channels(ula, topology, config)
    h = (elem * np.exp(1j * phases)[None, :]).sum(axis=1)
    cnr = (h.real**2 + h.imag**2) / (ula.num_elements * topology.noise_w)
    return np.array([cnr[idx].min() for idx in topology.group_indices()])


def solve_ula(
    topology: Topology,
    scheme: str,
    config: SystemConfig,
    *,
    n_elements: int | None = None,
    equal_time: bool = False,
    use_hoe: bool = True,
) -> SchemeSolution:
    """Optimize the fixed array's phases for the chosen scheme.

    The slot-switched protocol re-optimizes phases per group, since phase
    shifts are electronic and can change between slots.
    """
    ula = UlaConfig.from_system(config, n_elements)
    p_t = config.power_budget_w
    g = topology.num_groups
    ones = np.ones(g)
    positions = ula.positions()

    if scheme == "tin":
        phases, trace = _phase_sweep(
            topology, config, ula, maximize=False, exact_batch=inv_cnr_sum_batch
        )
        gains = _group_gains_for_phases(phases, topology, config, ula)
        gamma, powers = tin_power(gains, p_t)
        rates = np.log2(1.0 + tin_sinrs(gains, powers))
        return SchemeSolution(
            scheme="tin", baseline=True, mmf_rate=math.log2(1.0 + gamma),
            per_group_rates=rates, power_w=powers, tau=ones,
            placements=[positions], phases=phases,
            iterations=trace.sweeps, converged=trace.converged,
            traces=[trace_summary(trace)],
            extras={"equalized_sinr": gamma},
        )

    if scheme == "noma":
        if g <= 2:
            batch = (
                (lambda A: np.log2(1.0 + p_t * A[0]))
                if g == 1
                else two_group_rate_batch(p_t)
            )
            phases, trace = _phase_sweep(topology, config, ula, exact_batch=batch)
        else:
            iters = config.gamma_bisect_iters

            def exact(a: np.ndarray) -> float:
                return math.log2(1.0 + _mmf_gamma(sorted(a.tolist()), p_t, iters, 1e-12))

            bound = upper_bound_batch(p_t) if use_hoe else None
            phases, trace = _phase_sweep(
                topology, config, ula, exact=exact, bound_batch=bound
            )
        gains = _group_gains_for_phases(phases, topology, config, ula)
        gamma, powers = noma_mmf_bisection(gains, p_t, iters=config.gamma_bisect_iters)
        rates = np.log2(1.0 + noma_sinrs(gains, powers))
        return SchemeSolution(
            scheme="noma", baseline=True, mmf_rate=math.log2(1.0 + gamma),
            per_group_rates=rates, power_w=powers, tau=ones,
            placements=[positions], phases=phases,
            iterations=trace.sweeps, converged=trace.converged,
            traces=[trace_summary(trace)],
            extras={
                "equalized_sinr": gamma,
                "decoding_order": decoding_order(gains).order.tolist(),
                "sic_feasibility_margin": sic_feasibility_margin(gains, powers),
            },
        )

    if scheme == "tdma-pm":
        if equal_time and g > 1:
            def eq_rate(gain_matrix: np.ndarray) -> np.ndarray:
                f_a = np.sum(1.0 / gain_matrix, axis=0)
                return np.log2(1.0 + g * p_t / f_a) / g

            phases, trace = _phase_sweep(topology, config, ula, exact_batch=eq_rate)
            gains = _group_gains_for_phases(phases, topology, config, ula)
            powers, rate = equal_time_power(gains, p_t)
            tau = np.full(g, 1.0 / g)
            alloc = TimeEnergyAllocation(tau=tau, energy_w=tau * powers, nu=math.nan)
            t_star = rate
        else:
            if g == 1:
                phases, trace = _phase_sweep(
                    topology, config, ula, exact_batch=lambda A: np.log2(1.0 + p_t * A[0])
                )
            else:
                solver = _PmRateSolver(p_t)
                bound = upper_bound_batch(p_t) if use_hoe else None
                phases, trace = _phase_sweep(
                    topology, config, ula, exact=solver.rate, bound_batch=bound
                )
            gains = _group_gains_for_phases(phases, topology, config, ula)
            t_star, alloc = pm_resource_allocation(
                gains, p_t, rate_iters=config.rate_bisect_iters, nu_iters=config.nu_bisect_iters
            )
        return SchemeSolution(
            scheme="tdma-pm", baseline=True, mmf_rate=t_star,
            per_group_rates=alloc.rates(gains), power_w=alloc.power_w, tau=alloc.tau,
            placements=[positions], phases=phases,
            iterations=trace.sweeps, converged=trace.converged,
            traces=[trace_summary(trace)],
            extras={"nu": alloc.nu, "equal_time": equal_time},
        )

    if scheme == "tdma-ps":
        gains = np.empty(g)
        all_phases = np.zeros((g, ula.num_elements))
        traces = []
        for gi in range(g):
            def own_rate(gain_matrix: np.ndarray, _gi: int = gi) -> np.ndarray:
                return np.log2(1.0 + p_t * gain_matrix[_gi])

            phases, trace = _phase_sweep(topology, config, ula, exact_batch=own_rate)
            all_phases[gi] = phases
            traces.append(trace)
            gains[gi] = _group_gains_for_phases(phases, topology, config, ula)[gi]
        t_star, alloc = pm_resource_allocation(
            gains, p_t, rate_iters=config.rate_bisect_iters, nu_iters=config.nu_bisect_iters
        )
        return SchemeSolution(
            scheme="tdma-ps", baseline=True, mmf_rate=t_star,
            per_group_rates=alloc.rates(gains), power_w=alloc.power_w, tau=alloc.tau,
            placements=[positions] * g, phases=all_phases,
            iterations=max(t.sweeps for t in traces),
            converged=all(t.converged for t in traces),
            traces=[trace_summary(t) for t in traces],
            extras={"nu": alloc.nu},
        )

    raise PinchcastError(f"unknown scheme {scheme!r}")
