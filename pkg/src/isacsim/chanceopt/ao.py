"""Alternating optimization over beams, extraction ratio, and rate targets.

Each iteration solves the beam SDP at fixed (rho, lambda, varrho), re-fits
rho to the leftover power budget by bisection, then walks the targets:
lambda up by delta_lambda, varrho down by delta_varrho. The first infeasible
step reverts to the last feasible targets and freezes them; the loop ends
when successive beam iterates move less than the convergence tolerance in
Frobenius norm, or at the iteration cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BudgetInfeasible, NoFeasiblePoint
from ..rates import (BeamformerSet, SemanticProfile, comm_sense_power, computing_power,
                     sinr_eavesdropper)
from .program import OptimizationContext, SdpSolution, SlotInputs, assemble_sdp, solve_sdp_step
from .solver import ConicSolver, SolverStatus

__all__ = ["AoState", "AoDiagnostics", "isotropic_beams", "fresh_targets",
           "bisect_rho", "update_targets", "ao_loop"]


@dataclass(frozen=True)
class AoState:
    """Targets and slacks carried across iterations (and warm-started across
    slots): intended-rate target, eavesdropper-rate cap, extraction ratios,
    and the per-vehicle information slacks of the last feasible solve."""

    lam: float
    varrho: float
    rho: np.ndarray
    u: np.ndarray | None = None
    iteration: int = 0
    frozen: bool = False
    last_feasible_lam: float | None = None
    last_feasible_varrho: float | None = None

    def __post_init__(self):
        if self.lam < 0 or self.varrho < 0:
            raise ValueError("rate targets must be nonnegative")
        object.__setattr__(self, "rho", np.atleast_1d(np.asarray(self.rho, dtype=float)))


@dataclass
class AoDiagnostics:
    """Per-iteration trace of one slot's alternating optimization."""

    iterations: int = 0
    converged: bool = False
    froze: bool = False
    objective: list = field(default_factory=list)       # kappa1(lam-varrho) - kappa2 sum 1/U
    feasible: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    varrho: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    step_norm: list = field(default_factory=list)
    min_margin: list = field(default_factory=list)
    statuses: list = field(default_factory=list)


def isotropic_beams(context: OptimizationContext, num_intended: int, num_vehicles: int,
                    rho: np.ndarray | None = None) -> BeamformerSet:
    """Uniform-power beams: half the available budget spread over the
    communication covariances, half over the sensing covariances."""
    n = context.geom.num_antennas
    budget = context.power_budget
    if context.semantic_enabled and rho is not None:
        budget += context.computing_coeff * float(np.sum(np.log(rho)))
    budget = max(budget, 0.0)
    w_share = 0.5 * budget / max(num_intended, 1)
    r_share = 0.5 * budget / max(num_vehicles, 1)
    eye = np.eye(n) / n
    return BeamformerSet(w=[w_share * eye for _ in range(num_intended)],
                         r=[r_share * eye for _ in range(num_vehicles)])


def fresh_targets(inputs: SlotInputs, context: OptimizationContext,
                  headroom: float = 1.5) -> AoState:
    """Default initial targets for a slot with no usable warm start.

    lambda starts at its configured small value; the eavesdropper cap starts
    at the worst leaked semantic rate under isotropic beams, padded by
    ``headroom`` so the first SDP is feasible in benign geometry.
    """
    kk = len(inputs.intended)
    rho0 = np.full(kk, context.rho_floor if context.semantic_enabled else 1.0)
    varrho0 = 0.0
    if inputs.unintended:
        beams = isotropic_beams(context, kk, inputs.num_vehicles, rho0)
        profile = SemanticProfile(iota=context.iota, rho=rho0)
        worst = 0.0
        for l, vl in enumerate(inputs.unintended):
            h = inputs.estimates[vl].h_bar
            for k in range(kk):
                gam = sinr_eavesdropper(l, k, h, beams, context.sigma_c2)
                worst = max(worst, profile.iota / rho0[k] * math.log2(1.0 + gam))
        varrho0 = max(context.delta_varrho, headroom * worst)
    return AoState(lam=context.lambda_init, varrho=varrho0, rho=rho0)


def bisect_rho(beams: BeamformerSet, profile: SemanticProfile, power_budget: float,
               coeff: float, rho_floor: float, tol: float = 1e-4,
               per_vehicle: bool = False) -> np.ndarray:
    """Smallest extraction ratio(s) in [rho_floor, 1] whose computing power
    fits beside the beams' radiated power.

    Shared across vehicles by default; ``per_vehicle`` bisects each ratio
    coordinate-wise instead. Raises BudgetInfeasible when even rho = 1
    exceeds the budget.
    """
    if not 0 < rho_floor <= 1:
        raise ValueError("rho_floor must lie in (0, 1]")
    kk = len(profile.rho)
    leftover = power_budget - comm_sense_power(beams)
    if leftover < -1e-9:
        raise BudgetInfeasible(
            f"radiated power exceeds the budget by {-leftover:.3e} W even at rho = 1")

    def smallest(fixed_cost: float, n_free: int) -> float:
        # find min rho with -coeff * n_free * ln(rho) <= leftover - fixed_cost
        def fits(rho):
            return fixed_cost - coeff * n_free * math.log(rho) <= leftover + 1e-15
        if fits(rho_floor):
            return rho_floor
        if not fits(1.0):
            raise BudgetInfeasible("computing power exceeds the leftover budget at rho = 1")
        lo, hi = rho_floor, 1.0
        while hi - lo > tol:
            mid = (lo + hi) / 2.0
            if fits(mid):
                hi = mid
            else:
                lo = mid
        return hi

    if not per_vehicle:
        return np.full(kk, smallest(0.0, kk))
    rho = profile.rho.copy()
    for k in range(kk):
        others = computing_power(np.delete(rho, k), coeff) if kk > 1 else 0.0
        rho[k] = smallest(others, 1)
    return rho


def update_targets(state: AoState, feasible: bool, delta_lambda: float,
                   delta_varrho: float) -> AoState:
    """Advance (lambda up, varrho down) after a feasible step; revert to the
    last feasible targets and freeze after an infeasible one."""
    if delta_lambda <= 0 or delta_varrho <= 0:
        raise ValueError("target increments must be > 0")
    if state.frozen:
        return state
    if feasible:
        return replace(state,
                       last_feasible_lam=state.lam,
                       last_feasible_varrho=state.varrho,
                       lam=state.lam + delta_lambda,
                       varrho=max(0.0, state.varrho - delta_varrho),
                       iteration=state.iteration + 1)
    if state.last_feasible_lam is None:
        return replace(state, frozen=True, iteration=state.iteration + 1)
    return replace(state,
                   lam=state.last_feasible_lam,
                   varrho=state.last_feasible_varrho,
                   frozen=True,
                   iteration=state.iteration + 1)


def _advance(state: AoState, context, has_eaves: bool) -> AoState:
    """Feasible-step target walk. The zero floor of the eavesdropper cap is
    unusable (the rate-to-SINR transform needs varrho > 0), so instead of
    letting the walk step onto it and stall, the cap is pinned at its last
    positive value while lambda keeps climbing."""
    pinned = state.varrho
    state = update_targets(state, True, context.delta_lambda, context.delta_varrho)
    if has_eaves and state.varrho <= 0.0 < pinned:
        state = replace(state, varrho=pinned)
    return state


def _beam_step_norm(current: BeamformerSet, previous: BeamformerSet) -> tuple[float, float]:
    dw = max(np.linalg.norm(cw - pw, "fro") for cw, pw in zip(current.w, previous.w))
    dr = max(np.linalg.norm(cr - pr, "fro") for cr, pr in zip(current.r, previous.r))
    return float(dw), float(dr)


def ao_loop(inputs: SlotInputs, context: OptimizationContext, solver: ConicSolver,
            init: AoState | None = None) -> tuple[SdpSolution, AoState, AoDiagnostics]:
    """Run the alternating optimization for one slot.

    Returns the last feasible solution, the final targets (frozen when the
    feasibility boundary was hit), and the iteration trace. Raises
    NoFeasiblePoint when the very first solve is already infeasible.
    """
    state = init if init is not None else fresh_targets(inputs, context)
    profile = SemanticProfile(iota=context.iota, rho=state.rho)
    program = assemble_sdp(state, inputs, context, profile)
    diag = AoDiagnostics()
    best: SdpSolution | None = None
    prev: SdpSolution | None = None
    certified: tuple[float, float] | None = None

    for _ in range(context.max_iterations):
        try:
            program.set_targets(state, profile)
            sol = solve_sdp_step(program, solver)
        except ValueError:
            # targets walked into an invalid exponent (e.g. varrho hit zero)
            sol = SdpSolution(status=SolverStatus.INFEASIBLE, raw_status="invalid targets")
        feasible = sol.status is SolverStatus.OPTIMAL
        diag.iterations += 1
        diag.statuses.append(sol.raw_status or sol.status.value)
        diag.feasible.append(feasible)
        diag.lam.append(state.lam)
        diag.varrho.append(state.varrho)
        diag.rho.append(state.rho.copy())
        diag.min_margin.append(float(sol.margins.min()) if sol.margins is not None else math.nan)

        if feasible:
            state = replace(state, u=sol.u)
            rho_new = bisect_rho(sol.beams, profile, context.power_budget,
                                 context.computing_coeff, context.rho_floor,
                                 tol=context.rho_bisect_tol) if context.semantic_enabled \
                else np.ones(len(inputs.intended))
            state = replace(state, rho=rho_new)
            profile = SemanticProfile(iota=context.iota, rho=rho_new)
            diag.objective.append(context.kappa1 * (state.lam - state.varrho) - sol.sensing_penalty)
            best = sol
            certified = (state.lam, state.varrho)
            if prev is not None:
                dw, dr = _beam_step_norm(sol.beams, prev.beams)
                diag.step_norm.append(max(dw, dr))
                if dw <= context.conv_tol and dr <= context.conv_tol:
                    diag.converged = True
                    break
            prev = sol
            state = _advance(state, context, bool(inputs.unintended))
        else:
            if best is None:
                raise NoFeasiblePoint(
                    f"first solve infeasible at lambda={state.lam:.3g}, varrho={state.varrho:.3g}")
            was_frozen = state.frozen
            state = update_targets(state, False, context.delta_lambda, context.delta_varrho)
            diag.froze = True
            if was_frozen:
                # infeasible at already-frozen targets: numerical dead end
                break

    # the returned targets are the ones the returned beams were solved and
    # certified for; the walk's tentative advance only matters mid-loop
    state = replace(state, lam=certified[0], varrho=certified[1])
    return best, state, diag
