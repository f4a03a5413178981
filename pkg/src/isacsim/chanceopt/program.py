"""Per-slot conic program: BTI-restricted rate constraints, PCRB epigraph,
and the power budget, over Hermitian PSD beam covariances.

Decision variables are the communication covariances W_k, the sensing
covariances R_i, the per-vehicle information slacks U_i (bounded by the
posterior-FIM LMI), and epigraph variables t_i >= 1/U_i. At fixed rate
targets the objective is to minimize kappa2 * sum_i 1/U_i; the rate-target
term of the outer objective is constant here and handled by the alternating
loop.

The rate targets enter only through the scalars 1/gamma_hat, 1/Gamma_hat and
the power budget, which are cvxpy Parameters: one assembled program is
re-solved cheaply as the alternating optimization walks the targets.

Internally the program is rescaled for conditioning (channels by 1/sigma_c,
the FIM blocks by their isotropic-point magnitudes); all reported values are
in original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from ..arrays import ArrayGeometry, ChannelEstimate
from ..fisher import outer_projectors
from ..rates import BeamformerSet, SemanticProfile
from .bti import BtiBlock, bti_constraints, bti_margin, build_bti_blocks
from .solver import ConicSolver, SolverStatus

__all__ = ["OptimizationContext", "SlotInputs", "SdpProgram", "SdpSolution",
           "assemble_sdp", "solve_sdp_step"]

RESIDUAL_TOL = 1e-6
# tie-break weight: 50x below the sensing term's marginal utility of power,
# so it only acts on directions the objective is otherwise indifferent to
W_TRACE_TIEBREAK = 1e-6


def _rate_ratio(target: float, rho: float, iota: float) -> float:
    """2^(target rho / iota) - 1, saturating to inf instead of overflowing."""
    exponent = target * rho / iota
    if exponent > 1000.0:
        return math.inf
    return 2.0 ** exponent - 1.0


@dataclass(frozen=True)
class OptimizationContext:
    """Scenario-level constants consumed by the per-slot optimizer."""

    geom: ArrayGeometry
    sigma_c2: float
    sigma_r2: float
    n_samples: int
    power_budget: float
    computing_coeff: float
    kappa1: float
    kappa2: float
    eps_intended: float = 0.01
    eps_eaves: float = 0.01
    delta_lambda: float = 0.1
    delta_varrho: float = 0.1
    conv_tol: float = 1e-3
    max_iterations: int = 100
    semantic_enabled: bool = True
    iota: float = 1.0
    rho_floor: float = 0.65
    lambda_init: float = 0.1
    rho_bisect_tol: float = 1e-4
    randomization_candidates: int = 100


@dataclass
class SlotInputs:
    """Per-slot tracker outputs feeding the optimizer.

    Lists are in vehicle order; ``intended`` maps beam index k to vehicle
    index, ``unintended`` maps eavesdropper index l to vehicle index.
    """

    estimates: list
    predicted_states: list
    m_preds: list
    intended: list
    unintended: list

    @property
    def num_vehicles(self) -> int:
        return len(self.estimates)


@dataclass
class SdpSolution:
    status: SolverStatus
    beams: BeamformerSet | None = None
    u: np.ndarray | None = None
    sensing_penalty: float | None = None   # kappa2 * sum 1/U
    accurate: bool = True
    margins: np.ndarray | None = None
    solve_time: float = 0.0
    raw_status: str = ""


@dataclass
class SdpProgram:
    problem: cp.Problem
    w_vars: list
    r_vars: list
    u_var: cp.Variable
    t_var: cp.Variable
    inv_gamma: cp.Parameter
    inv_big_gamma: cp.Parameter | None
    budget: cp.Parameter
    u_scales: np.ndarray
    inputs: SlotInputs
    context: OptimizationContext
    feas_bound_coeff: np.ndarray = field(default_factory=lambda: np.zeros(0))
    structure: dict = field(default_factory=dict)
    current_targets: object | None = None
    current_profile: SemanticProfile | None = None

    def set_targets(self, targets, profile: SemanticProfile) -> None:
        """Load (lambda, varrho, rho) into the parameters; rejects targets whose
        rate-ratio exponents are not positive."""
        ctx = self.context
        gam = np.array([_rate_ratio(targets.lam, profile.rho[k], profile.iota)
                        for k in range(len(self.w_vars))])
        if (gam <= 0).any():
            raise ValueError("intended-rate exponent must be positive")
        with np.errstate(divide="ignore"):
            self.inv_gamma.value = np.where(np.isinf(gam), 0.0, 1.0 / gam)
        if self.inv_big_gamma is not None:
            big = np.array([_rate_ratio(targets.varrho, profile.rho[k], profile.iota)
                            for k in range(len(self.w_vars))])
            if (big <= 0).any():
                raise ValueError("eavesdropper-rate exponent must be positive")
            self.inv_big_gamma.value = np.where(np.isinf(big), 0.0, 1.0 / big)
        if ctx.semantic_enabled:
            self.budget.value = ctx.power_budget + ctx.computing_coeff * float(np.sum(np.log(profile.rho)))
        else:
            self.budget.value = ctx.power_budget
        self.current_targets = targets
        self.current_profile = profile

    def certified_infeasible(self) -> bool:
        """Analytic feasibility pre-check: the intended BTI margin is at most
        (1/gamma_hat) * budget * (lmax(omega) + |h|^2) - 1 in scaled units, so
        a negative bound proves there is no feasible beam set."""
        if self.budget.value is None or self.budget.value <= 0:
            return True
        bound = self.inv_gamma.value * self.budget.value * self.feas_bound_coeff
        return bool((bound < 1.0).any())


def _scaled_estimates(inputs: SlotInputs, sigma_c2: float) -> list[ChannelEstimate]:
    s = math.sqrt(sigma_c2)
    return [ChannelEstimate(h_bar=e.h_bar / s, omega=e.omega / sigma_c2) for e in inputs.estimates]


def assemble_sdp(targets, inputs: SlotInputs, context: OptimizationContext,
                 profile: SemanticProfile | None = None) -> SdpProgram:
    """Build the parameterized conic program for one slot and load ``targets``."""
    n = context.geom.num_antennas
    kk = len(inputs.intended)
    ll = len(inputs.unintended)
    nv = inputs.num_vehicles
    if profile is None:
        profile = SemanticProfile(iota=context.iota, rho=np.asarray(targets.rho, dtype=float))

    w_vars = [cp.Variable((n, n), hermitian=True, name=f"W{k}") for k in range(kk)]
    r_vars = [cp.Variable((n, n), hermitian=True, name=f"R{i}") for i in range(nv)]
    u_var = cp.Variable(nv, nonneg=True, name="U")
    t_var = cp.Variable(nv, nonneg=True, name="t")
    inv_gamma = cp.Parameter(kk, nonneg=True, name="inv_gamma")
    inv_big_gamma = cp.Parameter(kk, nonneg=True, name="inv_big_gamma") if ll else None
    budget = cp.Parameter(name="budget")

    constraints = [v >> 0 for v in w_vars + r_vars]
    rx = sum(w_vars) + sum(r_vars)
    constraints.append(cp.real(cp.trace(rx)) <= budget)

    # outage restrictions on scaled channels (noise power normalized to 1)
    scaled = _scaled_estimates(inputs, context.sigma_c2)
    feas_bound = np.array([
        float(np.linalg.eigvalsh(scaled[vk].omega).max() + np.linalg.norm(scaled[vk].h_bar) ** 2)
        for vk in inputs.intended
    ])
    n_soc = 0
    for k, vk in enumerate(inputs.intended):
        block = build_bti_blocks(k, scaled[vk], w_vars, r_vars, targets, profile,
                                 sigma_c2=1.0, epsilon=context.eps_intended,
                                 inv_ratio=inv_gamma[k])
        constraints += bti_constraints(block)
        n_soc += 1
    for l, vl in enumerate(inputs.unintended):
        for k in range(kk):
            block = build_bti_blocks((l, k), scaled[vl], w_vars, r_vars, targets, profile,
                                     sigma_c2=1.0, epsilon=context.eps_eaves,
                                     inv_ratio=inv_big_gamma[k])
            constraints += bti_constraints(block)
            n_soc += 1

    # posterior-FIM LMI and 1/U epigraph, both scaled to O(1)
    rx_iso = (context.power_budget / n) * np.eye(n)
    coeff = 2.0 * context.n_samples / context.sigma_r2
    u_scales = np.ones(nv)
    one = np.ones((1, 1))
    for i in range(nv):
        state = inputs.predicted_states[i]
        b_mat, bdot = outer_projectors(state.theta, context.geom)
        prior = float(np.linalg.inv(inputs.m_preds[i])[0, 0])
        ctt = coeff * abs(state.beta) ** 2
        cbb = coeff
        s1 = max(1.0, ctt * float(np.real(np.trace(bdot @ rx_iso @ bdot.conj().T))) + prior)
        s2 = max(1.0, cbb * float(np.real(np.trace(b_mat @ rx_iso @ b_mat.conj().T))))
        u_scales[i] = s1
        s12 = math.sqrt(s1 * s2)
        jtt = (ctt / s1) * cp.real(cp.trace(bdot @ rx @ bdot.conj().T))
        z = (coeff * np.conj(state.beta) / s12) * cp.trace(b_mat @ rx @ bdot.conj().T)
        jtb1, jtb2 = cp.real(z), -cp.imag(z)
        jbb = (cbb / s2) * cp.real(cp.trace(b_mat @ rx @ b_mat.conj().T))
        lmi = cp.bmat([
            [cp.reshape(jtt + prior / s1 - u_var[i], (1, 1), order="F"),
             cp.reshape(jtb1, (1, 1), order="F"), cp.reshape(jtb2, (1, 1), order="F")],
            [cp.reshape(jtb1, (1, 1), order="F"), cp.reshape(jbb, (1, 1), order="F"), np.zeros((1, 1))],
            [cp.reshape(jtb2, (1, 1), order="F"), np.zeros((1, 1)), cp.reshape(jbb, (1, 1), order="F")],
        ])
        constraints.append(lmi >> 0)
        epi = cp.bmat([
            [cp.reshape(t_var[i], (1, 1), order="F"), one],
            [one, cp.reshape(u_var[i], (1, 1), order="F")],
        ])
        constraints.append(epi >> 0)

    # sum_i 1/U_i in original units is sum_i t_i / s1_i. The vanishing trace
    # penalty on the communication covariances breaks the tie on the flat
    # optimal face where sensing-only power can sit in either W or R: it
    # steers that power into R, keeping W low-rank for the rank-one recovery.
    objective = cp.Maximize(-context.kappa2 * cp.sum(cp.multiply(1.0 / u_scales, t_var))
                            - W_TRACE_TIEBREAK * sum(cp.real(cp.trace(w)) for w in w_vars))
    problem = cp.Problem(objective, constraints)

    program = SdpProgram(
        problem=problem, w_vars=w_vars, r_vars=r_vars, u_var=u_var, t_var=t_var,
        inv_gamma=inv_gamma, inv_big_gamma=inv_big_gamma, budget=budget,
        u_scales=u_scales, inputs=inputs, context=context,
        feas_bound_coeff=feas_bound,
        structure={
            "psd_matrix_vars": kk + nv,
            "pcrb_lmis": nv,
            "epigraph_blocks": nv,
            "bti_blocks": n_soc,
            "soc_constraints": n_soc,
        },
    )
    program.set_targets(targets, profile)
    return program


def _project_psd(mat: np.ndarray) -> np.ndarray:
    """Hermitian-symmetrize and clamp negative eigenvalues to zero."""
    m = (mat + mat.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(m)
    if vals.min() >= 0:
        return m
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T


def evaluate_margins(beams: BeamformerSet, inputs: SlotInputs, context: OptimizationContext,
                     targets, profile: SemanticProfile) -> np.ndarray:
    """Numeric BTI margins (scaled units) of fixed beams; order follows the
    program's block order (intended first, then (l, k) pairs)."""
    scaled = _scaled_estimates(inputs, context.sigma_c2)
    margins = []
    for k, vk in enumerate(inputs.intended):
        block = build_bti_blocks(k, scaled[vk], beams.w, beams.r, targets, profile,
                                 sigma_c2=1.0, epsilon=context.eps_intended)
        margins.append(bti_margin(block))
    for l, vl in enumerate(inputs.unintended):
        for k in range(len(inputs.intended)):
            block = build_bti_blocks((l, k), scaled[vl], beams.w, beams.r, targets, profile,
                                     sigma_c2=1.0, epsilon=context.eps_eaves)
            margins.append(bti_margin(block))
    return np.array(margins)


def solve_sdp_step(program: SdpProgram, solver: ConicSolver) -> SdpSolution:
    """Solve at the currently loaded targets and extract a verified solution.

    Returned covariances are Hermitian-projected onto the PSD cone. A
    nominally optimal answer whose power or BTI residuals exceed tolerance is
    downgraded to a numerical failure rather than trusted.
    """
    if program.certified_infeasible():
        return SdpSolution(status=SolverStatus.INFEASIBLE,
                           raw_status="target exceeds the power-bounded SINR ceiling")
    result = solver.solve(program.problem)
    if result.status is not SolverStatus.OPTIMAL:
        return SdpSolution(status=result.status, solve_time=result.solve_time,
                           raw_status=result.raw_status)

    w = [_project_psd(v.value) for v in program.w_vars]
    r = [_project_psd(v.value) for v in program.r_vars]
    beams = BeamformerSet(w=w, r=r)
    u = program.u_scales * program.u_var.value
    power = float(np.real(np.trace(sum(w) + sum(r))))
    margins = evaluate_margins(beams, program.inputs, program.context,
                               program.current_targets, program.current_profile)
    ok = power <= program.budget.value + RESIDUAL_TOL and margins.min() >= -RESIDUAL_TOL
    if not ok:
        return SdpSolution(status=SolverStatus.NUMERICAL_FAILURE, beams=beams, u=u,
                           margins=margins, accurate=False,
                           solve_time=result.solve_time,
                           raw_status=f"{result.raw_status} (residuals rejected)")
    penalty = program.context.kappa2 * float(np.sum(1.0 / u))
    return SdpSolution(status=SolverStatus.OPTIMAL, beams=beams, u=u,
                       sensing_penalty=penalty, accurate=result.accurate,
                       margins=margins, solve_time=result.solve_time,
                       raw_status=result.raw_status)
