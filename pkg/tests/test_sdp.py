import math

import cvxpy as cp
import numpy as np
import pytest

from isacsim.arrays import ArrayGeometry, predicted_channel
from isacsim.chanceopt import (AoState, CvxpySolver, SlotInputs, SolverStatus, assemble_sdp,
                               evaluate_margins, solve_sdp_step)
from isacsim.chanceopt.program import OptimizationContext
from isacsim.kinematics import VehicleState
from isacsim.rates import SemanticProfile, comm_sense_power

SOLVER = CvxpySolver("CLARABEL")


def make_context(n=4, kappa2=0.5, **overrides):
    defaults = dict(
        geom=ArrayGeometry(num_antennas=n),
        sigma_c2=1e-6,
        sigma_r2=1e-6,
        n_samples=64,
        power_budget=0.1,
        computing_coeff=0.01,
        kappa1=0.5,
        kappa2=kappa2,
        eps_intended=0.01,
        eps_eaves=0.01,
        semantic_enabled=True,
        rho_floor=0.65,
    )
    defaults.update(overrides)
    return OptimizationContext(**defaults)


def make_inputs(context, d_eaves=55.0):
    geom = context.geom
    intended_state = VehicleState(theta=math.radians(15), distance=8.0, velocity=5.0,
                                  beta=4e-3)
    eaves_state = VehicleState(theta=math.radians(5), distance=d_eaves, velocity=20.0,
                               beta=4e-3 * 8.0 / d_eaves)
    states = [intended_state, eaves_state]
    ests = [predicted_channel(s, geom, omega_scale=0.01 * abs(s.beta) ** 2) for s in states]
    m_preds = [np.diag([4e-4, 0.04, 0.25, 0.01]), np.diag([4e-4, 0.04, 0.25, 0.01])]
    return SlotInputs(estimates=ests, predicted_states=states, m_preds=m_preds,
                      intended=[0], unintended=[1])


def nominal_targets(lam=0.5, varrho=1.0):
    return AoState(lam=lam, varrho=varrho, rho=np.array([0.65]))


def test_solver_interface_lp_smoke():
    t = cp.Variable()
    problem = cp.Problem(cp.Maximize(t), [t <= 1])
    result = SOLVER.solve(problem)
    assert result.status is SolverStatus.OPTIMAL
    assert t.value == pytest.approx(1.0, abs=1e-6)


def test_solver_interface_maps_infeasible():
    t = cp.Variable(nonneg=True)
    problem = cp.Problem(cp.Maximize(t), [t <= -1])
    result = SOLVER.solve(problem)
    assert result.status is SolverStatus.INFEASIBLE


def test_program_structure_counts():
    context = make_context(n=4)
    inputs = make_inputs(context)
    program = assemble_sdp(nominal_targets(), inputs, context)
    # K=1 communication + K+L=2 sensing covariances
    assert program.structure["psd_matrix_vars"] == 3
    # one PCRB LMI and one epigraph block per vehicle
    assert program.structure["pcrb_lmis"] == 2
    assert program.structure["epigraph_blocks"] == 2
    assert program.structure["pcrb_lmis"] + program.structure["epigraph_blocks"] == 4
    # one BTI block per intended vehicle plus one per (l, k) pair
    assert program.structure["bti_blocks"] == 2
    assert all(v.shape == (4, 4) for v in program.w_vars + program.r_vars)


def test_solve_loose_targets_satisfies_restrictions():
    context = make_context(n=4)
    inputs = make_inputs(context)
    targets = nominal_targets(lam=0.2, varrho=1.5)
    program = assemble_sdp(targets, inputs, context)
    sol = solve_sdp_step(program, SOLVER)
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.margins.min() >= -1e-6
    budget = context.power_budget + context.computing_coeff * math.log(0.65)
    assert comm_sense_power(sol.beams) <= budget + 1e-6
    # PSD within tolerance after projection
    for m in sol.beams.w + sol.beams.r:
        assert np.linalg.eigvalsh((m + m.conj().T) / 2).min() >= -1e-6
    # re-evaluated margins agree with an independent evaluation call
    profile = SemanticProfile(iota=1.0, rho=np.array([0.65]))
    again = evaluate_margins(sol.beams, inputs, context, targets, profile)
    assert np.allclose(again, sol.margins, atol=1e-12)


def test_epigraph_is_tight_at_optimum():
    context = make_context(n=4)
    inputs = make_inputs(context)
    program = assemble_sdp(nominal_targets(lam=0.2, varrho=1.5), inputs, context)
    sol = solve_sdp_step(program, SOLVER)
    assert sol.status is SolverStatus.OPTIMAL
    t_scaled = program.t_var.value
    u_scaled = program.u_var.value
    assert np.all(np.abs(t_scaled * u_scaled - 1.0) < 1e-4)


def test_unreachable_rate_target_is_infeasible():
    context = make_context(n=4)
    inputs = make_inputs(context)
    program = assemble_sdp(nominal_targets(lam=1e6, varrho=1.5), inputs, context)
    sol = solve_sdp_step(program, SOLVER)
    assert sol.status is SolverStatus.INFEASIBLE


def test_zero_kappa2_returns_feasible_point():
    context = make_context(n=4, kappa2=0.0)
    inputs = make_inputs(context)
    program = assemble_sdp(nominal_targets(lam=0.2, varrho=1.5), inputs, context)
    sol = solve_sdp_step(program, SOLVER)
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.margins.min() >= -1e-6


def test_parameter_update_changes_solution():
    context = make_context(n=4)
    inputs = make_inputs(context)
    profile = SemanticProfile(iota=1.0, rho=np.array([0.65]))
    program = assemble_sdp(nominal_targets(lam=0.2, varrho=1.5), inputs, context, profile)
    sol_low = solve_sdp_step(program, SOLVER)
    program.set_targets(nominal_targets(lam=3.0, varrho=0.4), profile)
    sol_high = solve_sdp_step(program, SOLVER)
    assert sol_low.status is SolverStatus.OPTIMAL
    assert sol_high.status is SolverStatus.OPTIMAL
    # tighter targets must actually move the beams
    delta = max(np.linalg.norm(a - b, "fro")
                for a, b in zip(sol_low.beams.w, sol_high.beams.w))
    assert delta > 1e-6


def test_set_targets_rejects_zero_varrho():
    context = make_context(n=4)
    inputs = make_inputs(context)
    program = assemble_sdp(nominal_targets(), inputs, context)
    with pytest.raises(ValueError):
        program.set_targets(AoState(lam=1.0, varrho=0.0, rho=np.array([0.65])),
                            SemanticProfile(iota=1.0, rho=np.array([0.65])))
