"""Chance-constrained beam design: BTI restriction, conic program, alternating
optimization, rank-one recovery, and Monte-Carlo certification."""

from .ao import (AoDiagnostics, AoState, ao_loop, bisect_rho, fresh_targets,
                 isotropic_beams, update_targets)
from .bti import BtiBlock, bti_constraints, bti_margin, build_bti_blocks
from .montecarlo import OutageEstimate, OutageReport, validate_outage_mc, wilson_interval
from .program import (OptimizationContext, SdpProgram, SdpSolution, SlotInputs,
                      assemble_sdp, evaluate_margins, solve_sdp_step)
from .randomization import gaussian_randomization
from .solver import ConicSolver, CvxpySolver, SolverResult, SolverStatus

__all__ = [
    "AoDiagnostics", "AoState", "ao_loop", "bisect_rho", "fresh_targets",
    "isotropic_beams", "update_targets",
    "BtiBlock", "bti_constraints", "bti_margin", "build_bti_blocks",
    "OutageEstimate", "OutageReport", "validate_outage_mc", "wilson_interval",
    "OptimizationContext", "SdpProgram", "SdpSolution", "SlotInputs",
    "assemble_sdp", "evaluate_margins", "solve_sdp_step",
    "gaussian_randomization",
    "ConicSolver", "CvxpySolver", "SolverResult", "SolverStatus",
]
