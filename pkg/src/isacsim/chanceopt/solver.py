"""Pluggable conic-solver boundary.

A solver consumes a conic program (linear objective; affine constraints over
nonnegative, second-order-cone, and PSD cone variables — here expressed as a
cvxpy problem, which is exactly that conic form) and answers with a status
plus primal values. Adapting another backend means implementing
``ConicSolver.solve`` and mapping its termination codes onto
``SolverStatus``; everything downstream only sees the mapped status and the
variable values.
"""

from __future__ import annotations

import time
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import cvxpy as cp

__all__ = ["SolverStatus", "SolverResult", "ConicSolver", "CvxpySolver"]


class SolverStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverResult:
    status: SolverStatus
    objective: float | None = None
    accurate: bool = True
    solve_time: float = 0.0
    raw_status: str = ""
    details: dict = field(default_factory=dict)


class ConicSolver(ABC):
    """Contract for conic backends: solve in place, report a mapped status.

    Implementations must leave primal values on the problem's variables when
    the status is OPTIMAL, with PSD variables accurate to -1e-6 in minimum
    eigenvalue and constraint residuals within 1e-6.
    """

    @abstractmethod
    def solve(self, problem: cp.Problem) -> SolverResult:
        raise NotImplementedError


class CvxpySolver(ConicSolver):
    """Backend driving any installed cvxpy conic solver (default CLARABEL).

    Feasibility tolerances of 1e-8 are requested; reduced-accuracy
    terminations are accepted but reported with ``accurate=False`` so callers
    can re-verify residuals.
    """

    _OPTIMAL = {cp.OPTIMAL}
    _OPTIMAL_LOOSE = {cp.OPTIMAL_INACCURATE}
    _INFEASIBLE = {cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE}

    def __init__(self, solver_name: str = "CLARABEL", **options):
        self.solver_name = solver_name
        self.options = options
        if solver_name == "CLARABEL":
            self.options.setdefault("tol_feas", 1e-8)
            self.options.setdefault("tol_gap_abs", 1e-8)
            self.options.setdefault("tol_gap_rel", 1e-8)

    def _attempts(self):
        yield self.options
        if self.solver_name == "CLARABEL":
            # boundary-degenerate instances can abort instead of certifying
            # infeasibility; a stronger static regularization resolves them
            yield {**self.options, "static_regularization_constant": 1e-7}

    def solve(self, problem: cp.Problem) -> SolverResult:
        start = time.perf_counter()
        error = None
        for options in self._attempts():
            try:
                with warnings.catch_warnings():
                    # reduced-accuracy terminations are reported via
                    # `accurate` and re-verified downstream
                    warnings.simplefilter("ignore", UserWarning)
                    problem.solve(solver=self.solver_name, **options)
                error = None
                break
            except cp.error.SolverError as exc:
                error = exc
        if error is not None:
            return SolverResult(
                status=SolverStatus.NUMERICAL_FAILURE,
                solve_time=time.perf_counter() - start,
                raw_status=f"solver_error: {error}",
            )
        elapsed = time.perf_counter() - start
        raw = problem.status or "none"
        if raw in self._OPTIMAL or raw in self._OPTIMAL_LOOSE:
            return SolverResult(
                status=SolverStatus.OPTIMAL,
                objective=float(problem.value),
                accurate=raw in self._OPTIMAL,
                solve_time=elapsed,
                raw_status=raw,
            )
        if raw in self._INFEASIBLE:
            return SolverResult(status=SolverStatus.INFEASIBLE, solve_time=elapsed, raw_status=raw)
        return SolverResult(status=SolverStatus.NUMERICAL_FAILURE, solve_time=elapsed, raw_status=raw)
