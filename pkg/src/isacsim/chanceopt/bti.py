"""Bernstein-type-inequality restriction of the Gaussian outage constraints.

A rate target under CSI error h = h_bar + Omega^{1/2} e, e ~ CN(0, I),
reduces to the quadratic-form event  e^H Q e + 2 Re{e^H r} + s >= 0  with

    intended k:      chi = (1/gamma_hat) W_k - sum_{k' != k} W_k' - sum_i R_i
                     s   = h_bar^H chi h_bar - sigma_c^2
    eavesdropper l|k: chi = sum_i R_i - (1/Gamma_hat) W_k
                     s   = h_bar^H chi h_bar + sigma_c^2

where Q = Omega^{1/2} chi Omega^{1/2} and r = Omega^{1/2} chi h_bar. The
deterministic restriction guaranteeing the event with probability 1 - eps is

    Tr(Q) - sqrt(2 ln(1/eps)) a + ln(eps) b + s >= 0
    || [vec(Q); sqrt(2) r] || <= a,     b I + Q >= 0,     b >= 0.

The builders below accept either cvxpy expressions (beams as decision
variables) or numpy arrays (fixed beams), so the same construction drives
the optimizer, the randomization margins, and the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from ..arrays import ChannelEstimate, hermitian_sqrt

__all__ = ["BtiBlock", "build_bti_blocks", "bti_constraints", "bti_margin"]


@dataclass
class BtiBlock:
    """Quadratic-form data (Q, r, s) of one outage constraint plus its
    tolerance; slack variables are attached when the block is symbolic."""

    q_mat: object
    r_vec: object
    s_scalar: object
    epsilon: float
    slack_a: object | None = None
    slack_b: object | None = None

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.q_mat, cp.expressions.expression.Expression)


def _is_expr(x) -> bool:
    return isinstance(x, cp.expressions.expression.Expression)


def _real(x):
    return cp.real(x) if _is_expr(x) else float(np.real(x))


def _ratio_targets(lam: float, rho: float, iota: float) -> float:
    """gamma_hat = 2^(lam rho / iota) - 1; rejects non-positive exponents."""
    if not lam * rho / iota > 0:
        raise ValueError(f"rate target exponent must be > 0 (got {lam * rho / iota:.3g})")
    return 2.0 ** (lam * rho / iota) - 1.0


def build_bti_blocks(index, est: ChannelEstimate, w_mats, r_mats, targets, profile,
                     sigma_c2: float, epsilon: float = 0.01, inv_ratio=None) -> BtiBlock:
    """BTI block for intended vehicle ``index=k`` or pair ``index=(l, k)``.

    ``w_mats``/``r_mats`` may be cvxpy expressions or numpy arrays; the block
    is affine in them either way. ``inv_ratio`` overrides the computed
    1/gamma_hat (resp. 1/Gamma_hat), which lets a parameterized program reuse
    the same construction. The eavesdropper block deliberately counts only
    sensing covariances as interference (the conservative worst case used by
    the optimizer), while reported metrics include all beams.
    """
    eaves = isinstance(index, tuple)
    k = index[1] if eaves else index
    sensing = sum(r_mats) if len(r_mats) else 0.0

    if eaves:
        if inv_ratio is None:
            inv_ratio = 1.0 / _ratio_targets(targets.varrho, float(profile.rho[k]), profile.iota)
        chi = sensing - inv_ratio * w_mats[k]
        s_noise = +sigma_c2
    else:
        if inv_ratio is None:
            inv_ratio = 1.0 / _ratio_targets(targets.lam, float(profile.rho[k]), profile.iota)
        interference = sum(w_mats[j] for j in range(len(w_mats)) if j != k)
        chi = inv_ratio * w_mats[k] - interference - sensing
        s_noise = -sigma_c2

    sqrt_omega = hermitian_sqrt(est.omega)
    h = est.h_bar
    q_mat = sqrt_omega @ chi @ sqrt_omega
    r_vec = sqrt_omega @ (chi @ h)
    s_scalar = _real(h.conj() @ (chi @ h)) + s_noise
    return BtiBlock(q_mat=q_mat, r_vec=r_vec, s_scalar=s_scalar, epsilon=epsilon)


def bti_constraints(block: BtiBlock) -> list:
    """Convex constraint set of a symbolic block; attaches fresh slacks."""
    if not block.is_symbolic:
        raise TypeError("constraints require a symbolic block; use bti_margin for numeric data")
    n = block.q_mat.shape[0]
    a = cp.Variable(nonneg=True)
    b = cp.Variable(nonneg=True)
    block.slack_a, block.slack_b = a, b
    c_eps = math.sqrt(2.0 * math.log(1.0 / block.epsilon))
    return [
        cp.real(cp.trace(block.q_mat)) - c_eps * a + math.log(block.epsilon) * b + block.s_scalar >= 0,
        cp.norm(cp.hstack([cp.vec(block.q_mat, order="F"), math.sqrt(2.0) * block.r_vec])) <= a,
        b * np.eye(n) + block.q_mat >> 0,
    ]


def bti_margin(block: BtiBlock) -> float:
    """Deterministic restriction margin of a numeric block at the tight slacks
    a* = ||[vec(Q); sqrt(2) r]||, b* = max(0, -lambda_min(Q)); nonnegative
    margin certifies the outage constraint."""
    if block.is_symbolic:
        raise TypeError("margin requires numeric data; solve the program first")
    q = np.asarray(block.q_mat, dtype=complex)
    r = np.asarray(block.r_vec, dtype=complex)
    a_star = math.sqrt(np.linalg.norm(q, "fro") ** 2 + 2.0 * float(np.linalg.norm(r) ** 2))
    b_star = max(0.0, -float(np.linalg.eigvalsh((q + q.conj().T) / 2).min()))
    c_eps = math.sqrt(2.0 * math.log(1.0 / block.epsilon))
    return float(np.real(np.trace(q))) - c_eps * a_star + math.log(block.epsilon) * b_star + float(block.s_scalar)
