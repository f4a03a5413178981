"""Rank-one recovery of communication covariances by Gaussian randomization.

The SDP relaxes rank(W_k) = 1; this module restores it. Near-rank-one
matrices take their principal eigenvector directly. Otherwise candidate
vectors w = W^{1/2} g with g ~ CN(0, I) are drawn jointly for all intended
vehicles, rescaled to preserve each trace (so total power never changes),
and the candidate set with the best worst-case BTI margin wins. Sensing
covariances stay general PSD matrices.
"""

from __future__ import annotations

import numpy as np

from ..arrays import hermitian_sqrt
from ..errors import NoFeasibleCandidate
from ..rates import BeamformerSet, SemanticProfile
from .program import OptimizationContext, SdpSolution, SlotInputs, evaluate_margins

__all__ = ["gaussian_randomization"]

RANK_ONE_EIG_RATIO = 1e-6
# margins live in noise-normalized units where signal terms are O(100); dips
# within this tolerance are rank-one projection noise, not real violations
MARGIN_TOL = 1e-3


def _principal_factor(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((w + w.conj().T) / 2.0)
    v = vecs[:, -1] * np.sqrt(max(vals[-1], 0.0))
    trace = float(np.real(np.trace(w)))
    norm2 = float(np.real(v.conj() @ v))
    return v * np.sqrt(trace / norm2) if norm2 > 0 else v


def gaussian_randomization(solution: SdpSolution, inputs: SlotInputs,
                           context: OptimizationContext, seed,
                           targets=None, profile: SemanticProfile | None = None) -> BeamformerSet:
    """Return beams whose W_k are exactly rank-one with traces preserved.

    Raises NoFeasibleCandidate (carrying the best candidate) when every draw
    violates a BTI restriction; the caller decides whether to transmit the
    best-effort candidate anyway.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    beams = solution.beams
    kk = len(beams.w)

    needs_sampling = []
    fixed_vecs: list = [None] * kk
    for k, w in enumerate(beams.w):
        vals = np.linalg.eigvalsh((w + w.conj().T) / 2.0)
        top = max(vals[-1], 0.0)
        second = max(vals[-2], 0.0) if vals.size > 1 else 0.0
        if top <= 0 or second / top <= RANK_ONE_EIG_RATIO:
            fixed_vecs[k] = _principal_factor(w)
        else:
            needs_sampling.append(k)

    def assemble(vecs) -> BeamformerSet:
        w_mats = [np.outer(v, v.conj()) for v in vecs]
        return BeamformerSet(w=w_mats, r=[m.copy() for m in beams.r], w_vec=list(vecs))

    if not needs_sampling:
        return assemble(fixed_vecs)

    if targets is None or profile is None:
        raise ValueError("randomization over non-rank-one W needs the active targets")

    sqrts = {k: hermitian_sqrt(beams.w[k]) for k in needs_sampling}
    traces = {k: float(np.real(np.trace(beams.w[k]))) for k in needs_sampling}
    n = beams.w[0].shape[0]

    best_margin = -np.inf
    best_beams = None
    for _ in range(context.randomization_candidates):
        vecs = list(fixed_vecs)
        for k in needs_sampling:
            g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
            v = sqrts[k] @ g
            norm2 = float(np.real(v.conj() @ v))
            vecs[k] = v * np.sqrt(traces[k] / norm2) if norm2 > 0 else v
        candidate = assemble(vecs)
        margin = float(evaluate_margins(candidate, inputs, context, targets, profile).min())
        if margin > best_margin:
            best_margin = margin
            best_beams = candidate

    if best_margin < -MARGIN_TOL:
        raise NoFeasibleCandidate(
            f"all {context.randomization_candidates} candidates violate a restriction "
            f"(best margin {best_margin:.3e})",
            best_beams=best_beams, best_margin=best_margin)
    return best_beams
