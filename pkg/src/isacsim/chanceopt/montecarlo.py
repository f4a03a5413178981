"""Monte-Carlo certification of the outage constraints.

Samples CSI errors h = h_bar + Omega^{1/2} e with e ~ CN(0, I) and counts
how often the realized rates break the targets the optimizer promised. The
BTI restriction is conservative, so certified solutions should violate far
less often than the configured tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..arrays import ChannelEstimate, hermitian_sqrt
from ..rates import BeamformerSet, SemanticProfile

__all__ = ["OutageEstimate", "OutageReport", "wilson_interval", "validate_outage_mc"]


@dataclass(frozen=True)
class OutageEstimate:
    """Empirical violation probability with a Wilson-score interval."""

    violations: int
    samples: int
    rate: float
    wilson_se: float
    wilson_upper: float


@dataclass(frozen=True)
class OutageReport:
    intended: list      # one OutageEstimate per intended vehicle (rate < lambda)
    eaves: list         # one OutageEstimate per (l, k) pair (rate > varrho)


def wilson_interval(violations: int, samples: int, z: float = 1.0) -> tuple[float, float]:
    """Wilson-score center and standard error for a binomial proportion."""
    p_hat = violations / samples
    denom = 1.0 + z**2 / samples
    center = (p_hat + z**2 / (2 * samples)) / denom
    se = math.sqrt(p_hat * (1 - p_hat) / samples + z**2 / (4 * samples**2)) / denom
    return center, se


def _estimate(violations: int, samples: int) -> OutageEstimate:
    center, se = wilson_interval(violations, samples)
    return OutageEstimate(violations=violations, samples=samples,
                          rate=violations / samples, wilson_se=se,
                          wilson_upper=center + 3.0 * se)


def validate_outage_mc(beams: BeamformerSet, estimates: list, intended: list, unintended: list,
                       targets, profile: SemanticProfile, sigma_c2: float,
                       n_samples: int, seed) -> OutageReport:
    """Empirical outage rates of fixed beams under the given channel estimates.

    ``estimates`` is indexed by vehicle; ``intended``/``unintended`` map beam
    and eavesdropper order to vehicle indices, as in the optimizer inputs.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples for a meaningful certificate")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    kk = len(intended)

    def sample_channels(est: ChannelEstimate) -> np.ndarray:
        n = est.num_antennas
        e = (rng.standard_normal((n_samples, n)) + 1j * rng.standard_normal((n_samples, n))) / np.sqrt(2.0)
        return est.h_bar[None, :] + e @ hermitian_sqrt(est.omega).T

    def quad(h: np.ndarray, mat: np.ndarray) -> np.ndarray:
        return np.maximum(np.real(np.einsum("ni,ij,nj->n", h.conj(), mat, h)), 0.0)

    def rates_for(h: np.ndarray, k: int) -> np.ndarray:
        signal = quad(h, beams.w[k])
        interf = sum(quad(h, beams.w[j]) for j in range(kk) if j != k)
        interf = interf + sum(quad(h, m) for m in beams.r)
        sinr = signal / (interf + sigma_c2)
        return profile.iota / profile.rho[k] * np.log2(1.0 + sinr)

    intended_out = []
    for k, vk in enumerate(intended):
        h = sample_channels(estimates[vk])
        viol = int(np.count_nonzero(rates_for(h, k) < targets.lam))
        intended_out.append(_estimate(viol, n_samples))

    eaves_out = []
    for vl in unintended:
        h = sample_channels(estimates[vl])
        for k in range(kk):
            viol = int(np.count_nonzero(rates_for(h, k) > targets.varrho))
            eaves_out.append(_estimate(viol, n_samples))

    return OutageReport(intended=intended_out, eaves=eaves_out)
