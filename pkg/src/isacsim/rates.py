"""Semantic transmission rates, worst-case secrecy rate, and power accounting.

A semantic link compresses each message by the extraction ratio rho in
(0, 1]; the delivered rate is (iota / rho) log2(1 + SINR), so smaller rho
buys rate at the cost of computing power -F ln(rho) at the transmitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SemanticProfile",
    "BeamformerSet",
    "RateReport",
    "transmit_covariance",
    "sinr_intended",
    "sinr_eavesdropper",
    "semantic_rate",
    "rho_lower_bound",
    "secrecy_rate",
    "computing_power",
    "comm_sense_power",
    "rate_report",
]


@dataclass(frozen=True)
class SemanticProfile:
    """Semantic-coding parameters: bit ratio, current extraction ratios, and the
    BLEU-style scores that bound the ratio from below."""

    iota: float = 1.0
    rho: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    bleu_floor: float | None = None
    gram_weights: np.ndarray | None = None
    gram_precisions: np.ndarray | None = None

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if ((rho <= 0) | (rho > 1)).any():
            raise ValueError("extraction ratios must lie in (0, 1]")
        if not self.iota > 0:
            raise ValueError("iota must be > 0")
        object.__setattr__(self, "rho", rho)
        if (self.gram_weights is None) != (self.gram_precisions is None):
            raise ValueError("gram weights and precisions must be given together")
        if self.gram_weights is not None:
            w = np.asarray(self.gram_weights, dtype=float)
            p = np.asarray(self.gram_precisions, dtype=float)
            if w.shape != p.shape:
                raise ValueError("gram weights and precisions must have equal length")
            if (w < 0).any():
                raise ValueError("gram weights must be nonnegative")
            object.__setattr__(self, "gram_weights", w)
            object.__setattr__(self, "gram_precisions", p)


@dataclass
class BeamformerSet:
    """Communication covariances (one per intended vehicle) and sensing
    covariances (one per vehicle). ``w_vec`` holds rank-one factors once
    randomization has run, with w[k] = outer(w_vec[k], w_vec[k].conj())."""

    w: list
    r: list
    w_vec: list | None = None

    def __post_init__(self):
        self.w = [np.asarray(m, dtype=complex) for m in self.w]
        self.r = [np.asarray(m, dtype=complex) for m in self.r]
        for m in self.w + self.r:
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("beamformer covariances must be square")
            if not np.allclose(m, m.conj().T, atol=1e-8):
                raise ValueError("beamformer covariances must be Hermitian")

    @property
    def transmit_covariance(self) -> np.ndarray:
        return transmit_covariance(self)


def transmit_covariance(beams: BeamformerSet) -> np.ndarray:
    """Total transmit covariance: the sum of all communication and sensing
    covariances."""
    mats = list(beams.w) + list(beams.r)
    if not mats:
        raise ValueError("beamformer set is empty")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise ValueError("beamformer covariances disagree in dimension")
    return sum(mats)


def _quad(h: np.ndarray, m: np.ndarray) -> float:
    return float(np.real(h.conj() @ m @ h))


def sinr_intended(k: int, channel: np.ndarray, beams: BeamformerSet, sigma_c2: float) -> float:
    """SINR at intended vehicle k: its own beam over all other beams plus noise."""
    if not sigma_c2 > 0:
        raise ValueError("sigma_c2 must be > 0")
    h = np.asarray(channel, dtype=complex)
    signal = _quad(h, beams.w[k])
    interference = sum(_quad(h, beams.w[j]) for j in range(len(beams.w)) if j != k)
    interference += sum(_quad(h, m) for m in beams.r)
    return max(signal, 0.0) / (max(interference, 0.0) + sigma_c2)


def sinr_eavesdropper(l: int, k: int, channel_l: np.ndarray, beams: BeamformerSet,
                      sigma_c2: float) -> float:
    """SINR of unintended vehicle l on the stream meant for vehicle k, seen
    through l's own channel."""
    return sinr_intended(k, channel_l, beams, sigma_c2)


def semantic_rate(sinr: float, profile: SemanticProfile, k: int = 0) -> float:
    """(iota / rho_k) log2(1 + sinr); reduces to the conventional rate at rho=1, iota=1."""
    return profile.iota / profile.rho[k] * math.log2(1.0 + sinr)


def rho_lower_bound(profile: SemanticProfile) -> tuple[float, bool]:
    """Smallest admissible extraction ratio from the BLEU floor and g-gram scores.

    Returns (bound, clamped): 1 / (1 - ln Q + sum w_g log2 p_g), clamped into
    (0, 1] with a flag when the raw formula exceeds 1.
    """
    if profile.bleu_floor is None or profile.gram_weights is None:
        raise ValueError("profile lacks BLEU floor or g-gram scores")
    q = profile.bleu_floor
    if not 0 < q <= 1:
        raise ValueError("BLEU floor must lie in (0, 1]")
    p = profile.gram_precisions
    if ((p <= 0) | (p > 1)).any():
        raise ValueError("g-gram precisions must lie in (0, 1]")
    denom = 1.0 - math.log(q) + float(np.sum(profile.gram_weights * np.log2(p)))
    raw = math.inf if denom == 0 else 1.0 / denom
    if raw > 1.0:
        return 1.0, True
    if raw <= 0.0:
        # negative denominator: the bound is vacuous, any admissible ratio works
        return 1e-12, True
    return raw, False


@dataclass(frozen=True)
class RateReport:
    """Per-slot communication metrics for one channel realization."""

    sinr: np.ndarray            # (K,)
    semantic: np.ndarray        # (K,) semantic rate, bits/s/Hz
    conventional: np.ndarray    # (K,) log2(1+sinr)
    eaves_sinr: np.ndarray      # (L, K)
    eaves_rate: np.ndarray      # (L, K) semantic rate at the eavesdropper
    ssr: np.ndarray             # (K,)


def secrecy_rate(k: int, rates: RateReport) -> float:
    """Worst-case semantic secrecy rate: min over eavesdroppers of
    [own rate - leaked rate]^+; no eavesdroppers means the full rate."""
    if rates.eaves_rate.shape[0] == 0:
        return float(rates.semantic[k])
    return float(min(max(0.0, rates.semantic[k] - rates.eaves_rate[l, k])
                     for l in range(rates.eaves_rate.shape[0])))


def rate_report(channels_k: list, channels_l: list, beams: BeamformerSet,
                profile: SemanticProfile, sigma_c2: float) -> RateReport:
    """Evaluate all SINRs, rates and secrecy rates for given channels.

    ``channels_k`` are the intended vehicles' channel vectors in beam order;
    ``channels_l`` the unintended vehicles'. The eavesdroppers are assumed to
    share the knowledge base, so leaked rates use the intended rho.
    """
    kk = len(channels_k)
    ll = len(channels_l)
    sinr = np.array([sinr_intended(k, channels_k[k], beams, sigma_c2) for k in range(kk)])
    conventional = np.log2(1.0 + sinr)
    semantic = np.array([semantic_rate(sinr[k], profile, k) for k in range(kk)])
    eaves_sinr = np.array([[sinr_eavesdropper(l, k, channels_l[l], beams, sigma_c2)
                            for k in range(kk)] for l in range(ll)]).reshape(ll, kk)
    eaves_rate = np.array([[semantic_rate(eaves_sinr[l, k], profile, k)
                            for k in range(kk)] for l in range(ll)]).reshape(ll, kk)
    report = RateReport(sinr=sinr, semantic=semantic, conventional=conventional,
                        eaves_sinr=eaves_sinr, eaves_rate=eaves_rate,
                        ssr=np.zeros(kk))
    ssr = np.array([secrecy_rate(k, report) for k in range(kk)])
    return RateReport(sinr=sinr, semantic=semantic, conventional=conventional,
                      eaves_sinr=eaves_sinr, eaves_rate=eaves_rate, ssr=ssr)


def computing_power(rho_values, coeff: float) -> float:
    """Semantic-extraction computing power: -coeff * sum_k ln(rho_k)."""
    rho = np.atleast_1d(np.asarray(rho_values, dtype=float))
    if ((rho <= 0) | (rho > 1)).any():
        raise ValueError("extraction ratios must lie in (0, 1]")
    return -coeff * float(np.sum(np.log(rho)))


def comm_sense_power(beams: BeamformerSet) -> float:
    """Total radiated power: trace of the summed covariances."""
    if not beams.w and not beams.r:
        return 0.0
    return float(np.real(np.trace(transmit_covariance(beams))))
