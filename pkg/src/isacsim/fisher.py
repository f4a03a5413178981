"""Fisher information of the echo observation and the posterior CRB on angle.

The estimated parameters are (theta, beta) with complex beta counted as two
real parameters, giving a 3x3 posterior information matrix. With
B = a a^H and Bdot = da a^H + a da^H, the observation blocks are

    J_tt = (2 T |beta|^2 / sigma_r^2) Tr(Bdot R_x Bdot^H)
    J_tb = (2 T conj(beta) / sigma_r^2) Re{ Tr(B R_x Bdot^H) [1  j] }
    J_bb = (2 T / sigma_r^2) Tr(B R_x B^H) I_2

and the prior contributes the [theta, theta] element of the inverse
predicted MSE matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_derivative, steering_vector
from .errors import NumericalFailure

__all__ = ["FisherBlocks", "PcrbReport", "fim_observation", "fim_posterior", "pcrb_theta"]


@dataclass(frozen=True)
class FisherBlocks:
    """Observation-FIM blocks for one vehicle: scalar, 1x2 row, 2x2 matrix."""

    j_tt: float
    j_tb: np.ndarray
    j_bb: np.ndarray


@dataclass(frozen=True)
class PcrbReport:
    pcrb_theta: float
    prior_info: float


def outer_projectors(theta: float, geom: ArrayGeometry):
    """B = a a^H and its angle derivative Bdot at the given bearing."""
    a = steering_vector(theta, geom)
    da = steering_derivative(theta, geom)
    b = np.outer(a, a.conj())
    bdot = np.outer(da, a.conj()) + np.outer(a, da.conj())
    return b, bdot


def fim_observation(state_est, r_x: np.ndarray, n_samples: int, sigma_r2: float,
                    geom: ArrayGeometry) -> FisherBlocks:
    """Observation Fisher blocks under transmit covariance ``r_x``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not sigma_r2 > 0:
        raise ValueError("sigma_r2 must be > 0")
    r_x = np.asarray(r_x, dtype=complex)
    if np.linalg.eigvalsh((r_x + r_x.conj().T) / 2).min() < -1e-8:
        raise ValueError("transmit covariance must be positive semidefinite")

    b, bdot = outer_projectors(state_est.theta, geom)
    beta = state_est.beta
    scale = 2.0 * n_samples / sigma_r2
    j_tt = scale * abs(beta) ** 2 * float(np.real(np.trace(bdot @ r_x @ bdot.conj().T)))
    z = scale * np.conj(beta) * np.trace(b @ r_x @ bdot.conj().T)
    j_tb = np.array([z.real, (1j * z).real])
    j_bb = scale * float(np.real(np.trace(b @ r_x @ b.conj().T))) * np.eye(2)
    return FisherBlocks(j_tt=j_tt, j_tb=j_tb, j_bb=j_bb)


def fim_posterior(obs: FisherBlocks, m_pred: np.ndarray) -> np.ndarray:
    """3x3 posterior FIM: observation blocks plus the prior's theta information."""
    m_pred = np.asarray(m_pred, dtype=float)
    if np.linalg.cond(m_pred) > 1e12:
        raise NumericalFailure("predicted MSE matrix is numerically singular")
    prior = np.linalg.inv(m_pred)[0, 0]
    j = np.zeros((3, 3))
    j[0, 0] = obs.j_tt + prior
    j[0, 1:] = obs.j_tb
    j[1:, 0] = obs.j_tb
    j[1:, 1:] = obs.j_bb
    return j


def pcrb_theta(j_post: np.ndarray) -> float:
    """Angle PCRB: the [0,0] element of the inverse posterior FIM, computed
    through the Schur complement of the beta block."""
    j_post = np.asarray(j_post, dtype=float)
    schur = j_post[0, 0] - j_post[0, 1:] @ np.linalg.solve(j_post[1:, 1:], j_post[1:, 0])
    if schur <= 0:
        raise NumericalFailure(f"non-identifiable geometry (Schur complement {schur:.3e})")
    return 1.0 / schur
