"""Uniform linear array responses and probabilistic channel construction.

Conventions: the phase reference sits on element 0, theta = 0 is broadside,
and element spacing is expressed as a fraction of the carrier wavelength.
All angles are radians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ChannelEstimate",
    "steering_vector",
    "steering_derivative",
    "predicted_channel",
    "true_channel",
    "sample_csi_error",
    "hermitian_sqrt",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``num_antennas`` elements spaced ``element_spacing`` wavelengths apart."""

    num_antennas: int
    element_spacing: float = 0.5

    def __post_init__(self):
        if int(self.num_antennas) < 1:
            raise ValueError("num_antennas must be >= 1")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be > 0")


@dataclass(frozen=True)
class ChannelEstimate:
    """Predicted channel mean ``h_bar`` with Hermitian PSD CSI-error covariance ``omega``."""

    h_bar: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h_bar, dtype=complex))
        om = np.asarray(self.omega, dtype=complex)
        if om.shape != (h.size, h.size):
            raise ValueError(f"omega shape {om.shape} does not match channel length {h.size}")
        if not np.allclose(om, om.conj().T, atol=1e-10):
            raise ValueError("omega must be Hermitian")
        if h.size and np.linalg.eigvalsh(om).min() < -1e-10:
            raise ValueError("omega must be positive semidefinite")
        object.__setattr__(self, "h_bar", h)
        object.__setattr__(self, "omega", om)

    @property
    def num_antennas(self) -> int:
        return self.h_bar.size


def steering_vector(theta: float, geom: ArrayGeometry) -> np.ndarray:
    """Array response a(theta): entry n is exp(j 2 pi spacing n sin(theta))."""
    n = np.arange(geom.num_antennas)
    return np.exp(1j * 2.0 * np.pi * geom.element_spacing * n * np.sin(theta))


def steering_derivative(theta: float, geom: ArrayGeometry) -> np.ndarray:
    """d a(theta) / d theta, element-wise; entry 0 is always 0."""
    n = np.arange(geom.num_antennas)
    phase_rate = 1j * 2.0 * np.pi * geom.element_spacing * n * np.cos(theta)
    return phase_rate * steering_vector(theta, geom)


def predicted_channel(belief, geom: ArrayGeometry, omega_scale: float = 0.01) -> ChannelEstimate:
    """Channel predicted from a track: h_bar = beta_hat * a(theta_hat).

    ``belief`` is either a track belief (its ``q_pred`` is used) or a bare
    state. The CSI-error covariance is isotropic, omega_scale * I.
    """
    state = getattr(belief, "q_pred", belief)
    if state is None:
        raise ValueError("belief holds no predicted state")
    h_bar = state.beta * steering_vector(state.theta, geom)
    omega = omega_scale * np.eye(geom.num_antennas)
    return ChannelEstimate(h_bar=h_bar, omega=omega)


def true_channel(state, geom: ArrayGeometry) -> np.ndarray:
    """Ground-truth channel beta * a(theta) for the given vehicle state."""
    return state.beta * steering_vector(state.theta, geom)


def hermitian_sqrt(omega: np.ndarray, eig_floor: float = -1e-8) -> np.ndarray:
    """Matrix square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues in [eig_floor, 0) are clamped to 0; anything below
    eig_floor raises, since the matrix is then meaningfully indefinite.
    """
    omega = np.asarray(omega, dtype=complex)
    vals, vecs = np.linalg.eigh((omega + omega.conj().T) / 2.0)
    if vals.min() < eig_floor:
        raise ValueError(f"matrix has eigenvalue {vals.min():.3e} below {eig_floor:.1e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def sample_csi_error(est: ChannelEstimate, rng) -> np.ndarray:
    """One CSI error draw omega^{1/2} e with e ~ CN(0, I).

    ``rng`` is a seed or a numpy Generator; fixed seeds reproduce draws.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    n = est.num_antennas
    e = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return hermitian_sqrt(est.omega) @ e
