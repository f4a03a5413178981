"""Ground-truth vehicle state evolution along a road parallel to the sensing array.

The state is (theta, distance, velocity, beta): bearing and range to the
roadside unit, along-road speed, and the complex round-trip reflection
coefficient. One slot of motion follows

    theta' = theta + v dT sin(theta) / d
    d'     = d - v dT cos(theta)
    v'     = v
    beta'  = beta * (1 + v dT cos(theta) / d)

plus additive process noise on each coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VehicleState",
    "ProcessNoise",
    "SlotClock",
    "evolve_state",
    "jacobian_g1",
    "simulate_trajectory",
]


@dataclass(frozen=True)
class VehicleState:
    theta: float
    distance: float
    velocity: float
    beta: complex

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"distance must be > 0, got {self.distance}")
        if not math.isfinite(self.velocity):
            raise ValueError("velocity must be finite")
        if not abs(self.beta) > 0:
            raise ValueError("beta must be nonzero")

    def as_array(self) -> np.ndarray:
        """Real 4-vector (theta, d, v, |beta|) used by filters and Jacobians."""
        return np.array([self.theta, self.distance, self.velocity, abs(self.beta)])


@dataclass(frozen=True)
class ProcessNoise:
    """Diagonal process-noise covariance: variances of (theta, d, v, beta)."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if v.shape != (4,):
            raise ValueError("process noise needs exactly 4 variances")
        if (v < 0).any():
            raise ValueError("process-noise variances must be >= 0")
        object.__setattr__(self, "variances", v)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.variances)


@dataclass(frozen=True)
class SlotClock:
    delta_t: float
    slot_index: int = 0

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be > 0")


def evolve_state(s: VehicleState, clock: SlotClock, noise_draw=None) -> VehicleState:
    """Advance one slot. ``noise_draw`` is a 4-vector (u_beta may be complex) or None.

    Raises ValueError when the new distance is <= 0, i.e. the vehicle
    reached the array's projection point and the scenario should have ended.
    """
    u = np.zeros(4, dtype=complex) if noise_draw is None else np.asarray(noise_draw, dtype=complex)
    dt = clock.delta_t
    ratio = s.velocity * dt / s.distance
    theta2 = s.theta + ratio * math.sin(s.theta) + u[0].real
    d2 = s.distance - s.velocity * dt * math.cos(s.theta) + u[1].real
    v2 = s.velocity + u[2].real
    beta2 = s.beta * (1.0 + ratio * math.cos(s.theta)) + u[3]
    if d2 <= 0:
        raise ValueError(f"distance became non-positive ({d2:.4g} m); vehicle passed the array")
    return VehicleState(theta=theta2, distance=d2, velocity=v2, beta=beta2)


def jacobian_g1(s: VehicleState, clock: SlotClock) -> np.ndarray:
    """Jacobian of the state map over (theta, d, v, |beta|), evaluated at ``s``.

    The beta row linearizes the real multiplicative factor applied to the
    magnitude; the phase is carried along but not tracked.
    """
    dt = clock.delta_t
    sin_t, cos_t = math.sin(s.theta), math.cos(s.theta)
    d, v, b = s.distance, s.velocity, abs(s.beta)
    ratio = v * dt / d
    g = np.zeros((4, 4))
    g[0, 0] = 1.0 + ratio * cos_t
    g[0, 1] = -v * dt * sin_t / d**2
    g[0, 2] = dt * sin_t / d
    g[1, 0] = v * dt * sin_t
    g[1, 1] = 1.0
    g[1, 2] = -dt * cos_t
    g[2, 2] = 1.0
    g[3, 0] = -b * ratio * sin_t
    g[3, 1] = -b * v * dt * cos_t / d**2
    g[3, 2] = b * dt * cos_t / d
    g[3, 3] = 1.0 + ratio * cos_t
    return g


def draw_process_noise(noise: ProcessNoise, rng: np.random.Generator) -> np.ndarray:
    """One noise draw; the beta component is complex with its variance split
    evenly between real and imaginary parts."""
    std = np.sqrt(noise.variances)
    u = np.zeros(4, dtype=complex)
    u[:3] = rng.standard_normal(3) * std[:3]
    u[3] = (rng.standard_normal() + 1j * rng.standard_normal()) * std[3] / np.sqrt(2.0)
    return u


def simulate_trajectory(
    init: VehicleState,
    clock: SlotClock,
    noise: ProcessNoise,
    n_slots: int,
    seed,
) -> list[VehicleState]:
    """States for slots 0..n_slots-1; entry 0 is ``init`` and each later slot
    evolves the previous one with a fresh process-noise draw.

    Reruns with the same seed are bitwise identical. Failures in
    ``evolve_state`` are re-raised with the offending slot index.
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    states = [init]
    for t in range(1, n_slots):
        u = draw_process_noise(noise, rng)
        try:
            states.append(evolve_state(states[-1], clock, u))
        except ValueError as exc:
            raise ValueError(f"slot {t}: {exc}") from exc
    return states
