"""Extended Kalman filter tracking of vehicles, plus a particle-filter baseline.

The filter state is the real 4-vector (theta, d, v, |beta|); the observation
is a direct noisy readout of (theta, d, v). When the measurement model is
linked to the echo SNR, the angle-measurement variance shrinks as
|beta|^2 a(theta)^H R_x a(theta) / sigma_r^2 grows, which couples the chosen
transmit covariance to tracking quality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .arrays import ArrayGeometry, steering_vector
from .errors import NumericalFailure
from .kinematics import ProcessNoise, SlotClock, VehicleState, evolve_state, jacobian_g1

__all__ = [
    "TrackBelief",
    "MeasurementModel",
    "Measurement",
    "init_belief",
    "ekf_predict",
    "ekf_update",
    "jacobian_g2",
    "observe",
    "simulate_measurement",
    "kalman_update",
    "ParticleCloud",
    "pf_init",
    "pf_step",
]

_BETA_FLOOR = 1e-12


@dataclass(frozen=True)
class TrackBelief:
    """Per-vehicle filter belief: prediction and (once updated) posterior."""

    q_pred: VehicleState | None = None
    m_pred: np.ndarray | None = None
    q_post: VehicleState | None = None
    m_post: np.ndarray | None = None


@dataclass(frozen=True)
class Measurement:
    theta_obs: float
    d_obs: float
    v_obs: float

    def __post_init__(self):
        if not self.d_obs > 0:
            raise ValueError("observed distance must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_obs, self.d_obs, self.v_obs])


@dataclass(frozen=True)
class MeasurementModel:
    """Measurement-noise variances (angle, distance, velocity) and SNR linkage.

    With ``snr_link`` the angle variance is q2[0] divided by the matched-filter
    echo SNR under the current transmit covariance; distance and velocity
    variances are used as-is.
    """

    q2: np.ndarray
    snr_link: bool = False
    sigma_r2: float = 1.0
    geom: ArrayGeometry | None = None

    def __post_init__(self):
        q = np.asarray(self.q2, dtype=float)
        if q.shape != (3,):
            raise ValueError("measurement model needs exactly 3 variances")
        if (q <= 0).any():
            raise ValueError("measurement variances must be > 0")
        object.__setattr__(self, "q2", q)
        if self.snr_link and self.geom is None:
            raise ValueError("snr_link requires the array geometry")

    def effective_q2(self, state: VehicleState | None = None, r_x: np.ndarray | None = None) -> np.ndarray:
        """Variance diagonal, with the angle entry SNR-scaled when enabled."""
        q = self.q2.copy()
        if self.snr_link and state is not None and r_x is not None:
            a = steering_vector(state.theta, self.geom)
            snr = abs(state.beta) ** 2 * float(np.real(a.conj() @ r_x @ a)) / self.sigma_r2
            if snr > 0:
                q[0] = q[0] / snr
        return q


def observe(state: VehicleState) -> np.ndarray:
    """Noiseless observation function: the first three state coordinates."""
    return np.array([state.theta, state.distance, state.velocity])


def jacobian_g2(state: VehicleState) -> np.ndarray:
    """Jacobian of the observation map: selects (theta, d, v) out of the state."""
    g = np.zeros((3, 4))
    g[0, 0] = g[1, 1] = g[2, 2] = 1.0
    return g


def simulate_measurement(truth: VehicleState, model: MeasurementModel, beams=None, seed=None) -> Measurement:
    """Noisy (theta, d, v) readout of the true state.

    ``beams`` is a transmit covariance matrix, an object with a
    ``transmit_covariance`` attribute, or None (no SNR scaling).
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    r_x = getattr(beams, "transmit_covariance", beams) if beams is not None else None
    q = model.effective_q2(truth, r_x)
    z = observe(truth) + rng.standard_normal(3) * np.sqrt(q)
    return Measurement(theta_obs=z[0], d_obs=max(z[1], 1e-9), v_obs=z[2])


def init_belief(init_state: VehicleState, m0: np.ndarray) -> TrackBelief:
    """Belief at slot 0: configured state with prior MSE matrix ``m0``."""
    m0 = np.asarray(m0, dtype=float)
    if m0.shape != (4, 4):
        raise ValueError("initial MSE matrix must be 4x4")
    if not np.allclose(m0, m0.T, atol=1e-12):
        raise ValueError("initial MSE matrix must be symmetric")
    if np.linalg.eigvalsh(m0).min() < -1e-12:
        raise ValueError("initial MSE matrix must be positive semidefinite")
    return TrackBelief(q_post=init_state, m_post=m0)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def ekf_predict(prev: TrackBelief, clock: SlotClock, noise: ProcessNoise) -> TrackBelief:
    """Prediction step: q_pred = g1(q_post), M_pred = G1 M G1^T + Q1."""
    if prev.q_post is None or prev.m_post is None:
        raise ValueError("previous belief has no posterior to predict from")
    q_pred = evolve_state(prev.q_post, clock, None)
    g1 = jacobian_g1(prev.q_post, clock)
    m_pred = _symmetrize(g1 @ prev.m_post @ g1.T + noise.matrix)
    if not np.isfinite(m_pred).all():
        raise NumericalFailure("non-finite entries in predicted MSE matrix")
    return TrackBelief(q_pred=q_pred, m_pred=m_pred)


def kalman_update(m_pred: np.ndarray, g2: np.ndarray, q2_diag: np.ndarray, innovation: np.ndarray):
    """Generic linear update: returns (state correction, posterior MSE, gain).

    Raises NumericalFailure when the innovation covariance is effectively
    singular (condition number above 1e12).
    """
    m_pred = np.atleast_2d(np.asarray(m_pred, dtype=float))
    g2 = np.atleast_2d(np.asarray(g2, dtype=float))
    s = np.diag(np.atleast_1d(q2_diag)) + g2 @ m_pred @ g2.T
    if np.linalg.cond(s) > 1e12:
        raise NumericalFailure("innovation covariance is numerically singular")
    gain = np.linalg.solve(s.T, (m_pred @ g2.T).T).T
    m_post = _symmetrize((np.eye(m_pred.shape[0]) - gain @ g2) @ m_pred)
    return gain @ np.atleast_1d(innovation), m_post, gain


def ekf_update(belief: TrackBelief, z: Measurement, model: MeasurementModel, beams=None) -> TrackBelief:
    """Measurement update producing the posterior state and MSE matrix."""
    if belief.q_pred is None or belief.m_pred is None:
        raise ValueError("belief has no prediction to update")
    r_x = getattr(beams, "transmit_covariance", beams) if beams is not None else None
    q2 = model.effective_q2(belief.q_pred, r_x)
    g2 = jacobian_g2(belief.q_pred)
    dx, m_post, _ = kalman_update(belief.m_pred, g2, q2, z.as_array() - observe(belief.q_pred))
    p = belief.q_pred
    mag = max(abs(p.beta) + dx[3], _BETA_FLOOR)
    phase = p.beta / abs(p.beta)
    q_post = VehicleState(
        theta=p.theta + dx[0],
        distance=max(p.distance + dx[1], 1e-9),
        velocity=p.velocity + dx[2],
        beta=mag * phase,
    )
    return replace(belief, q_post=q_post, m_post=m_post)


# ---------------------------------------------------------------------------
# Particle-filter baseline
# ---------------------------------------------------------------------------


@dataclass
class ParticleCloud:
    """Particles over (theta, d, v, |beta|) with normalized weights.

    ``estimate``/``estimate_cov`` hold the pre-resampling posterior moments
    from the step that produced this cloud.
    """

    states: np.ndarray
    weights: np.ndarray
    degenerate: bool = False
    estimate: np.ndarray | None = None
    estimate_cov: np.ndarray | None = None

    def mean(self) -> np.ndarray:
        return self.weights @ self.states

    def covariance(self) -> np.ndarray:
        d = self.states - self.mean()
        return (d * self.weights[:, None]).T @ d


def pf_init(init_state: VehicleState, m0: np.ndarray, n_particles: int, seed) -> ParticleCloud:
    if n_particles < 1:
        raise ValueError("need at least one particle")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    states = rng.multivariate_normal(init_state.as_array(), np.asarray(m0, dtype=float), size=n_particles)
    states[:, 1] = np.maximum(states[:, 1], 1e-3)
    states[:, 3] = np.maximum(states[:, 3], _BETA_FLOOR)
    return ParticleCloud(states=states, weights=np.full(n_particles, 1.0 / n_particles))


def _propagate_particles(states: np.ndarray, clock: SlotClock, noise: ProcessNoise, rng) -> np.ndarray:
    theta, d, v, b = states.T
    dt = clock.delta_t
    ratio = v * dt / d
    std = np.sqrt(noise.variances)
    n = states.shape[0]
    out = np.empty_like(states)
    out[:, 0] = theta + ratio * np.sin(theta) + rng.standard_normal(n) * std[0]
    out[:, 1] = np.maximum(d - v * dt * np.cos(theta) + rng.standard_normal(n) * std[1], 1e-3)
    out[:, 2] = v + rng.standard_normal(n) * std[2]
    out[:, 3] = np.maximum(b * (1.0 + ratio * np.cos(theta)) + rng.standard_normal(n) * std[3], _BETA_FLOOR)
    return out


def _systematic_resample(weights: np.ndarray, rng) -> np.ndarray:
    n = weights.size
    positions = (np.arange(n) + rng.random()) / n
    return np.searchsorted(np.cumsum(weights), positions)


def pf_step(
    cloud: ParticleCloud,
    z: Measurement,
    clock: SlotClock,
    noise: ProcessNoise,
    model: MeasurementModel,
    seed,
    beams=None,
) -> ParticleCloud:
    """Propagate, weight by the measurement likelihood, systematically resample.

    If every weight underflows the cloud is reset to uniform and flagged
    degenerate. Fixed seeds give reproducible runs.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    states = _propagate_particles(cloud.states, clock, noise, rng)

    r_x = getattr(beams, "transmit_covariance", beams) if beams is not None else None
    # per-particle angle variance when linked to the echo SNR
    q2 = np.tile(model.q2, (states.shape[0], 1))
    if model.snr_link and r_x is not None:
        n_el = np.arange(model.geom.num_antennas)
        phases = np.exp(1j * 2.0 * np.pi * model.geom.element_spacing * np.outer(np.sin(states[:, 0]), n_el))
        gain = np.real(np.einsum("ni,ij,nj->n", phases.conj(), r_x, phases))
        snr = states[:, 3] ** 2 * gain / model.sigma_r2
        q2[:, 0] = np.where(snr > 0, q2[:, 0] / snr, q2[:, 0])

    resid = states[:, :3] - z.as_array()
    log_w = np.log(cloud.weights + 1e-300) - 0.5 * np.sum(resid**2 / q2 + np.log(q2), axis=1)
    mx = log_w.max()
    # every unnormalized weight underflowing to zero counts as degeneracy
    degenerate = not np.isfinite(mx) or mx < math.log(1e-300)
    if degenerate:
        w = np.full(states.shape[0], 1.0 / states.shape[0])
    else:
        w = np.exp(log_w - mx)
        w = w / w.sum()

    # posterior moments from the weighted cloud, before resampling noise enters
    weighted = ParticleCloud(states=states, weights=w, degenerate=degenerate)
    idx = _systematic_resample(w, rng)
    return ParticleCloud(
        states=states[idx],
        weights=np.full(states.shape[0], 1.0 / states.shape[0]),
        degenerate=degenerate,
        estimate=weighted.mean(),
        estimate_cov=weighted.covariance(),
    )
