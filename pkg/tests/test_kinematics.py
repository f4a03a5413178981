import math

import numpy as np
import pytest

from isacsim.kinematics import (ProcessNoise, SlotClock, VehicleState, evolve_state,
                                jacobian_g1, simulate_trajectory)

CLOCK = SlotClock(delta_t=0.02)

# nominal init of the fast vehicle: 5 deg, 55 m, 20 m/s
FAST = VehicleState(theta=math.radians(5.0), distance=55.0, velocity=20.0, beta=1.0)


def test_evolve_matches_hand_evaluation():
    out = evolve_state(FAST, CLOCK)
    # independent hand evaluation of the state recursion
    ratio = 20.0 * 0.02 / 55.0
    assert out.theta == pytest.approx(FAST.theta + ratio * math.sin(FAST.theta), abs=1e-15)
    assert out.distance == pytest.approx(55.0 - 0.4 * math.cos(FAST.theta), abs=1e-12)
    assert out.velocity == 20.0
    assert out.beta.real == pytest.approx(1.0 + ratio * math.cos(FAST.theta), abs=1e-15)
    # frozen decimals
    assert math.degrees(out.theta) == pytest.approx(5.0363, abs=5e-4)
    assert out.distance == pytest.approx(54.6015, abs=5e-4)
    assert out.beta.real == pytest.approx(1.007245, abs=5e-6)


def test_evolve_stationary_vehicle_unchanged():
    s = VehicleState(theta=0.4, distance=30.0, velocity=0.0, beta=2.0 + 1.0j)
    out = evolve_state(s, CLOCK)
    assert out.theta == s.theta
    assert out.distance == s.distance
    assert out.velocity == 0.0
    assert out.beta == s.beta


def test_evolve_perpendicular_geometry():
    s = VehicleState(theta=math.pi / 2, distance=12.0, velocity=8.0, beta=1.0)
    out = evolve_state(s, CLOCK)
    assert out.distance == pytest.approx(12.0, abs=1e-12)
    assert out.theta == pytest.approx(math.pi / 2 + 8.0 * 0.02 / 12.0, abs=1e-12)


def test_evolve_rejects_crossing_the_array():
    s = VehicleState(theta=0.0, distance=0.1, velocity=20.0, beta=1.0)
    with pytest.raises(ValueError, match="non-positive"):
        evolve_state(s, CLOCK)


def test_jacobian_identity_structure_at_zero_velocity():
    s = VehicleState(theta=0.7, distance=25.0, velocity=0.0, beta=0.8)
    g = jacobian_g1(s, CLOCK)
    assert np.allclose(np.diag(g), 1.0)
    off_diag = g - np.diag(np.diag(g))
    # only the velocity couplings survive at v = 0
    keep = np.zeros_like(g, dtype=bool)
    keep[0, 2] = keep[1, 2] = keep[3, 2] = True
    assert np.allclose(off_diag[~keep], 0.0)


def test_jacobian_velocity_sensitivity_value():
    g = jacobian_g1(FAST, CLOCK)
    assert g[0, 2] == pytest.approx(0.02 * math.sin(FAST.theta) / 55.0, rel=1e-12)
    assert g[0, 2] == pytest.approx(3.17e-5, rel=1e-2)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(100):
        s = VehicleState(theta=rng.uniform(0.01, math.pi / 2 - 0.01),
                         distance=rng.uniform(5.0, 100.0),
                         velocity=rng.uniform(-30.0, 30.0),
                         beta=rng.uniform(0.2, 3.0))
        g = jacobian_g1(s, CLOCK)
        base = s.as_array()
        fd = np.zeros((4, 4))
        for j in range(4):
            plus, minus = base.copy(), base.copy()
            plus[j] += h
            minus[j] -= h
            sp = VehicleState(theta=plus[0], distance=plus[1], velocity=plus[2], beta=plus[3])
            sm = VehicleState(theta=minus[0], distance=minus[1], velocity=minus[2], beta=minus[3])
            fd[:, j] = (evolve_state(sp, CLOCK).as_array() - evolve_state(sm, CLOCK).as_array()) / (2 * h)
        scale = np.maximum(np.abs(fd), 1.0)
        assert np.max(np.abs(g - fd) / scale) < 1e-5


def test_trajectory_zero_noise_equals_repeated_evolution():
    noise = ProcessNoise(variances=np.zeros(4))
    traj = simulate_trajectory(FAST, CLOCK, noise, n_slots=20, seed=5)
    s = FAST
    assert traj[0] == FAST
    for t in range(1, 20):
        s = evolve_state(s, CLOCK)
        assert traj[t].theta == pytest.approx(s.theta, abs=1e-15)
        assert traj[t].distance == pytest.approx(s.distance, abs=1e-12)


def test_trajectory_seed_reproducibility():
    noise = ProcessNoise(variances=np.array([1e-4, 1e-2, 1e-2, 1e-2]))
    a = simulate_trajectory(FAST, CLOCK, noise, n_slots=50, seed=99)
    b = simulate_trajectory(FAST, CLOCK, noise, n_slots=50, seed=99)
    for sa, sb in zip(a, b):
        assert sa == sb


def test_trajectory_noise_variances_match_configuration():
    # nominal process noise: diag(0.02^2, 0.2^2, 0.5^2, 0.1^2)
    q1 = np.array([0.02**2, 0.2**2, 0.5**2, 0.1**2])
    noise = ProcessNoise(variances=q1)
    start = VehicleState(theta=0.5, distance=1e6, velocity=0.0, beta=1.0)  # freeze the drift
    rng = np.random.default_rng(17)
    draws = 10_000
    inc = np.zeros((draws, 4))
    beta_inc = np.zeros(draws, dtype=complex)
    for i in range(draws):
        nxt = simulate_trajectory(start, CLOCK, noise, n_slots=2, seed=rng)[1]
        inc[i] = [nxt.theta - start.theta, nxt.distance - start.distance,
                  nxt.velocity - start.velocity, 0.0]
        beta_inc[i] = nxt.beta - start.beta
    var = inc[:, :3].var(axis=0)
    assert np.all(np.abs(var - q1[:3]) / q1[:3] < 0.10)
    beta_var = np.mean(np.abs(beta_inc - beta_inc.mean()) ** 2)
    assert abs(beta_var - q1[3]) / q1[3] < 0.10


def test_noiseless_velocity_conserved_and_distance_decreases():
    noise = ProcessNoise(variances=np.zeros(4))
    s = VehicleState(theta=0.3, distance=60.0, velocity=15.0, beta=1.0)
    traj = simulate_trajectory(s, CLOCK, noise, n_slots=100, seed=0)
    for prev, cur in zip(traj, traj[1:]):
        assert cur.velocity == prev.velocity
        if math.cos(prev.theta) > 0 and prev.velocity > 0:
            assert cur.distance < prev.distance


def test_trajectory_failure_reports_slot_index():
    noise = ProcessNoise(variances=np.zeros(4))
    s = VehicleState(theta=0.0, distance=1.0, velocity=20.0, beta=1.0)
    with pytest.raises(ValueError, match=r"slot \d+"):
        simulate_trajectory(s, CLOCK, noise, n_slots=10, seed=0)


def test_process_noise_validation():
    with pytest.raises(ValueError):
        ProcessNoise(variances=np.array([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        ProcessNoise(variances=np.ones(3))


def test_state_validation():
    with pytest.raises(ValueError):
        VehicleState(theta=0.0, distance=0.0, velocity=1.0, beta=1.0)
    with pytest.raises(ValueError):
        VehicleState(theta=0.0, distance=1.0, velocity=1.0, beta=0.0)
    with pytest.raises(ValueError):
        SlotClock(delta_t=0.0)
