"""Scenario configuration: YAML schema, validation, and unit conversion.

Files store human units (dBm, degrees); in memory everything is linear watts
and radians. Validation errors name the offending field by its path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .arrays import ArrayGeometry
from .chanceopt.program import OptimizationContext
from .errors import ConfigError
from .kinematics import ProcessNoise, VehicleState
from .tracking import MeasurementModel

__all__ = ["ScenarioConfig", "VehicleConfig", "load_config", "save_config", "dbm_to_watts", "watts_to_dbm"]

SCHEMA_VERSION = 1
FILTERS = ("ekf", "pf", "none")
BEAM_MODES = ("optimized", "isotropic")
ROLES = ("intended", "unintended")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def _get(section: dict, key: str, path: str, kind=None, default=...):
    if key not in section:
        if default is not ...:
            return default
        raise ConfigError(f"{path}.{key}: missing required field")
    value = section[key]
    if kind is not None:
        try:
            value = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {value!r}") from None
    return value


def _positive(value, path: str):
    if not value > 0:
        raise ConfigError(f"{path}: must be > 0, got {value}")
    return value


def _nonneg(value, path: str):
    if value < 0:
        raise ConfigError(f"{path}: must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class VehicleConfig:
    role: str
    init: VehicleState
    process_noise: ProcessNoise
    measurement_noise: np.ndarray      # variances (angle rad^2, distance m^2, velocity (m/s)^2)
    snr_linked_angle_noise: bool
    csi_error_scale: float
    prior_mse: np.ndarray

    @classmethod
    def from_dict(cls, raw: dict, path: str) -> "VehicleConfig":
        role = _get(raw, "role", path, str)
        if role not in ROLES:
            raise ConfigError(f"{path}.role: must be one of {ROLES}, got {role!r}")
        angle = math.radians(_get(raw, "angle_deg", path, float))
        distance = _positive(_get(raw, "distance_m", path, float), f"{path}.distance_m")
        speed = _get(raw, "speed_mps", path, float)
        beta_raw = _get(raw, "beta", path)
        if isinstance(beta_raw, (list, tuple)):
            if len(beta_raw) != 2:
                raise ConfigError(f"{path}.beta: expected scalar or [re, im] pair")
            beta = complex(float(beta_raw[0]), float(beta_raw[1]))
        else:
            beta = complex(float(beta_raw), 0.0)
        if abs(beta) == 0:
            raise ConfigError(f"{path}.beta: must be nonzero")

        q1 = np.asarray(_get(raw, "process_noise", path), dtype=float)
        if q1.shape != (4,):
            raise ConfigError(f"{path}.process_noise: expected 4 variances (theta, d, v, beta)")
        if (q1 < 0).any():
            raise ConfigError(f"{path}.process_noise: variances must be >= 0")

        q2 = np.asarray(_get(raw, "measurement_noise", path), dtype=float)
        if q2.shape != (3,):
            raise ConfigError(f"{path}.measurement_noise: expected 3 variances (theta, d, v)")
        if (q2 <= 0).any():
            raise ConfigError(f"{path}.measurement_noise: variances must be > 0")

        prior = raw.get("prior_mse")
        prior = np.diag(q1) if prior is None else np.asarray(prior, dtype=float)
        if prior.shape != (4, 4):
            raise ConfigError(f"{path}.prior_mse: expected a 4x4 matrix")
        if np.linalg.eigvalsh((prior + prior.T) / 2).min() < -1e-12:
            raise ConfigError(f"{path}.prior_mse: must be positive semidefinite")

        return cls(
            role=role,
            init=VehicleState(theta=angle, distance=distance, velocity=speed, beta=beta),
            process_noise=ProcessNoise(variances=q1),
            measurement_noise=q2,
            snr_linked_angle_noise=bool(raw.get("snr_linked_angle_noise", True)),
            csi_error_scale=_nonneg(_get(raw, "csi_error_scale", path, float, 0.01),
                                    f"{path}.csi_error_scale"),
            prior_mse=prior,
        )

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "angle_deg": math.degrees(self.init.theta),
            "distance_m": self.init.distance,
            "speed_mps": self.init.velocity,
            "beta": [self.init.beta.real, self.init.beta.imag],
            "process_noise": self.process_noise.variances.tolist(),
            "measurement_noise": self.measurement_noise.tolist(),
            "snr_linked_angle_noise": self.snr_linked_angle_noise,
            "csi_error_scale": self.csi_error_scale,
            "prior_mse": self.prior_mse.tolist(),
        }


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: ArrayGeometry
    power_budget: float                 # W
    sigma_c2: float                     # W
    sigma_r2: float                     # W
    computing_coeff: float              # W
    kappa1: float
    kappa2: float
    eps_intended: float
    eps_eaves: float
    delta_lambda: float
    delta_varrho: float
    conv_tol: float
    max_iterations: int
    lambda_init: float
    rho_bisect_tol: float
    randomization_candidates: int
    solver_name: str
    delta_t: float
    n_slots: int
    n_samples: int
    semantic_enabled: bool
    iota: float
    rho_floor: float
    coverage_limit: float               # m
    filter_kind: str
    beam_mode: str
    perfect_csi: bool
    mc_samples: int
    pf_particles: int
    seed: int
    vehicles: tuple = field(default_factory=tuple)

    @property
    def intended(self) -> list[int]:
        return [i for i, v in enumerate(self.vehicles) if v.role == "intended"]

    @property
    def unintended(self) -> list[int]:
        return [i for i, v in enumerate(self.vehicles) if v.role == "unintended"]

    def context(self) -> OptimizationContext:
        return OptimizationContext(
            geom=self.geometry,
            sigma_c2=self.sigma_c2,
            sigma_r2=self.sigma_r2,
            n_samples=self.n_samples,
            power_budget=self.power_budget,
            computing_coeff=self.computing_coeff,
            kappa1=self.kappa1,
            kappa2=self.kappa2,
            eps_intended=self.eps_intended,
            eps_eaves=self.eps_eaves,
            delta_lambda=self.delta_lambda,
            delta_varrho=self.delta_varrho,
            conv_tol=self.conv_tol,
            max_iterations=self.max_iterations,
            semantic_enabled=self.semantic_enabled,
            iota=self.iota,
            rho_floor=self.rho_floor,
            lambda_init=self.lambda_init,
            rho_bisect_tol=self.rho_bisect_tol,
            randomization_candidates=self.randomization_candidates,
        )

    def measurement_model(self, vehicle_index: int) -> MeasurementModel:
        v = self.vehicles[vehicle_index]
        return MeasurementModel(q2=v.measurement_noise,
                                snr_link=v.snr_linked_angle_noise,
                                sigma_r2=self.sigma_r2,
                                geom=self.geometry)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        version = _get(raw, "schema_version", "config", int)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"config.schema_version: expected {SCHEMA_VERSION}, got {version}")

        geo = _get(raw, "geometry", "config", dict)
        geometry = ArrayGeometry(
            num_antennas=int(_positive(_get(geo, "num_antennas", "geometry", int), "geometry.num_antennas")),
            element_spacing=_positive(_get(geo, "element_spacing", "geometry", float, 0.5),
                                      "geometry.element_spacing"),
        )

        power = _get(raw, "power", "config", dict)
        budget = dbm_to_watts(_get(power, "budget_dbm", "power", float))
        sigma_c2 = dbm_to_watts(_get(power, "noise_comm_dbm", "power", float))
        sigma_r2 = dbm_to_watts(_get(power, "noise_radar_dbm", "power", float, watts_to_dbm(sigma_c2)))
        coeff = _nonneg(_get(power, "computing_coeff", "power", float, 1.0), "power.computing_coeff")

        objective = _get(raw, "objective", "config", dict, {})
        kappa1 = _nonneg(_get(objective, "kappa1", "objective", float, 0.5), "objective.kappa1")
        kappa2 = _nonneg(_get(objective, "kappa2", "objective", float, 0.5), "objective.kappa2")

        outage = _get(raw, "outage", "config", dict, {})
        eps1 = _get(outage, "eps_intended", "outage", float, 0.01)
        eps2 = _get(outage, "eps_eaves", "outage", float, 0.01)
        for name, eps in (("eps_intended", eps1), ("eps_eaves", eps2)):
            if not 0 < eps < 1:
                raise ConfigError(f"outage.{name}: must lie in (0, 1), got {eps}")

        opt = _get(raw, "optimizer", "config", dict, {})
        delta_lambda = _positive(_get(opt, "delta_lambda", "optimizer", float, 0.1), "optimizer.delta_lambda")
        delta_varrho = _positive(_get(opt, "delta_varrho", "optimizer", float, 0.1), "optimizer.delta_varrho")
        conv_tol = _positive(_get(opt, "convergence_tol", "optimizer", float, 1e-3), "optimizer.convergence_tol")
        max_iter = int(_positive(_get(opt, "max_iterations", "optimizer", int, 100), "optimizer.max_iterations"))
        lambda_init = _positive(_get(opt, "lambda_init", "optimizer", float, 0.1), "optimizer.lambda_init")
        bisect_tol = _positive(_get(opt, "rho_bisect_tol", "optimizer", float, 1e-4), "optimizer.rho_bisect_tol")
        n_rand = int(_positive(_get(opt, "randomization_candidates", "optimizer", int, 100),
                               "optimizer.randomization_candidates"))
        solver_name = _get(opt, "solver", "optimizer", str, "CLARABEL")

        slots = _get(raw, "slots", "config", dict)
        delta_t = _positive(_get(slots, "delta_t", "slots", float), "slots.delta_t")
        n_slots = int(_positive(_get(slots, "count", "slots", int), "slots.count"))

        sensing = _get(raw, "sensing", "config", dict, {})
        n_samples = int(_positive(_get(sensing, "num_samples", "sensing", int, 64), "sensing.num_samples"))

        semantic = _get(raw, "semantic", "config", dict, {})
        sem_enabled = bool(_get(semantic, "enabled", "semantic", default=True))
        iota = _positive(_get(semantic, "iota", "semantic", float, 1.0), "semantic.iota")
        rho_floor = _get(semantic, "rho_floor", "semantic", float, 0.65)
        if not 0 < rho_floor <= 1:
            raise ConfigError(f"semantic.rho_floor: must lie in (0, 1], got {rho_floor}")

        coverage = _positive(_get(raw, "coverage_limit_m", "config", float, 100.0), "coverage_limit_m")
        filter_kind = _get(raw, "filter", "config", str, "ekf")
        if filter_kind not in FILTERS:
            raise ConfigError(f"config.filter: must be one of {FILTERS}, got {filter_kind!r}")
        beam_mode = _get(raw, "beam_mode", "config", str, "optimized")
        if beam_mode not in BEAM_MODES:
            raise ConfigError(f"config.beam_mode: must be one of {BEAM_MODES}, got {beam_mode!r}")
        perfect_csi = bool(raw.get("perfect_csi", False))
        mc_samples = int(_nonneg(_get(raw, "mc_samples", "config", int, 0), "mc_samples"))
        pf_particles = int(_positive(_get(raw, "pf_particles", "config", int, 1000), "pf_particles"))
        seed = int(_get(raw, "seed", "config", int, 0))

        vehicles_raw = _get(raw, "vehicles", "config", list)
        if not vehicles_raw:
            raise ConfigError("config.vehicles: at least one vehicle is required")
        vehicles = tuple(VehicleConfig.from_dict(v, f"vehicles[{i}]")
                         for i, v in enumerate(vehicles_raw))
        if not any(v.role == "intended" for v in vehicles):
            raise ConfigError("config.vehicles: at least one intended vehicle is required")

        return cls(
            geometry=geometry, power_budget=budget, sigma_c2=sigma_c2, sigma_r2=sigma_r2,
            computing_coeff=coeff, kappa1=kappa1, kappa2=kappa2,
            eps_intended=eps1, eps_eaves=eps2,
            delta_lambda=delta_lambda, delta_varrho=delta_varrho,
            conv_tol=conv_tol, max_iterations=max_iter, lambda_init=lambda_init,
            rho_bisect_tol=bisect_tol, randomization_candidates=n_rand, solver_name=solver_name,
            delta_t=delta_t, n_slots=n_slots, n_samples=n_samples,
            semantic_enabled=sem_enabled, iota=iota, rho_floor=rho_floor,
            coverage_limit=coverage, filter_kind=filter_kind, beam_mode=beam_mode,
            perfect_csi=perfect_csi, mc_samples=mc_samples, pf_particles=pf_particles,
            seed=seed, vehicles=vehicles,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "geometry": {
                "num_antennas": self.geometry.num_antennas,
                "element_spacing": self.geometry.element_spacing,
            },
            "power": {
                "budget_dbm": watts_to_dbm(self.power_budget),
                "noise_comm_dbm": watts_to_dbm(self.sigma_c2),
                "noise_radar_dbm": watts_to_dbm(self.sigma_r2),
                "computing_coeff": self.computing_coeff,
            },
            "objective": {"kappa1": self.kappa1, "kappa2": self.kappa2},
            "outage": {"eps_intended": self.eps_intended, "eps_eaves": self.eps_eaves},
            "optimizer": {
                "delta_lambda": self.delta_lambda,
                "delta_varrho": self.delta_varrho,
                "convergence_tol": self.conv_tol,
                "max_iterations": self.max_iterations,
                "lambda_init": self.lambda_init,
                "rho_bisect_tol": self.rho_bisect_tol,
                "randomization_candidates": self.randomization_candidates,
                "solver": self.solver_name,
            },
            "slots": {"delta_t": self.delta_t, "count": self.n_slots},
            "sensing": {"num_samples": self.n_samples},
            "semantic": {"enabled": self.semantic_enabled, "iota": self.iota,
                         "rho_floor": self.rho_floor},
            "coverage_limit_m": self.coverage_limit,
            "filter": self.filter_kind,
            "beam_mode": self.beam_mode,
            "perfect_csi": self.perfect_csi,
            "mc_samples": self.mc_samples,
            "pf_particles": self.pf_particles,
            "seed": self.seed,
            "vehicles": [v.to_dict() for v in self.vehicles],
        }


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    return ScenarioConfig.from_dict(raw)


def save_config(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)
