"""Per-slot simulation loop tying tracking to beam optimization, plus result
persistence (CSV / summary JSON / beam log).

Slot flow: predict all tracks and form predicted channels; design beams
(alternating optimization, warm-started from the previous slot's frozen
targets, or fixed isotropic beams); recover rank-one communication beams;
evaluate rates, secrecy and the angle PCRB on both the predicted and the
true channels; transmit, measure the echo, and update the tracks.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import tracking
from .arrays import ChannelEstimate, predicted_channel, true_channel
from .chanceopt import (AoState, CvxpySolver, SlotInputs, ao_loop, fresh_targets,
                        gaussian_randomization, isotropic_beams, validate_outage_mc)
from .config import ScenarioConfig
from .errors import NoFeasibleCandidate, NoFeasiblePoint
from .fisher import PcrbReport, fim_observation, fim_posterior, pcrb_theta
from .kinematics import SlotClock, VehicleState, evolve_state, jacobian_g1, simulate_trajectory
from .rates import (BeamformerSet, RateReport, SemanticProfile, comm_sense_power,
                    computing_power, rate_report, transmit_covariance)

__all__ = ["SlotRecord", "RunArtifacts", "run_simulation", "write_outputs", "csv_columns"]


@dataclass
class SlotRecord:
    """Everything recorded for one simulated slot."""

    slot: int
    time_s: float
    feasible: bool
    rand_violation: bool
    solver_status: str
    ao_iterations: int
    ao_converged: bool
    lam: float
    varrho: float
    rho: np.ndarray
    power_comm_sense: float
    power_computing: float
    true_states: list
    pred_states: list
    post_states: list
    pcrb: list
    pred_report: RateReport
    true_report: RateReport
    mc_intended: list | None = None
    mc_eaves: list | None = None


@dataclass
class RunArtifacts:
    config: ScenarioConfig
    records: list
    summary: dict
    diagnostics: list = field(default_factory=list)
    beams_log: list = field(default_factory=list)
    out_dir: Path | None = None


def _stream(seed: int, label: str) -> np.random.Generator:
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence((seed, key)))


def _spawn(seed: int, label: str, index: int) -> np.random.Generator:
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence((seed, key, index)))


class _Tracker:
    """Uniform front-end over the three filter modes for the slot loop."""

    def __init__(self, config: ScenarioConfig, vehicle_index: int, seed: int):
        self.config = config
        self.i = vehicle_index
        vcfg = config.vehicles[vehicle_index]
        self.noise = vcfg.process_noise
        self.model = config.measurement_model(vehicle_index)
        self.kind = config.filter_kind
        self.phase = vcfg.init.beta / abs(vcfg.init.beta)
        if self.kind == "pf":
            self.rng = _spawn(seed, "pf", vehicle_index)
            self.cloud = tracking.pf_init(vcfg.init, vcfg.prior_mse, config.pf_particles, self.rng)
            self.mean = vcfg.init.as_array()
            self.cov = np.asarray(vcfg.prior_mse, dtype=float)
        else:
            self.belief = tracking.init_belief(vcfg.init, vcfg.prior_mse)

    def _state_from(self, vec: np.ndarray) -> VehicleState:
        return VehicleState(theta=float(vec[0]), distance=max(float(vec[1]), 1e-9),
                            velocity=float(vec[2]),
                            beta=max(float(vec[3]), 1e-12) * self.phase)

    def predict(self, clock: SlotClock) -> tuple[VehicleState, np.ndarray]:
        if self.kind == "pf":
            prev = self._state_from(self.mean)
            q_pred = evolve_state(prev, clock, None)
            g1 = jacobian_g1(prev, clock)
            m_pred = g1 @ self.cov @ g1.T + self.noise.matrix
            m_pred = (m_pred + m_pred.T) / 2.0
            self._pf_pred = (q_pred, m_pred)
            return q_pred, m_pred
        self.belief = tracking.ekf_predict(self.belief, clock, self.noise)
        return self.belief.q_pred, self.belief.m_pred

    def update(self, z: tracking.Measurement, clock: SlotClock, r_x: np.ndarray) -> VehicleState:
        if self.kind == "none":
            # dead reckoning: the prediction is the estimate
            self.belief = replace(self.belief, q_post=self.belief.q_pred,
                                  m_post=self.belief.m_pred)
            return self.belief.q_post
        if self.kind == "pf":
            self.cloud = tracking.pf_step(self.cloud, z, clock, self.noise, self.model,
                                          self.rng, beams=r_x)
            self.mean = self.cloud.estimate
            self.cov = self.cloud.estimate_cov + 1e-12 * np.eye(4)
            return self._state_from(self.mean)
        self.belief = tracking.ekf_update(self.belief, z, self.model, beams=r_x)
        return self.belief.q_post


def _ao_with_backoff(inputs, context, solver, warm: AoState | None, attempts: int = 30):
    """Run the alternating optimization, backing warm-started targets off
    step by step when geometry drift made them infeasible, before falling
    back to a fresh initialization. Returns (None, None, None) when no
    feasible point exists at all."""
    state = replace(warm, frozen=False) if warm is not None else None
    for _ in range(attempts if warm is not None else 0):
        try:
            return ao_loop(inputs, context, solver, init=state)
        except NoFeasiblePoint:
            backed = AoState(lam=max(context.lambda_init, state.lam - context.delta_lambda),
                             varrho=state.varrho + context.delta_varrho,
                             rho=state.rho, u=state.u)
            if backed.lam == state.lam and backed.varrho == state.varrho:
                break
            state = backed
    try:
        return ao_loop(inputs, context, solver, init=None)
    except NoFeasiblePoint:
        return None, None, None


def _randomize_with_headroom(sol, inputs, context, rng, state: AoState,
                             profile, max_steps: int = 3):
    """Rank-one recovery with a target-headroom fallback.

    The relaxed optimum rides the restriction boundary, where the BTI's
    Frobenius term can make every equal-trace rank-one candidate fall
    slightly short. Margins are monotone in the targets, so when that
    happens the transmitted beams are certified at targets one increment
    inside instead (beams unchanged, recorded targets = the certificate they
    actually carry). Only if even that fails is the best-effort candidate
    transmitted and the slot flagged.
    """
    attempt = state
    for _ in range(max_steps + 1):
        try:
            beams = gaussian_randomization(sol, inputs, context, rng,
                                           targets=attempt, profile=profile)
            return beams, replace(state, lam=attempt.lam, varrho=attempt.varrho), False
        except NoFeasibleCandidate as exc:
            best = exc.best_beams
            backed = replace(attempt,
                             lam=max(context.lambda_init, attempt.lam - context.delta_lambda),
                             varrho=attempt.varrho + context.delta_varrho)
            if backed.lam == attempt.lam and backed.varrho == attempt.varrho:
                break
            attempt = backed
    return best, state, True


def run_simulation(config: ScenarioConfig) -> RunArtifacts:
    """Simulate the configured scenario and return in-memory artifacts."""
    geom = config.geometry
    context = config.context()
    solver = CvxpySolver(config.solver_name)
    clock0 = SlotClock(delta_t=config.delta_t)
    intended = config.intended
    unintended = config.unintended
    nv = len(config.vehicles)
    kk = len(intended)

    trajectories = [
        simulate_trajectory(v.init, clock0, v.process_noise, config.n_slots + 1,
                            _spawn(config.seed, "trajectory", i))
        for i, v in enumerate(config.vehicles)
    ]
    trackers = [_Tracker(config, i, config.seed) for i in range(nv)]
    meas_rngs = [_spawn(config.seed, "measurement", i) for i in range(nv)]
    rand_rng = _stream(config.seed, "randomization")
    mc_rng = _stream(config.seed, "mc")

    records: list[SlotRecord] = []
    diagnostics: list = []
    beams_log: list = []
    warm: AoState | None = None
    last_beams: BeamformerSet | None = None

    for t in range(1, config.n_slots + 1):
        truths = [traj[t] for traj in trajectories]
        if any(s.distance > config.coverage_limit for s in truths):
            break
        clock = SlotClock(delta_t=config.delta_t, slot_index=t)

        pred_states, m_preds = [], []
        for tracker in trackers:
            q_pred, m_pred = tracker.predict(clock)
            pred_states.append(q_pred)
            m_preds.append(m_pred)

        if config.perfect_csi:
            estimates = [ChannelEstimate(h_bar=true_channel(truths[i], geom),
                                         omega=np.zeros((geom.num_antennas, geom.num_antennas)))
                         for i in range(nv)]
        else:
            estimates = [predicted_channel(pred_states[i], geom,
                                           config.vehicles[i].csi_error_scale)
                         for i in range(nv)]

        inputs = SlotInputs(estimates=estimates, predicted_states=pred_states,
                            m_preds=m_preds, intended=intended, unintended=unintended)

        feasible = True
        rand_violation = False
        solver_status = "isotropic"
        ao_iterations = 0
        ao_converged = True

        if config.beam_mode == "optimized":
            sol, state, diag = _ao_with_backoff(inputs, context, solver, warm)
            if sol is None:
                feasible = False
                solver_status = "infeasible"
                diag = None
                state = warm if warm is not None else fresh_targets(inputs, context)
                beams = last_beams if last_beams is not None else isotropic_beams(
                    context, kk, nv, state.rho)
            else:
                warm = replace(state, frozen=False)
                profile = SemanticProfile(iota=context.iota, rho=state.rho)
                beams, state, rand_violation = _randomize_with_headroom(
                    sol, inputs, context, rand_rng, state, profile)
                solver_status = sol.raw_status
                ao_iterations = diag.iterations
                ao_converged = diag.converged
                last_beams = beams
            if diag is not None:
                diagnostics.append(diag)
            lam, varrho, rho = state.lam, state.varrho, state.rho
        else:
            rho = np.full(kk, config.rho_floor if config.semantic_enabled else 1.0)
            beams = isotropic_beams(context, kk, nv, rho)
            lam, varrho = 0.0, 0.0
            last_beams = beams

        profile = SemanticProfile(iota=config.iota, rho=rho)
        r_x = transmit_covariance(beams)

        pred_rep = rate_report([estimates[v].h_bar for v in intended],
                               [estimates[v].h_bar for v in unintended],
                               beams, profile, config.sigma_c2)
        true_rep = rate_report([true_channel(truths[v], geom) for v in intended],
                               [true_channel(truths[v], geom) for v in unintended],
                               beams, profile, config.sigma_c2)

        pcrb = []
        for i in range(nv):
            obs = fim_observation(pred_states[i], r_x, config.n_samples, config.sigma_r2, geom)
            j_post = fim_posterior(obs, m_preds[i])
            pcrb.append(PcrbReport(pcrb_theta=pcrb_theta(j_post),
                                   prior_info=float(np.linalg.inv(m_preds[i])[0, 0])))

        mc_int = mc_eav = None
        if config.mc_samples > 0 and feasible and config.beam_mode == "optimized":
            targets = AoState(lam=lam, varrho=varrho, rho=rho)
            report = validate_outage_mc(beams, estimates, intended, unintended, targets,
                                        profile, config.sigma_c2, config.mc_samples, mc_rng)
            mc_int, mc_eav = report.intended, report.eaves

        post_states = []
        for i, tracker in enumerate(trackers):
            z = tracking.simulate_measurement(truths[i], tracker.model, beams=r_x,
                                              seed=meas_rngs[i])
            post_states.append(tracker.update(z, clock, r_x))

        records.append(SlotRecord(
            slot=t, time_s=t * config.delta_t,
            feasible=feasible, rand_violation=rand_violation,
            solver_status=solver_status, ao_iterations=ao_iterations,
            ao_converged=ao_converged,
            lam=lam, varrho=varrho, rho=np.asarray(rho, dtype=float),
            power_comm_sense=comm_sense_power(beams),
            power_computing=computing_power(rho, config.computing_coeff)
            if config.semantic_enabled else 0.0,
            true_states=truths, pred_states=pred_states, post_states=post_states,
            pcrb=pcrb, pred_report=pred_rep, true_report=true_rep,
            mc_intended=mc_int, mc_eaves=mc_eav,
        ))
        beams_log.append({
            "w": np.stack(beams.w), "r": np.stack(beams.r),
            "h_bar": np.stack([e.h_bar for e in estimates]),
            "omega": np.stack([e.omega for e in estimates]),
            "lam": lam, "varrho": varrho, "rho": np.asarray(rho, dtype=float),
            "feasible": feasible,
        })

    summary = summarize(records, config)
    return RunArtifacts(config=config, records=records, summary=summary,
                        diagnostics=diagnostics, beams_log=beams_log)


def summarize(records: list, config: ScenarioConfig) -> dict:
    """Run-level aggregates; every value is a scalar so the JSON stays flat."""
    summary: dict = {
        "slots_run": len(records),
        "filter": config.filter_kind,
        "beam_mode": config.beam_mode,
        "feasible_fraction": float(np.mean([r.feasible for r in records])) if records else 0.0,
    }
    if not records:
        return summary
    for i in range(len(config.vehicles)):
        ang_err = np.array([r.post_states[i].theta - r.true_states[i].theta for r in records])
        dist_err = np.array([r.post_states[i].distance - r.true_states[i].distance for r in records])
        summary[f"angle_rmse_v{i}"] = float(np.sqrt(np.mean(ang_err**2)))
        summary[f"distance_rmse_v{i}"] = float(np.sqrt(np.mean(dist_err**2)))
        summary[f"mean_pcrb_v{i}"] = float(np.mean([r.pcrb[i].pcrb_theta for r in records]))
    feas = [r for r in records if r.feasible] or records
    summary["mean_semantic_rate"] = float(np.mean([r.true_report.semantic.mean() for r in feas]))
    summary["mean_conventional_rate"] = float(np.mean([r.true_report.conventional.mean() for r in feas]))
    summary["mean_ssr"] = float(np.mean([r.true_report.ssr.mean() for r in feas]))
    summary["mean_power_comm_sense"] = float(np.mean([r.power_comm_sense for r in feas]))
    summary["mean_power_computing"] = float(np.mean([r.power_computing for r in feas]))
    return summary


def csv_columns(config: ScenarioConfig) -> list[str]:
    """Fixed column order of the per-slot CSV for this scenario shape."""
    cols = ["slot", "time_s", "feasible", "rand_violation", "solver_status",
            "ao_iterations", "ao_converged", "lambda", "varrho",
            "power_comm_sense", "power_computing"]
    for k, v in enumerate(config.intended):
        cols.append(f"rho_v{v}")
    for i in range(len(config.vehicles)):
        cols += [f"true_theta_v{i}", f"true_dist_v{i}", f"true_vel_v{i}", f"true_beta_abs_v{i}",
                 f"pred_theta_v{i}", f"pred_dist_v{i}", f"pred_vel_v{i}",
                 f"post_theta_v{i}", f"post_dist_v{i}", f"post_vel_v{i}",
                 f"pcrb_theta_v{i}", f"prior_info_v{i}"]
    for v in config.intended:
        cols += [f"sinr_pred_v{v}", f"sinr_true_v{v}",
                 f"conv_rate_pred_v{v}", f"conv_rate_true_v{v}",
                 f"sem_rate_pred_v{v}", f"sem_rate_true_v{v}",
                 f"ssr_pred_v{v}", f"ssr_true_v{v}"]
    for vl in config.unintended:
        for vk in config.intended:
            cols += [f"eaves_sinr_pred_v{vl}_v{vk}", f"eaves_sinr_true_v{vl}_v{vk}"]
    for vk in config.intended:
        cols.append(f"mc_viol_intended_v{vk}")
    for vl in config.unintended:
        for vk in config.intended:
            cols.append(f"mc_viol_eaves_v{vl}_v{vk}")
    return cols


def _record_row(rec: SlotRecord, config: ScenarioConfig) -> list:
    row: list = [rec.slot, rec.time_s, int(rec.feasible), int(rec.rand_violation),
                 rec.solver_status, rec.ao_iterations, int(rec.ao_converged),
                 rec.lam, rec.varrho, rec.power_comm_sense, rec.power_computing]
    row += [rec.rho[k] for k in range(len(config.intended))]
    for i in range(len(config.vehicles)):
        ts, ps, qs = rec.true_states[i], rec.pred_states[i], rec.post_states[i]
        row += [ts.theta, ts.distance, ts.velocity, abs(ts.beta),
                ps.theta, ps.distance, ps.velocity,
                qs.theta, qs.distance, qs.velocity,
                rec.pcrb[i].pcrb_theta, rec.pcrb[i].prior_info]
    for k in range(len(config.intended)):
        row += [rec.pred_report.sinr[k], rec.true_report.sinr[k],
                rec.pred_report.conventional[k], rec.true_report.conventional[k],
                rec.pred_report.semantic[k], rec.true_report.semantic[k],
                rec.pred_report.ssr[k], rec.true_report.ssr[k]]
    for l in range(len(config.unintended)):
        for k in range(len(config.intended)):
            row += [rec.pred_report.eaves_sinr[l, k], rec.true_report.eaves_sinr[l, k]]
    kk = len(config.intended)
    if rec.mc_intended is not None:
        row += [rec.mc_intended[k].rate for k in range(kk)]
        row += [e.rate for e in rec.mc_eaves]
    else:
        row += [math.nan] * (kk + len(config.unintended) * kk)
    return row


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def write_outputs(records: list, config: ScenarioConfig, out_dir,
                  beams_log: list | None = None, summary: dict | None = None) -> RunArtifacts:
    """Persist a run: per-slot CSV, flat summary JSON, config snapshot, and
    (when available) the beam log consumed by the post-hoc outage check."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        cols = csv_columns(config)
        csv_path = out_dir / "run.csv"
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for rec in records:
                row = _record_row(rec, config)
                if len(row) != len(cols):
                    raise RuntimeError(f"row width {len(row)} != header width {len(cols)}")
                fh.write(",".join(_fmt(v) for v in row) + "\n")

        summary = summary if summary is not None else summarize(records, config)
        with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

        from .config import save_config
        save_config(config, out_dir / "config.yaml")

        if beams_log:
            arrays = {}
            for key in ("w", "r", "h_bar", "omega", "rho"):
                arrays[key] = np.stack([entry[key] for entry in beams_log])
            for key in ("lam", "varrho", "feasible"):
                arrays[key] = np.array([entry[key] for entry in beams_log])
            arrays["slot"] = np.array([rec.slot for rec in records])
            np.savez_compressed(out_dir / "beams.npz", **arrays)
    except OSError as exc:
        raise OSError(f"failed writing run artifacts under {out_dir}: {exc}") from exc

    return RunArtifacts(config=config, records=records, summary=summary,
                        beams_log=beams_log or [], out_dir=out_dir)
