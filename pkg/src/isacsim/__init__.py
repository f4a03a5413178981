"""Discrete-time simulator and optimization library for a roadside unit that
tracks moving vehicles while beamforming secure semantic downlinks to them.

Submodules: ``arrays`` (ULA/channels), ``kinematics`` (state evolution),
``tracking`` (EKF and particle filter), ``fisher`` (FIM / angle PCRB),
``rates`` (semantic rates, secrecy, powers), ``chanceopt`` (BTI-restricted
beam optimization), ``config``/``harness``/``cli`` (scenario plumbing).
"""

from .arrays import (ArrayGeometry, ChannelEstimate, predicted_channel, sample_csi_error,
                     steering_derivative, steering_vector, true_channel)
from .config import ScenarioConfig, load_config, save_config
from .fisher import FisherBlocks, PcrbReport, fim_observation, fim_posterior, pcrb_theta
from .harness import RunArtifacts, SlotRecord, run_simulation, write_outputs
from .kinematics import (ProcessNoise, SlotClock, VehicleState, evolve_state, jacobian_g1,
                         simulate_trajectory)
from .rates import (BeamformerSet, RateReport, SemanticProfile, comm_sense_power,
                    computing_power, rate_report, rho_lower_bound, secrecy_rate,
                    semantic_rate, sinr_eavesdropper, sinr_intended, transmit_covariance)
from .tracking import (Measurement, MeasurementModel, TrackBelief, ekf_predict, ekf_update,
                       init_belief, jacobian_g2, pf_init, pf_step, simulate_measurement)

__version__ = "0.1.0"
