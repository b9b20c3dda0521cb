"""Low-complexity beamspace channel denoising by binary hypothesis testing."""

from .numerics import RngStream, inverse_unitary_dft, median_squared_magnitude, sample_complex_gaussian, unitary_dft
from .channel_model import (
    ChannelRealization,
    GeometricParams,
    SyntheticParams,
    add_noise,
    energy_activity_rate,
    gen_geometric,
    gen_synthetic,
    load_channels,
    save_channels,
    steering_vector,
)
from .blind_estimators import (
    BlindEstimates,
    blind_estimates,
    estimate_activity_rate,
    estimate_noise_power,
    estimate_snr,
    sample_fourth_moment,
)
from .denoiser import (
    DenoiseResult,
    DenoiserConfig,
    denoise,
    denoise_with_noise_error,
    denoise_with_params,
    detection_threshold,
    hard_threshold,
)
from .theory import TheoryPrediction, predict, prob_detection, prob_false_alarm, roc_curve, theoretical_mse
from .baselines import OracleInfo, genie_soft_threshold, ls_estimate, perfect_detection_denoise

__version__ = "0.1.0"
