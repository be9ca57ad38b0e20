"""Indoor-office FR3 large-scale channel statistics at 6.9, 8.3 and 14.5 GHz.

Forward path: correlated large-scale parameter generation (path loss,
shadow fading, delay spread, angle spreads) from the built-in measured
tables. Reverse path: estimators that fit those same models back from
record files, closing a generate/estimate/recover loop.
"""

from .dispersion import (
    DELAY_RESOLUTION_S,
    MAX_EXCESS_DELAY_S,
    CoherenceLevel,
    TapSet,
    angular_spread,
    asa_from_taps,
    coherence_bandwidth,
    mean_delay,
    rms_delay_spread,
    zsa_from_taps,
)
from .estimator import (
    BeamSet,
    FitResult,
    LogNormalFit,
    PathLossSample,
    Pdp,
    fit_distance_sigma,
    fit_lognormal,
    fit_path_loss,
    fit_path_loss_xy,
    pearson,
    probability_plot_points,
    synth_omni_power,
    threshold_pdp,
)
from .lspgen import (
    DropRecord,
    GeneratorConfig,
    LspVector,
    MixtureCalibrationError,
    MultibandSampler,
    ZsaMixture,
    build_joint_correlation,
    calibrate_zsa_mixture,
    generate_drops,
    nearest_correlation,
    sample_lsp,
    sample_multiband,
    synth_tap_set,
)
from .params import (
    ChannelState,
    CorrelationMatrix,
    FrequencyBand,
    ParamRegistry,
    ParamTable,
    builtin_table,
    cross_corr_matrix,
    interfreq_corr_matrix,
    validate_table,
)
from .propagation import (
    SPEED_OF_LIGHT_M_S,
    ConstantShadow,
    DistanceScaledShadow,
    PathLossModel,
    effective_nlos_pl_db,
    fspl_db,
    path_loss_db,
    shadow_sigma_db,
)

__version__ = "0.1.0"
