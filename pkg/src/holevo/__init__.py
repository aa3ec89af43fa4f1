"""Classical capacity, decoding and reliability for classical-quantum channels."""

from ._config import Settings, config_context, get_config, set_config
from .exceptions import HolevoError, NumericalError, ValidationError
from .qstate import (
    DecisionRule,
    DensityMatrix,
    Ensemble,
    PureState,
    average_state,
    entropy,
    make_density,
    relative_entropy,
    tensor,
    tensor_power,
)
from .info import (
    ChannelCq,
    accessible_info,
    binary_channel,
    binary_pure_channel,
    cutoff_rate,
    fano_bound,
    holevo_chi,
    optimize_chi,
)
from .decode import (
    Codebook,
    gram,
    random_coding_experiment,
    srm,
    srm_bounds,
    srm_error,
    theorem2_bound,
    theorem2_infimum,
)
from .reliability import ExponentCurve, exponents, mu, mu_ex
from .gaussian import (
    GaussianSpec,
    ModeSpec,
    broadband,
    g,
    gaussian_reliability,
    multimode_capacity,
    single_mode_capacity,
    waveform_capacity,
)

__version__ = "0.1.0"
