"""Over-the-air majority-vote aggregation for federated edge learning."""

__version__ = "0.1.0"

from .analysis import (
    TheoremParams,
    convergence_bound,
    delta_pdf,
    energy_means,
    mv_error_prob,
    mv_error_prob_bruteforce,
    pmepr_ccdf,
    q_bound,
    sign_error_prob_given_split,
    xi,
)
from .channel import (
    ChannelRealization,
    PowerDelayProfile,
    apply_channel,
    draw_channel,
    draw_timing_offset,
    epa_profile,
    flat_profile,
    superpose,
)
from .detector import EnergyPair, detect_mv, vote_energies
from .dsp import OfdmConfig, demodulate, dft, idft, modulate, pmepr_db, strip_cp
from .obda import TciConfig, obda_detect, obda_encode, tci_power_scale
from .ppm import (
    ConfigurationError,
    PpmLayout,
    VoteAssignment,
    compute_layout,
    default_vote_map,
    draw_dithers,
    encode_votes,
    pulse_weights,
)
from .training import TrainConfig, apply_update, ideal_mv, local_gradient, run_training
from .transport import IdealTransport, ObdaTransport, PpmTransport
