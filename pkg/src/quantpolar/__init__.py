"""Quantized density evolution and decoding for polar codes."""

from .bounds import (
    GammaBracket,
    branch_means,
    branch_states,
    fn,
    gamma_bracket,
    plain_sign_rate,
    rate_search_dynamic,
    rate_search_static_pair,
    rate_search_static_single,
    verify_submartingale,
)
from .codec import (
    CodeConfig,
    construct_frozen,
    encode,
    fer_sim,
    genie_aided_bit_error,
    k_for_target,
    sc_decode,
    union_bound,
)
from .dist import (
    ChannelStats,
    SymmetricDist,
    ThreeLevelState,
    aggregate,
    bhattacharyya_3,
    error_prob_3,
    mutual_information_3,
    mutual_information_d,
)
from .evolve3 import (
    curve_m_at,
    evolve,
    in_region_plus,
    limiting_curve,
    transform_minus,
    transform_plus,
    upper_bound_curve,
)
from .montecarlo import (
    decay_exponent,
    ratio_statistic,
    sample_trajectories,
    weak_polarization_stats,
)
from .quantd import (
    DynamicPolicy,
    Quantizer,
    StaticPolicy,
    boxplus,
    minsum,
    proper_static_pair,
    proper_static_single,
    transform_d,
    uniform_quantizer,
)

__version__ = "0.1.0"
