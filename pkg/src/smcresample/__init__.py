"""Sequential Monte Carlo with pluggable resampling schemes."""

from .errors import (
    InsufficientData,
    InvalidCount,
    InvalidParams,
    InvalidWeights,
    ParseError,
    SMCError,
    UnsupportedModel,
    WeightCollapse,
    WriteError,
)
from .resampling import (
    RESAMPLERS,
    SCHEMES,
    get_resampler,
    multinomial_resample,
    normalize,
    rdd_median_resample,
    residual_resample,
    stratified_resample,
    systematic_resample,
)
from .rng import Rng, next_uniform, rng_new

__version__ = "0.1.0"
