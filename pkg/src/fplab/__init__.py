"""First-passage win rates of a biased random walk and coin-flip estimators of pi and ln 2."""

__version__ = "0.1.0"

from fplab.walk import (  # noqa: E402
    BiasParams,
    CapExceeded,
    FirstPassageSample,
    SampleBatch,
    sample_batch,
    sample_first_passage,
    win_rate,
)
from fplab.rng import Stream  # noqa: E402

__all__ = [
    "BiasParams",
    "CapExceeded",
    "FirstPassageSample",
    "SampleBatch",
    "Stream",
    "sample_batch",
    "sample_first_passage",
    "win_rate",
]
