"""Bit density of one-bit Poisson-Gaussian quanta image sensor measurements."""

from .bitdensity import (
    DensityResult,
    PgModel,
    Quantizer,
    SeriesPolicy,
    bit_density,
    ideal_density,
    pg_pdf,
    residue_direct,
    residue_k2,
)
from .bounds import (
    sigma_max_coarse,
    sigma_max_general_q,
    sigma_max_theorem1,
    sigma_range_search,
    table1,
)
from .estimate import invert_density, invert_ideal

__version__ = "0.1.0"
