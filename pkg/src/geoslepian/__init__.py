"""Slepian and spherical-harmonic positional encoders on the sphere."""
from .basis import Selection, SlepianBasis, eval_slepian
from .cap import CapSpec, angular_distance, cap_block_matrix, shannon_cap, solve_cap
from .encoder import (FeatureRaster, GridSpec, HybridEncoder, build_raster, encode,
                      encode_batch, interpolate)
from .errors import (CapacityError, CorruptFileError, DomainError, GeoSlepianError,
                     IngestError, NumericError)
from .mask import MaskRaster, MaskSpec, mask_concentration_matrix, read_mask, solve_mask
from .sh import (SH_CONVENTION, GeoPoint, QuadratureGrid, ShBasisSpec, build_quadrature,
                 legendre_normalized, sh_eval, sh_index)
from .temporal import (DpssBasis, DpssSpec, dpss_matrix, dpss_solve, fourier_time,
                       legendre_time, spacetime_encode, time_encode)

__version__ = "0.1.0"

__all__ = [
    "Selection",
    "SlepianBasis",
    "eval_slepian",
    "CapSpec",
    "angular_distance",
    "cap_block_matrix",
    "shannon_cap",
    "solve_cap",
    "FeatureRaster",
    "GridSpec",
    "HybridEncoder",
    "build_raster",
    "encode",
    "encode_batch",
    "interpolate",
    "CapacityError",
    "CorruptFileError",
    "DomainError",
    "GeoSlepianError",
    "IngestError",
    "NumericError",
    "MaskRaster",
    "MaskSpec",
    "mask_concentration_matrix",
    "read_mask",
    "solve_mask",
    "SH_CONVENTION",
    "GeoPoint",
    "QuadratureGrid",
    "ShBasisSpec",
    "build_quadrature",
    "legendre_normalized",
    "sh_eval",
    "sh_index",
    "DpssBasis",
    "DpssSpec",
    "dpss_matrix",
    "dpss_solve",
    "fourier_time",
    "legendre_time",
    "spacetime_encode",
    "time_encode",
]
