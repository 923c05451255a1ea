"""Matrix Laplace transforms of Poisson shot noise.

The transform ``E[exp(-S I)]`` of a shot noise ``I`` at a matrix argument
``S`` is evaluated through a generalized Campbell integral. From it the
package derives shot-noise moments, Erlang-smoothed CCDF approximations
with sandwich bounds, coverage probabilities under phase-type signal power
and the SINR meta-distribution.
"""
__version__ = "0.1.0"

from .campbell import (
    BoundedPowerLaw,
    PathLoss,
    PowerLaw,
    ShotNoiseScenario,
    campbell_matrix_integral,
    field_matrix_lt,
    finiteness_check,
    shot_noise_matrix_lt,
)
from .distributions import (
    Deterministic,
    Erlang,
    Exponential,
    FadingModel,
    GeneralPhaseType,
    PhaseType,
    matrix_lt_block,
    matrix_lt_dense,
    nakagami,
    scalar_lt,
)
from .errors import (
    DivergentIntegralError,
    DomainError,
    InfiniteMomentError,
    MatrixOverflowError,
    MltError,
    NonconvergentTransformError,
    QuadratureError,
    SingularBasisError,
    UnsupportedCombinationError,
)
from .matfun import JordanBlockSpec, JordanFactoredMatrix, expm, expm_ut_toeplitz
from .quadrature import QuadratureConfig
from .shotnoise_stats import (
    CcdfApproxResult,
    ccdf_approx_from_mlt,
    delta_of_epsilon,
    moments,
    shot_noise_ccdf,
)
from .sinr import (
    NetworkScenario,
    OuterQuadrature,
    coverage_curve,
    coverage_probability,
    meta_distribution,
    meta_distribution_ladder,
)

__all__ = [name for name in dir() if not name.startswith("_")]
