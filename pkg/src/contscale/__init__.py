"""Directional coupling detection from the scaling of neighbourhood radii
between delay-embedded time series."""
import numba as _numba

# try OpenMP before TBB; the TBB probe warns on older runtimes
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

__version__ = "0.1.0"

from .embedding import (  # noqa: E402
    EmbeddedSeries,
    EmbeddingParams,
    ScalarSeries,
    auto_embed,
    delay_embed,
    select_dimension_fnn,
    select_lag_mutual_information,
)
from .errors import (  # noqa: E402
    ContScaleError,
    DegenerateDataError,
    DegenerateGeometryError,
    DivergenceError,
    InputSizeError,
    ParseError,
    UndefinedROCError,
)
from .generators import (  # noqa: E402
    LogisticNetworkSpec,
    LorenzPairSpec,
    generate_coupled_lorenz,
    generate_logistic_network,
    logistic_pair_spec,
    ring_spec,
    tree_spec,
)
from .inference import (  # noqa: E402
    CausalityResult,
    CausalNetwork,
    DetectionConfig,
    detect_pair,
    infer_network,
    roc_auroc,
)
from .scaling import (  # noqa: E402
    EpsilonGrid,
    NeighborhoodSpec,
    ScalingCurve,
    SlopeEstimate,
    build_epsilon_grid,
    delta_profile,
    diameter,
    estimate_slope,
    neighbor_index_set,
)
from .significance import SurrogateConfig, surrogate_p_value  # noqa: E402


def set_threads(n: int) -> None:
    """Worker threads for the parallel kernels (results do not depend on it)."""
    _numba.set_num_threads(n)
