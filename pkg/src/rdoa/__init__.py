"""Direction-of-arrival estimation by covariance fitting on HPD matrices."""

from .array import (
    ArrayGeometry,
    beampattern,
    fading_sidelobe_directions,
    first_sidelobe,
    steering_derivative,
    steering_vector,
    ula_beampattern,
)
from .beamformers import (
    BoundaryMinimum,
    PowerGrid,
    Spectrum,
    cf_grid_oracle,
    compute_spectrum,
    find_peaks,
    generic_shrinkage_spectrum,
    p_ai,
    p_ai_rank1,
    p_cb,
    p_kl1,
    p_kl2,
    p_ld,
    p_le,
    p_mv,
)
from .characteristics import (
    CharacteristicsReport,
    HalfPowerUndefined,
    hpbw_analytic,
    hpbw_generic,
    measure_hpbw,
    measure_pslr,
    multipath_power_estimate,
    pslr_analytic,
)
from .estimators import SpatialSpectrumEstimator
from .hpd import (
    DegenerateCovariance,
    HermitianMatrix,
    HpdMatrix,
    dist_ai,
    dist_euclidean,
    dist_kl,
    dist_ld,
    dist_le,
    dist_truncated,
    eig_hermitian,
    inv_sqrt,
    inverse,
    matrix_log,
)
from .simulation import (
    Scenario,
    Source,
    model_covariance,
    population_covariance,
    sample_covariance,
    simulate_snapshots,
)

__version__ = "0.1.0"
