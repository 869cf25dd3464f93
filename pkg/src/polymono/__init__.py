"""Random polytopes: exact hulls and k-sets, quadrature for the expected
vertex count in the plane, and seeded Monte Carlo experiments."""

from .bodies import Ball, Disk, Ellipse, Polygon, normalize, parse_body, square
from .brformula import (
    Form,
    QuadratureSpec,
    QuadratureToleranceError,
    f0_expectation_quadrature,
    integrand_In,
    lemma2_check,
    monotonicity_table,
)
from .experiments import (
    check_C1,
    check_C2,
    efron_check,
    estimate_fvector,
    estimate_sk,
    growth_fit,
    paired_delta_f,
    s1_ratio_diag,
    volume_monotone_check,
)
from .geometry import DegenerateError, Hull, f_vector, hull, hull_volume, orient
from .ksets import kset_counts, low_kset_counts, s_leq
from .sampling import RngStream, sample_uniform, substream

__version__ = "0.1.0"
