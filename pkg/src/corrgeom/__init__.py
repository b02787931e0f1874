"""Correlation geometries of discrete effective physical models.

Models (sampled manifolds carrying reference fields) are turned into
weighted clouds of finite-rank Hermitian operators; the package compares
such clouds up to unitary conjugation, checks gauge, diffeomorphism and
symmetry invariances, and forms convex mixtures.
"""

from .correlation import (
    CorrelationGeometry,
    CorrelationMeasure,
    gram,
    local_correlation,
    local_correlations,
    local_form_matrix,
    make_geometry,
    pushforward,
    regularity_report,
    resolution_study,
)
from .equivalence import (
    Equivalent,
    Inconclusive,
    Inequivalent,
    check_equivalence,
    check_symmetry,
    diffeo_check,
    dirac_gauge_check,
    embed,
    find_witness,
    gauge_check,
    induced_translation_unitary,
    invariant_profile,
)
from .errors import CorrGeomError, NumericalError, UsageError
from .mixing import MixSpec, mix, mixture_diagnostics
from .operator_space import (
    HermitianOperator,
    Signature,
    SignatureBound,
    conjugate,
    fpq_dimension,
    fpq_rank_check,
    hs_dist,
    hs_inner,
    in_fpq,
    signature,
)

__version__ = "0.1.0"
