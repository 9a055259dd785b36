"""Finite-dimensional laboratory for Chernoff-type product formulas with
mean ergodic projectors."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import (  # noqa: F401
    expm,
    least_squares_solve,
    random_contraction,
    random_contraction_generator,
    random_unitary,
    spectral_norm,
)
from .superop import (  # noqa: F401
    BlockSignFlip,
    ErgodicProjector,
    GeneralSuper,
    Pinching,
    ProjectionCompression,
    UnitaryConjugation,
    cesaro_projector,
    ergodic_decompose,
    ergodic_projector,
    exact_pinching_projector,
    superop_matrix,
)
from .semigroup import (  # noqa: F401
    BlockMixFamily,
    ExpFamily,
    TwoUnitaryFamily,
    check_contraction_family,
    check_stability,
    projected_generator,
)
from .product import (  # noqa: F401
    Schedule,
    chernoff_bound_check,
    cyclic_product,
    decoupling_product,
    iterated_product,
    lemma4_bound_check,
    schedule_product,
    telescoping_diff_check,
    two_unitary_product,
    zeno_product,
)
