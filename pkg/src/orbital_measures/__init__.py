"""Orbital measures of dyadic group chains acting on compact metric spaces."""

__version__ = "0.1.0"

from .group_chain import (  # noqa: E402
    CosetDecomposition,
    DyadicChain,
    GroupChain,
    GroupElement,
    LevelError,
    LevelQuadrature,
    coset_split,
    dyadic_chain,
    enumerate_level,
)
from .spaces import (  # noqa: E402
    CirclePoint,
    CircleSpace,
    CompactSpace,
    PruferSpace,
    TestFamily,
    TestFunction,
    circle_space,
    circle_test_family,
    cylinder_function,
    cylinder_test_family,
    prufer_space,
    trig_function,
)
from .actions import (  # noqa: E402
    ChainAction,
    DyadicRotation,
    IsometryAuditReport,
    IsometryWitness,
    PruferTranslation,
    audit_isometry,
    dyadic_rotation_action,
    prufer_translation_action,
)
from .measures import (  # noqa: E402
    CONVERGED,
    INCONCLUSIVE,
    NOT_CONVERGED,
    AtomicMeasure,
    Atom,
    ConvergenceReport,
    analyze_sequence,
    discrepancy,
    integrate,
    orbital_measure,
)
from .averaging import (  # noqa: E402
    ERGODIC_CONSISTENT,
    NON_ERGODIC,
    AverageTrace,
    ErgodicityVerdict,
    HypothesisError,
    average,
    certify_ergodicity,
    equicontinuity_check,
    moving_basepoint_compare,
    trace,
    uniformity_diagnostic,
)

__all__ = [
    "__version__",
    "CosetDecomposition",
    "DyadicChain",
    "GroupChain",
    "GroupElement",
    "LevelError",
    "LevelQuadrature",
    "coset_split",
    "dyadic_chain",
    "enumerate_level",
    "CirclePoint",
    "CircleSpace",
    "CompactSpace",
    "PruferSpace",
    "TestFamily",
    "TestFunction",
    "circle_space",
    "circle_test_family",
    "cylinder_function",
    "cylinder_test_family",
    "prufer_space",
    "trig_function",
    "ChainAction",
    "DyadicRotation",
    "IsometryAuditReport",
    "IsometryWitness",
    "PruferTranslation",
    "audit_isometry",
    "dyadic_rotation_action",
    "prufer_translation_action",
    "CONVERGED",
    "INCONCLUSIVE",
    "NOT_CONVERGED",
    "AtomicMeasure",
    "Atom",
    "ConvergenceReport",
    "analyze_sequence",
    "discrepancy",
    "integrate",
    "orbital_measure",
    "ERGODIC_CONSISTENT",
    "NON_ERGODIC",
    "AverageTrace",
    "ErgodicityVerdict",
    "HypothesisError",
    "average",
    "certify_ergodicity",
    "equicontinuity_check",
    "moving_basepoint_compare",
    "trace",
    "uniformity_diagnostic",
]
