"""Deniable and hidable communication over multipath networks.

Library + CLI for max-entropy active-distribution solving, capacity
computation, random-binning stochastic encoding/decoding, and exact
adversarial audits (deniability, hidability, leakage) at desk scale.
"""

__version__ = "0.1.0"

from .model import (
    INNOCENT,
    CodewordMatrix,
    LinkSystem,
    ScalarDistribution,
    SubsetFamily,
    TransmissionStatus,
    conditional_entropy,
    entropy,
    marginalize,
    project_codeword,
    total_variation,
)
from .maxent import (
    CapacityResult,
    deniable_capacity,
    detect_corner_point,
    hidable_capacity,
    solve_active_distribution,
)
from .typicality import (
    TypeVector,
    TypicalSet,
    enumerate_typical,
    is_cond_typical,
    is_typical,
    type_class_size,
    type_of,
)

__all__ = [
    "INNOCENT",
    "CapacityResult",
    "CodewordMatrix",
    "LinkSystem",
    "ScalarDistribution",
    "SubsetFamily",
    "TransmissionStatus",
    "TypeVector",
    "TypicalSet",
    "conditional_entropy",
    "deniable_capacity",
    "detect_corner_point",
    "entropy",
    "enumerate_typical",
    "hidable_capacity",
    "is_cond_typical",
    "is_typical",
    "marginalize",
    "project_codeword",
    "solve_active_distribution",
    "total_variation",
    "type_class_size",
    "type_of",
]
