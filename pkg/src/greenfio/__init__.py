"""Numerical toolkit for approximate Green's functions of divergence-form
conductivity operators with a conormal interface singularity.

Subpackages: exact order bookkeeping (:mod:`greenfio.ledger`), conormal
models and symbol-class certification (:mod:`greenfio.symbols`), homogeneous
cutoff families (:mod:`greenfio.partition`), oscillatory kernel evaluation
(:mod:`greenfio.oscint`), the staged inversion (:mod:`greenfio.parametrix`),
partial-convolution envelopes (:mod:`greenfio.convest`), zero-section
compositions (:mod:`greenfio.zerosec`), and the experiment runner
(:mod:`greenfio.cli`).
"""

__version__ = "0.1.0"

from .ledger import (  # noqa: F401
    CanonicalRelationTag,
    Dyadic,
    IplClass,
    build_recursion_schedule,
    compose_antoniano,
    compose_single,
    predict_zero_section_orders,
)
from .partition import PartitionConstants, build_chi, build_good_bad, build_psi  # noqa: F401
from .symbols import (  # noqa: F401
    ConormalConductivity,
    Symbol,
    SymbolClass,
    SymbolWindow,
    check_symbol_estimate,
    gamma_eval,
    gamma_symbol,
    make_model,
)
