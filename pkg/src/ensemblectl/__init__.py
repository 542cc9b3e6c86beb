"""Exact controllability analysis for linear ensembles ``dx/dt = A(β)x + B(β)u``."""

__version__ = "0.1.0"

from .canon import ctrl_canonical_form, invariant_factors, rcf  # noqa: E402
from .decide import decide_uec, ensemble_canonical_form, single_input_canonical  # noqa: E402
from .ensemble import EnsembleSystem, validate  # noqa: E402

__all__ = [
    "EnsembleSystem",
    "ctrl_canonical_form",
    "decide_uec",
    "ensemble_canonical_form",
    "invariant_factors",
    "rcf",
    "single_input_canonical",
    "validate",
]
