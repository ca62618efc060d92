"""Malaria-attributable fever fraction estimation.

Thin wrapper over the C++ core: survey ingestion, the penalized
mixture-deconvolution fit, classical baseline estimators, synthetic-survey
generation, sensitivity analysis, and bootstrap standard errors.
"""

from ._maff import *  # noqa: F401,F403
from ._maff import __doc__ as _core_doc  # noqa: F401
