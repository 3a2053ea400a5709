"""Config package initialization"""

# run_config depends on models and is imported as config.run_config
from .defaults import (
    NAMED_PROCESSES, DEFAULT_CHAIN, COLLAPSING_CHAIN, IID_CHAIN, PLANAR_CHAIN, KIEFER_POINTS,
    REFERENCE_COEFFICIENTS, REFERENCE_LAGS, REFERENCE_TOLERANCE
)

__all__ = [
    'NAMED_PROCESSES',
    'DEFAULT_CHAIN',
    'COLLAPSING_CHAIN',
    'IID_CHAIN',
    'PLANAR_CHAIN',
    'KIEFER_POINTS',
    'REFERENCE_COEFFICIENTS',
    'REFERENCE_LAGS',
    'REFERENCE_TOLERANCE'
]
