"""
核心功能模組
例外類別與執行期設定；數值核心（network、dynamics）請直接由子模組匯入
"""

from .errors import (
    SpinMuError,
    SpecificationError,
    StructureNotPresentError,
    ConfigError,
    NumericalError,
    NumericalContractError,
    FrequencySingularError,
    SingularFeedbackError,
    MuBoundaryError
)

from .config import (
    RuntimeSettings,
    load_runtime_settings,
    setup_logging,
    run_parallel
)

__all__ = [
    'SpinMuError',
    'SpecificationError',
    'StructureNotPresentError',
    'ConfigError',
    'NumericalError',
    'NumericalContractError',
    'FrequencySingularError',
    'SingularFeedbackError',
    'MuBoundaryError',
    'RuntimeSettings',
    'load_runtime_settings',
    'setup_logging',
    'run_parallel'
]
