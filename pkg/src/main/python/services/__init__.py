"""
服務模組 - 控制器合成、LFT 受控體建構與結構化奇異值計算
"""

from .synthesis import (
    SynthesisOptions,
    ControllerSynthesizer,
    synthesize,
    rank_by_time_average
)

from .lft import (
    output_matrix,
    resolvent,
    build_plant,
    absorb_controller,
    closed_loop_tzw,
    nominal_performance,
    verify_specification,
    uncertainty_structure
)

from .ssv import (
    UpperBoundOptions,
    LowerBoundOptions,
    BruteForceOptions,
    mu_upper_bound,
    mu_lower_bound,
    mu_brute_force,
    structured_mu,
    robust_performance_mu
)

__all__ = [
    'SynthesisOptions',
    'ControllerSynthesizer',
    'synthesize',
    'rank_by_time_average',
    'output_matrix',
    'resolvent',
    'build_plant',
    'absorb_controller',
    'closed_loop_tzw',
    'nominal_performance',
    'verify_specification',
    'uncertainty_structure',
    'UpperBoundOptions',
    'LowerBoundOptions',
    'BruteForceOptions',
    'mu_upper_bound',
    'mu_lower_bound',
    'mu_brute_force',
    'structured_mu',
    'robust_performance_mu'
]
