"""
API 模組 - 研究流程與命令列介面
"""

from .studies import (
    ExperimentConfig,
    StudyOptions,
    StudyResult,
    kendall_tau,
    kendall_tau_test,
    detect_crossover,
    run_sensitivity_study,
    run_average_vs_instant_study,
    run_mu_study
)

from .cli import main

__all__ = [
    'ExperimentConfig',
    'StudyOptions',
    'StudyResult',
    'kendall_tau',
    'kendall_tau_test',
    'detect_crossover',
    'run_sensitivity_study',
    'run_average_vs_instant_study',
    'run_mu_study',
    'main'
]
