"""
工具函數模組
線性代數、資料轉換與繪圖工具
"""

from .linalg_utils import (
    check_hermitian,
    eigh_hermitian,
    propagator,
    frechet_kernel,
    cluster_eigenvalues,
    max_singular_value,
    unitary_mapping
)

from .data_converter import (
    ComplexMatrixConverter,
    load_json,
    save_json,
    write_csv,
    read_csv_columns
)

from .plotting import (
    plot_sensitivity,
    plot_average_vs_instant,
    plot_mu_study
)

__all__ = [
    'check_hermitian',
    'eigh_hermitian',
    'propagator',
    'frechet_kernel',
    'cluster_eigenvalues',
    'max_singular_value',
    'unitary_mapping',
    'ComplexMatrixConverter',
    'load_json',
    'save_json',
    'write_csv',
    'read_csv_columns',
    'plot_sensitivity',
    'plot_average_vs_instant',
    'plot_mu_study'
]
