"""
線性代數工具
Hermitian 特徵分解、傳播子、Daleckii–Krein Fréchet 導數與特徵值分群
"""

from typing import List, Tuple

import numpy as np
from scipy import linalg as la

from ..core.errors import NumericalContractError


HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-9


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> None:
    """非 Hermitian（超過容許誤差）時拋出 NumericalContractError"""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NumericalContractError(f"{name} must be square, got shape {matrix.shape}")
    asymmetry = np.max(np.abs(matrix - matrix.conj().T)) if matrix.size else 0.0
    if asymmetry > tol:
        raise NumericalContractError(f"{name} is not Hermitian (asymmetry {asymmetry:.3e})")


def eigh_hermitian(matrix: np.ndarray, name: str = "Hamiltonian") -> Tuple[np.ndarray, np.ndarray]:
    """
    Hermitian 特徵分解

    Returns:
        (λ 由小到大, 特徵向量矩陣 V，行向量為特徵向量)
    """
    check_hermitian(matrix, name=name)
    matrix = np.asarray(matrix, dtype=complex)
    lam, vecs = la.eigh(matrix)
    scale = max(1.0, float(np.linalg.norm(matrix, 2)))
    residual = np.linalg.norm(matrix @ vecs - vecs * lam, 2)
    if residual > 1e-12 * scale * max(1, matrix.shape[0]):
        raise NumericalContractError(f"eigendecomposition of {name} is inaccurate (residual {residual:.3e})")
    return lam, vecs


def propagator(lam: np.ndarray, vecs: np.ndarray, t: float) -> np.ndarray:
    """exp(−iHt) = V·diag(exp(−iλt))·V*"""
    return (vecs * np.exp(-1j * lam * t)) @ vecs.conj().T


def frechet_kernel(lam: np.ndarray, t: float, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """
    f(λ) = exp(−iλt) 的一階差商矩陣

    F_ij = (f(λ_i) − f(λ_j)) / (λ_i − λ_j)，|λ_i − λ_j| < tol 時取極限 −it·f(λ_i)
    """
    phases = np.exp(-1j * lam * t)
    diffs = lam[:, None] - lam[None, :]
    near = np.abs(diffs) < tol
    safe = np.where(near, 1.0, diffs)
    kernel = (phases[:, None] - phases[None, :]) / safe
    limit = np.broadcast_to((-1j * t * phases)[:, None], kernel.shape)
    return np.where(near, limit, kernel)


def cluster_eigenvalues(lam: np.ndarray, scale: float = 1.0, rel_tol: float = DEGENERACY_TOL) -> List[np.ndarray]:
    """
    將間距小於 rel_tol·max(1, scale) 的已排序特徵值分為同一群

    Returns:
        每群的索引陣列
    """
    if lam.size == 0:
        return []
    gap = rel_tol * max(1.0, scale)
    order = np.argsort(lam, kind="stable")
    clusters = [[order[0]]]
    for previous, current in zip(order[:-1], order[1:]):
        if lam[current] - lam[previous] < gap:
            clusters[-1].append(current)
        else:
            clusters.append([current])
    return [np.array(group) for group in clusters]


def max_singular_value(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


def unitary_mapping(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    建立將單位向量 source 映射到 target 方向的么正矩陣

    以 [v | I] 的 QR 分解補齊正交基底，結果具決定性
    """
    k = source.shape[0]

    def frame(vector: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(vector)
        if norm == 0:
            return np.eye(k, dtype=complex)
        unit = vector / norm
        q, _ = np.linalg.qr(np.column_stack([unit, np.eye(k, dtype=complex)]))
        q = q[:, :k]
        # QR 的第一行只到相位為止，校正回 unit
        overlap = np.vdot(q[:, 0], unit)
        q[:, 0] *= overlap / abs(overlap)
        return q

    return frame(target) @ frame(source).conj().T
