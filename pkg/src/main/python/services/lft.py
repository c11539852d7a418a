"""
線性分式轉換（LFT）服務
將結構化不確定性拉出成回授區塊：建構受控體 P、吸收虛擬控制器 −iD 得到 G、閉迴路 T_zw
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg as la

from ..core.errors import (
    FrequencySingularError,
    MuBoundaryError,
    SingularFeedbackError,
    SpecificationError,
)
from ..models.network_models import (
    BiasField,
    Hamiltonian,
    PerturbationKind,
    PerturbationStructure,
    TransferProblem,
)
from ..models.robust_models import (
    BlockStructure,
    GMatrix,
    OutputMatrix,
    PlantMatrix,
    RepeatedScalar,
)
from ..utils.linalg_utils import max_singular_value


logger = logging.getLogger(__name__)

SINGULAR_CONDITION = 1e12
SUGGESTED_S0_OFFSET = 1e-6

Delta = Union[complex, float, Sequence[complex], np.ndarray]


def _condition(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 1.0
    cond = float(np.linalg.cond(matrix))
    return cond if np.isfinite(cond) else float("inf")


def output_matrix(prob: TransferProblem) -> OutputMatrix:
    """單位矩陣將 OUT 那一列歸零"""
    c = np.eye(prob.n)
    c[prob.out_spin - 1, :] = 0.0
    return OutputMatrix(c=c, out_spin=prob.out_spin)


def resolvent(h: Hamiltonian, s0: complex = 0j) -> np.ndarray:
    """Φ = (s0·I + iH)⁻¹；條件數超過 1e12 視為奇異"""
    a = complex(s0) * np.eye(h.n) + 1j * h.matrix
    cond = _condition(a)
    if cond > SINGULAR_CONDITION:
        raise FrequencySingularError(complex(s0), SUGGESTED_S0_OFFSET, condition=cond)
    return la.solve(a, np.eye(h.n, dtype=complex))


def build_plant(h: Hamiltonian, c: OutputMatrix, structures: Sequence[PerturbationStructure],
                s0: complex = 0j) -> PlantMatrix:
    """
    建構 3×3 區塊受控體，列 (ζ, z, Ψ)，行 (v, w, u)

    每個不確定性通道 j 的 ζ 列為 (−iS_jΦ … −iS_jΦ, iS_jΦ, iS_jΦ)，
    z 列為 (−CΦ …, CΦ, CΦ)，Ψ 列為 (−Φ …, Φ, Φ)
    """
    if not structures:
        raise SpecificationError("a plant needs at least one uncertainty structure")
    n = h.n
    if c.n != n:
        raise SpecificationError(f"output matrix is {c.n}x{c.n}, Hamiltonian is {n}x{n}")
    for structure in structures:
        if structure.n != n:
            raise SpecificationError(f"structure '{structure.label}' does not match n={n}")

    phi = resolvent(h, s0)
    m = len(structures)
    zeta_rows = [1j * s.s @ phi for s in structures]
    c_phi = c.c @ phi

    p11 = np.vstack([np.hstack([-row] * m) for row in zeta_rows])
    p12 = np.vstack(zeta_rows)
    p21 = np.hstack([-c_phi] * m)
    p31 = np.hstack([-phi] * m)
    blocks = (
        (p11, p12, p12.copy()),
        (p21, c_phi, c_phi.copy()),
        (p31, phi, phi.copy()),
    )
    logger.debug(f"Built plant with {m} channel(s) at s0={s0}")
    return PlantMatrix(
        blocks=blocks,
        s0=complex(s0),
        structure_labels=tuple(s.label for s in structures),
        leakage_spins=tuple(s.spin if s.kind is PerturbationKind.LEAKAGE else None for s in structures),
        n=n
    )


def absorb_controller(p: PlantMatrix, d: BiasField) -> GMatrix:
    """
    以 u = −iD·Ψ 閉合控制迴路

    G_ab = P_ab − P_a3·iD·(I + P33·iD)⁻¹·P_3b；漏失通道的 ζ 列再乘上 D_k
    """
    if d.n != p.n:
        raise SpecificationError(f"bias field has {d.n} entries, plant is for n={p.n}")
    i_d = 1j * d.as_matrix()
    feedback = np.eye(p.n) + p.block(3, 3) @ i_d
    cond = _condition(feedback)
    if cond > SINGULAR_CONDITION:
        raise SingularFeedbackError(f"I + P33*iD is singular (condition number {cond:.3g})")
    # (I + P33·iD)⁻¹·[P31 P32]
    closed = la.solve(feedback, np.hstack([p.block(3, 1), p.block(3, 2)]))
    k = p.uncertainty_dim
    to_v, to_w = closed[:, :k], closed[:, k:]

    g11 = p.block(1, 1) - p.block(1, 3) @ i_d @ to_v
    g12 = p.block(1, 2) - p.block(1, 3) @ i_d @ to_w
    g21 = p.block(2, 1) - p.block(2, 3) @ i_d @ to_v
    g22 = p.block(2, 2) - p.block(2, 3) @ i_d @ to_w

    for j, spin in enumerate(p.leakage_spins):
        if spin is not None:
            rows = slice(j * p.n, (j + 1) * p.n)
            gain = d.d[spin - 1]
            g11[rows, :] *= gain
            g12[rows, :] *= gain

    return GMatrix(
        g11=g11, g12=g12, g21=g21, g22=g22,
        s0=p.s0,
        structure_labels=p.structure_labels,
        channel_dims=(p.n,) * p.channels
    )


def uncertainty_structure(g: GMatrix) -> BlockStructure:
    """每個通道一個 δ·I_n 區塊"""
    return BlockStructure(tuple(RepeatedScalar(dim) for dim in g.channel_dims))


def channel_delta(g: GMatrix, delta: Delta) -> np.ndarray:
    """
    將 Δ 展開成 G11 尺寸的方陣

    純量 → δ·I；長度等於通道數的序列 → 各通道 δ_j·I_n 的區塊對角；方陣原樣使用
    """
    k = g.uncertainty_dim
    array = np.asarray(delta, dtype=complex)
    if array.ndim == 0:
        return complex(array) * np.eye(k)
    if array.ndim == 1:
        if array.shape[0] != len(g.channel_dims):
            raise SpecificationError(f"expected {len(g.channel_dims)} channel values, got {array.shape[0]}")
        return uncertainty_structure(g).compose(list(array))
    if array.shape != (k, k):
        raise SpecificationError(f"perturbation is {array.shape}, G11 is {k}x{k}")
    return array


def closed_loop_tzw(g: GMatrix, delta: Delta) -> np.ndarray:
    """
    上 LFT：T_zw = G22 + G21·Δ·(I − G11Δ)⁻¹·G12

    Raises:
        MuBoundaryError: (I − G11Δ) 奇異
    """
    delta = channel_delta(g, delta)
    loop = np.eye(g.uncertainty_dim) - g.g11 @ delta
    cond = _condition(loop)
    if cond > SINGULAR_CONDITION:
        raise MuBoundaryError(f"I - G11*Delta is singular (condition number {cond:.3g})")
    return g.g22 + g.g21 @ delta @ la.solve(loop, g.g12)


def nominal_performance(g: GMatrix) -> float:
    """‖T_zw(0)‖ = σ̄(G22)"""
    return max_singular_value(g.g22)


def verify_specification(g: GMatrix, beta: float, samples: int = 200,
                         seed: Optional[int] = None) -> bool:
    """
    抽樣檢查：隨機結構化 Δ、‖Δ‖ < 1/β 時是否都有 ‖T_zw(Δ)‖ ≤ β

    Returns:
        所有樣本都滿足時為 True；任何樣本落在 μ 邊界上也視為失敗
    """
    if not beta > 0:
        raise SpecificationError(f"beta must be positive, got {beta}")
    if samples < 1:
        raise SpecificationError(f"need at least one sample, got {samples}")
    rng = np.random.default_rng(seed)
    channels = len(g.channel_dims)
    radius = (1.0 - 1e-9) / beta
    for sample in range(samples):
        magnitudes = radius * rng.uniform(0.0, 1.0, channels)
        phases = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, channels))
        try:
            tzw = closed_loop_tzw(g, magnitudes * phases)
        except MuBoundaryError:
            logger.info(f"Sample {sample} hit the stability boundary for beta={beta:.6g}")
            return False
        norm = max_singular_value(tzw)
        if norm > beta * (1.0 + 1e-9):
            logger.info(f"Sample {sample} violates the performance bound: {norm:.6g} > {beta:.6g}")
            return False
    return True
