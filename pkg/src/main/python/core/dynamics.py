"""
Schrödinger 動力學
傳播、瞬時與時間平均傳輸機率，以及平方保真度對結構化擾動的（對數）靈敏度
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from .config import run_parallel
from .errors import NumericalContractError, SpecificationError
from .network import build_hamiltonian, perturbation_scale, total_hamiltonian
from ..models.analysis_models import SensitivityRecord
from ..models.control_models import ControllerEnsemble
from ..models.network_models import (
    BiasField,
    Hamiltonian,
    PerturbationKind,
    PerturbationStructure,
    QuantumState,
    TransferProblem,
)
from ..utils.linalg_utils import (
    check_hermitian,
    cluster_eigenvalues,
    eigh_hermitian,
    frechet_kernel,
    propagator,
)


logger = logging.getLogger(__name__)

LOG_SENSITIVITY_FLOOR = 1e-12


class TransferDynamics:
    """
    H + D 的譜分解快取

    同一個分解同時服務傳播、時間平均與 Fréchet 導數
    """

    def __init__(self, h: Hamiltonian, d: BiasField, prob: TransferProblem):
        if prob.n != h.n:
            raise SpecificationError(f"transfer problem is for n={prob.n}, Hamiltonian is {h.n}x{h.n}")
        self.prob = prob
        self.matrix = total_hamiltonian(h, d).matrix
        self.lam, self.vecs = eigh_hermitian(self.matrix)
        self.norm = float(np.linalg.norm(self.matrix, 2))
        # ⟨OUT|V 與 V*|IN⟩
        self.out_row = self.vecs[prob.out_spin - 1, :]
        self.in_col = self.vecs[prob.in_spin - 1, :].conj()
        self.weights = self.out_row * self.in_col

    def amplitude(self, t: float) -> complex:
        return complex(np.sum(self.weights * np.exp(-1j * self.lam * t)))

    def amplitudes(self, times: np.ndarray) -> np.ndarray:
        return np.exp(-1j * np.outer(times, self.lam)) @ self.weights

    def probability(self, t: float) -> float:
        return float(abs(self.amplitude(t)) ** 2)

    def averaged_probability(self) -> float:
        """Σ_λ |⟨OUT|Π_λ|IN⟩|²，近簡併特徵值併入同一投影"""
        total = 0.0
        for group in cluster_eigenvalues(self.lam, scale=self.norm):
            total += abs(np.sum(self.weights[group])) ** 2
        return float(min(max(total, 0.0), 1.0))

    def windowed_probability(self, T: float, steps: int) -> float:
        if not T > 0:
            raise SpecificationError(f"averaging window must be positive, got T={T}")
        if steps < 2:
            raise SpecificationError(f"averaging needs at least 2 steps, got {steps}")
        times = np.linspace(0.0, T, int(steps))
        values = np.abs(self.amplitudes(times)) ** 2
        return float(trapezoid(values, times) / T)

    def amplitude_derivative(self, direction: np.ndarray, t: float) -> complex:
        """⟨OUT| L_exp(direction) |IN⟩"""
        rotated = self.vecs.conj().T @ direction @ self.vecs
        kernel = frechet_kernel(self.lam, t)
        return complex(self.out_row @ (kernel * rotated) @ self.in_col)

    def sensitivity(self, direction: np.ndarray, t: float) -> Tuple[float, float]:
        """(p, ∂p/∂δ) 於 δ=0"""
        amp = self.amplitude(t)
        d_amp = self.amplitude_derivative(direction, t)
        return abs(amp) ** 2, float(2.0 * np.real(np.conj(amp) * d_amp))

    def gradient(self, t: float) -> Tuple[float, np.ndarray, float]:
        """(p, ∂p/∂D, ∂p/∂t)；∂p/∂D_k 沿 e_k e_kᵀ 方向"""
        phases = np.exp(-1j * self.lam * t)
        amp = np.sum(self.weights * phases)
        kernel = frechet_kernel(self.lam, t) * np.outer(self.out_row, self.in_col)
        d_amp_d = np.einsum("ki,ij,kj->k", self.vecs.conj(), kernel, self.vecs)
        d_amp_t = np.sum(-1j * self.lam * self.weights * phases)
        grad_d = 2.0 * np.real(np.conj(amp) * d_amp_d)
        grad_t = float(2.0 * np.real(np.conj(amp) * d_amp_t))
        return float(abs(amp) ** 2), grad_d, grad_t


def propagate(h_total: Hamiltonian, psi0: QuantumState, t: float) -> QuantumState:
    """exp(−i·H·t)·ψ0"""
    if not np.isfinite(t):
        raise SpecificationError(f"time must be finite, got {t}")
    if psi0.n != h_total.n:
        raise SpecificationError(f"state has {psi0.n} components, Hamiltonian is {h_total.n}x{h_total.n}")
    lam, vecs = eigh_hermitian(h_total.matrix)
    return QuantumState(propagator(lam, vecs, t) @ psi0.psi, tolerance=1e-10)


def transfer_probability(h: Hamiltonian, d: BiasField, prob: TransferProblem, t: float) -> float:
    """|⟨OUT|exp(−i(H+D)t)|IN⟩|²"""
    if not np.isfinite(t):
        raise SpecificationError(f"time must be finite, got {t}")
    return TransferDynamics(h, d, prob).probability(t)


def output_error(psi: QuantumState, c: np.ndarray) -> float:
    """‖Cψ‖²：與 OUT 正交部分的機率"""
    return float(np.linalg.norm(np.asarray(c) @ psi.psi) ** 2)


def time_averaged_probability(h: Hamiltonian, d: BiasField, prob: TransferProblem) -> float:
    """lim (1/T)∫₀ᵀ p(t)dt 的閉式解"""
    return TransferDynamics(h, d, prob).averaged_probability()


def windowed_average_probability(h: Hamiltonian, d: BiasField, prob: TransferProblem,
                                 T: float, steps: int) -> float:
    """(1/T)∫₀ᵀ p(t)dt 的梯形法近似"""
    return TransferDynamics(h, d, prob).windowed_probability(T, steps)


def transfer_gradient(h: Hamiltonian, d: BiasField, prob: TransferProblem,
                      t: float) -> Tuple[float, np.ndarray, float]:
    """(p, ∂p/∂D, ∂p/∂t)"""
    if not np.isfinite(t):
        raise SpecificationError(f"time must be finite, got {t}")
    return TransferDynamics(h, d, prob).gradient(t)


def _direction_matrix(s: Union[PerturbationStructure, np.ndarray]) -> Tuple[np.ndarray, str]:
    if isinstance(s, PerturbationStructure):
        return s.s.astype(complex), s.label
    direction = np.asarray(s, dtype=complex)
    check_hermitian(direction, name="perturbation direction")
    return direction, "custom"


def make_record(p: float, value: float, label: str, t: float,
                m: Optional[int] = None, rank: Optional[int] = None) -> SensitivityRecord:
    error = 1.0 - p
    log_value = value / error if error >= LOG_SENSITIVITY_FLOOR else None
    return SensitivityRecord(value=value, log_value=log_value, structure_label=label,
                             t=float(t), p=float(p), m=m, rank=rank)


def differential_sensitivity(h: Hamiltonian, d: BiasField, s: Union[PerturbationStructure, np.ndarray],
                             scale: float, prob: TransferProblem, t: float) -> SensitivityRecord:
    """
    ∂/∂δ |⟨OUT|exp(−i(H+D+δ·scale·S)t)|IN⟩|² 於 δ=0

    Args:
        scale: 耦合擾動為 1，漏失擾動為 D_k
    """
    direction, label = _direction_matrix(s)
    if direction.shape != (h.n, h.n):
        raise SpecificationError(f"direction is {direction.shape}, Hamiltonian is {h.n}x{h.n}")
    if not np.isfinite(scale):
        raise NumericalContractError(f"perturbation scale must be finite, got {scale}")
    p, value = TransferDynamics(h, d, prob).sensitivity(float(scale) * direction, t)
    return make_record(p, value, label, t)


def aggregate_records(records: Sequence[SensitivityRecord]) -> SensitivityRecord:
    """多個結構的平均絕對靈敏度"""
    first = records[0]
    value = float(np.mean([abs(r.value) for r in records]))
    logs = [r.log_value for r in records]
    log_value = None if any(v is None for v in logs) else float(np.mean([abs(v) for v in logs]))
    return SensitivityRecord(value=value, log_value=log_value, structure_label="mean",
                             t=first.t, p=first.p, m=first.m, rank=first.rank)


def sensitivity_sweep(ensemble: ControllerEnsemble, structures: Sequence[PerturbationStructure],
                      kind: Union[PerturbationKind, str] = PerturbationKind.COUPLING,
                      workers: Optional[int] = None) -> List[SensitivityRecord]:
    """
    每個控制器在 t_f(m) 的靈敏度，依控制器排名排列

    多於一個結構時，每個控制器再附一筆 "mean" 彙總紀錄
    """
    kind = PerturbationKind.parse(kind)
    if not structures:
        raise SpecificationError("sensitivity sweep needs at least one structure")
    for structure in structures:
        if structure.kind is not kind:
            raise SpecificationError(f"structure '{structure.label}' is not of kind '{kind.value}'")
    h = build_hamiltonian(ensemble.spec)

    def sweep_one(indexed) -> List[SensitivityRecord]:
        rank, controller = indexed
        dynamics = TransferDynamics(h, controller.d, ensemble.problem)
        records = []
        for structure in structures:
            scale = perturbation_scale(structure, controller.d)
            p, value = dynamics.sensitivity(scale * structure.s.astype(complex), controller.t_f)
            records.append(make_record(p, value, structure.label, controller.t_f,
                                       m=controller.m, rank=rank))
        if len(records) > 1:
            records.append(aggregate_records(records))
        return records

    rows = run_parallel(sweep_one, list(enumerate(ensemble.controllers, start=1)), workers)
    logger.info(f"Sensitivity sweep over {len(ensemble)} controllers and {len(structures)} {kind.value} structures")
    return [record for group in rows for record in group]
