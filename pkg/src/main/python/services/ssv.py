"""
結構化奇異值 μ 服務
D-scaling 上界、冪迭代下界（附見證擾動）與小尺寸的暴力搜尋參考值
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple
from dataclasses import dataclass, asdict

import numpy as np
from scipy import linalg as la
from scipy.optimize import minimize
from scipy.stats import unitary_group

from ..core.errors import SpecificationError
from ..models.robust_models import BlockStructure, FullComplex, GMatrix, MuResult, RepeatedScalar
from ..utils.linalg_utils import max_singular_value, unitary_mapping


logger = logging.getLogger(__name__)

TINY = 1e-14


@dataclass
class UpperBoundOptions:
    """D-scaling 上界配置"""
    max_iter: int = 200
    rel_tol: float = 1e-6
    armijo: float = 1e-4
    initial_step: float = 1.0
    min_step: float = 1e-12
    balance_sweeps: int = 50

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LowerBoundOptions:
    """冪迭代下界配置"""
    restarts: int = 10
    max_iter: int = 500
    tol: float = 1e-9
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BruteForceOptions:
    """暴力搜尋配置"""
    phase_points: int = 48
    refine_rounds: int = 3
    refine_points: int = 9
    unitary_samples: int = 64
    max_grid_points: int = 250_000
    max_dim: int = 6
    polish: bool = True
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------- upper bound

def _scaled_norm(g: np.ndarray, d: np.ndarray) -> float:
    """σ̄(D·g·D⁻¹)"""
    dg = d @ g
    return max_singular_value(la.solve(d.T, dg.T).T)


def _osborne_balance(g: np.ndarray, structure: BlockStructure, sweeps: int) -> np.ndarray:
    """
    區塊 Osborne 平衡：最小化 Σ (d_i/d_j)²‖g_ij‖²

    每次更新 d_i² = sqrt(b/a)，a、b 分別為第 i 區塊列、行的加權能量
    """
    slices = structure.slices()
    k = len(slices)
    weights = np.array([[np.linalg.norm(g[si, sj]) ** 2 if i != j else 0.0
                         for j, sj in enumerate(slices)] for i, si in enumerate(slices)])
    d = np.ones(k)
    for _ in range(max(0, sweeps)):
        largest_change = 0.0
        for i in range(k):
            a = np.sum(weights[i, :] / d ** 2)
            b = np.sum(weights[:, i] * d ** 2)
            if a <= TINY or b <= TINY:
                continue
            new = np.sqrt(np.sqrt(b / a))
            largest_change = max(largest_change, abs(new - d[i]) / d[i])
            d[i] = new
        d /= np.exp(np.mean(np.log(d)))
        if largest_change < 1e-8:
            break
    return np.diag(np.concatenate([np.full(s.stop - s.start, di) for s, di in zip(slices, d)])).astype(complex)


def _eigenvector_scaling(g: np.ndarray) -> Optional[np.ndarray]:
    """單一重複純量區塊：以特徵向量矩陣反矩陣的極分解正定因子作為起點"""
    _, vecs = np.linalg.eig(g)
    if np.linalg.cond(vecs) > 1e10:
        return None
    _, positive = la.polar(np.linalg.inv(vecs))
    return positive


def _project_gradient(w: np.ndarray, structure: BlockStructure) -> np.ndarray:
    """將 σ(uuᴴ − vvᴴ) 投影到結構的交換子（Hermitian 區塊對角）"""
    grad = np.zeros_like(w)
    for block, s in zip(structure.blocks, structure.slices()):
        if block.is_repeated:
            part = w[s, s]
            grad[s, s] = 0.5 * (part + part.conj().T)
        else:
            grad[s, s] = (np.trace(w[s, s]).real / block.dim) * np.eye(block.dim)
    return grad


def _upper_bound_search(g: np.ndarray, structure: BlockStructure,
                        opts: UpperBoundOptions) -> Tuple[float, np.ndarray, int]:
    dim = structure.total_dim
    identity = np.eye(dim, dtype=complex)
    fallback = max_singular_value(g)
    if fallback <= TINY:
        return 0.0, identity, 0

    candidates = [identity, _osborne_balance(g, structure, opts.balance_sweeps)]
    if len(structure) == 1 and structure.blocks[0].is_repeated:
        polar = _eigenvector_scaling(g)
        if polar is not None:
            candidates.append(polar)
    values = [_scaled_norm(g, d) for d in candidates]
    best = int(np.argmin(values))
    d, value = candidates[best], values[best]

    step = None
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        scaled = la.solve(d.T, (d @ g).T).T
        u, sigma, vh = la.svd(scaled)
        if sigma[0] <= TINY:
            value = 0.0
            break
        u0, v0 = u[:, 0], vh[0].conj()
        w = sigma[0] * (np.outer(u0, u0.conj()) - np.outer(v0, v0.conj()))
        grad = _project_gradient(w, structure)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= TINY * max(1.0, value):
            break
        step = opts.initial_step / grad_norm if step is None else 2.0 * step
        accepted = False
        while step * grad_norm >= opts.min_step:
            candidate = la.expm(-step * grad) @ d
            candidate_value = _scaled_norm(g, candidate)
            if candidate_value <= value - opts.armijo * step * grad_norm ** 2:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break
        improvement = (value - candidate_value) / value
        d = candidate / max_singular_value(candidate)
        value = candidate_value
        if improvement < opts.rel_tol:
            break

    return float(value), d, iterations


def mu_upper_bound(g: np.ndarray, structure: BlockStructure,
                   opts: Optional[UpperBoundOptions] = None) -> Tuple[float, np.ndarray]:
    """
    min σ̄(D·g·D⁻¹)，D 與結構交換

    重複純量區塊使用完整正定區塊，完整複數區塊使用正純量

    Returns:
        (β_u, 達成該值的尺度矩陣 D)
    """
    g = structure.check_matrix(g)
    beta, scaling, _ = _upper_bound_search(g, structure, opts or UpperBoundOptions())
    return beta, scaling


# ---------------------------------------------------------------- lower bound

def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    vector = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return vector / np.linalg.norm(vector)


def _block_phase(a_part: np.ndarray, y_part: np.ndarray) -> complex:
    inner = np.vdot(a_part, y_part)
    return inner / abs(inner) if abs(inner) > TINY else 1.0 + 0j


def _structured_unitary(a: np.ndarray, y: np.ndarray, structure: BlockStructure) -> np.ndarray:
    """由對齊向量 (a, y) 建構結構化么正矩陣 Q，使 Q·a 與 y 逐區塊同向"""
    q = np.zeros((structure.total_dim, structure.total_dim), dtype=complex)
    for block, s in zip(structure.blocks, structure.slices()):
        if block.is_repeated:
            q[s, s] = _block_phase(a[s], y[s]) * np.eye(block.dim)
        else:
            q[s, s] = unitary_mapping(a[s], y[s])
    return q


def _power_iteration(g: np.ndarray, structure: BlockStructure, rng: np.random.Generator,
                     opts: LowerBoundOptions) -> Tuple[np.ndarray, bool, int]:
    """
    單次冪迭代

    Returns:
        (結構化么正 Q, 是否收斂, 迭代次數)
    """
    slices = list(zip(structure.blocks, structure.slices()))
    n = structure.total_dim
    b = _random_unit(rng, n)
    y = _random_unit(rng, n)
    a = b
    for iteration in range(1, opts.max_iter + 1):
        a = g @ b
        norm_a = np.linalg.norm(a)
        if norm_a <= TINY:
            return _structured_unitary(b, y, structure), False, iteration
        a = a / norm_a

        z = np.empty(n, dtype=complex)
        for block, s in slices:
            if block.is_repeated:
                z[s] = np.conj(_block_phase(a[s], y[s])) * y[s]
            else:
                norm_ai = np.linalg.norm(a[s])
                z[s] = (np.linalg.norm(y[s]) / norm_ai) * a[s] if norm_ai > TINY else y[s]

        y_next = g.conj().T @ z
        norm_y = np.linalg.norm(y_next)
        if norm_y <= TINY:
            return _structured_unitary(a, y, structure), False, iteration
        y = y_next / norm_y

        b_next = np.empty(n, dtype=complex)
        for block, s in slices:
            if block.is_repeated:
                b_next[s] = _block_phase(a[s], y[s]) * a[s]
            else:
                norm_yi = np.linalg.norm(y[s])
                b_next[s] = (np.linalg.norm(a[s]) / norm_yi) * y[s] if norm_yi > TINY else a[s]
        b_next /= np.linalg.norm(b_next)
        residual = np.linalg.norm(b_next - b)
        b = b_next
        if residual < opts.tol:
            return _structured_unitary(a, y, structure), True, iteration
    return _structured_unitary(a, y, structure), False, opts.max_iter


def _witness_from_unitary(g: np.ndarray, q: np.ndarray) -> Tuple[float, Optional[np.ndarray]]:
    """ρ(Q·g) 與見證 Δ* = Q/λ_max"""
    eigenvalues = np.linalg.eigvals(q @ g)
    index = int(np.argmax(np.abs(eigenvalues)))
    rho = float(abs(eigenvalues[index]))
    if rho <= TINY * (1.0 + max_singular_value(g)):
        return 0.0, None
    return rho, q / eigenvalues[index]


def witness_is_valid(g: np.ndarray, witness: np.ndarray) -> bool:
    """|det(I − g·Δ*)| ≤ 1e−6·(1 + ‖g‖)^dim"""
    dim = g.shape[0]
    residual = abs(np.linalg.det(np.eye(dim) - g @ witness))
    return bool(residual <= 1e-6 * (1.0 + max_singular_value(g)) ** dim)


def _lower_bound_search(g: np.ndarray, structure: BlockStructure,
                        opts: LowerBoundOptions) -> Tuple[float, Optional[np.ndarray], bool, int]:
    if max_singular_value(g) <= TINY:
        return 0.0, None, True, 0
    rng = np.random.default_rng([opts.seed, structure.count("repeated_scalar")])
    best: Tuple[float, Optional[np.ndarray], bool, int] = (0.0, None, False, 0)
    any_converged = False
    for restart in range(max(1, opts.restarts)):
        q, converged, iterations = _power_iteration(g, structure, rng, opts)
        any_converged = any_converged or converged
        rho, witness = _witness_from_unitary(g, q)
        if rho > best[0]:
            best = (rho, witness, converged, iterations)
    if not any_converged:
        logger.warning(f"Power iteration did not converge in {opts.restarts} restarts; "
                       f"keeping best stationary value {best[0]:.6g}")

    beta, witness, converged, iterations = best
    if witness is not None and not witness_is_valid(g, witness):
        logger.warning(f"Discarding invalid witness for lower bound {beta:.6g}; falling back to rho(G)")
        beta, witness = _witness_from_unitary(g, np.eye(structure.total_dim, dtype=complex))
        converged = False
        if witness is not None and not witness_is_valid(g, witness):
            logger.warning("Spectral-radius witness is also invalid; reporting a zero lower bound")
            beta, witness = 0.0, None
    if witness is None:
        beta = 0.0
    return beta, witness, converged, iterations


def mu_lower_bound(g: np.ndarray, structure: BlockStructure,
                   opts: Optional[LowerBoundOptions] = None) -> Tuple[float, Optional[np.ndarray]]:
    """
    冪迭代下界

    Returns:
        (β_l, 見證擾動 Δ*；β_l = 0 時為 None)
    """
    g = structure.check_matrix(g)
    beta, witness, _, _ = _lower_bound_search(g, structure, opts or LowerBoundOptions())
    return beta, witness


# ---------------------------------------------------------------- brute force

def _hermitian(params: np.ndarray, k: int) -> np.ndarray:
    """k² 個實數參數 → k×k Hermitian 矩陣"""
    h = np.zeros((k, k), dtype=complex)
    h[np.diag_indices(k)] = params[:k]
    upper = np.triu_indices(k, 1)
    count = len(upper[0])
    h[upper] = params[k:k + count] + 1j * params[k + count:k + 2 * count]
    return h + np.triu(h, 1).conj().T


class _UnitarySearch:
    """暴力搜尋的參數化：相位槽（重複純量與 1×1 完整區塊）與么正槽（k > 1 的完整區塊）"""

    def __init__(self, g: np.ndarray, structure: BlockStructure):
        self.g = g
        self.structure = structure
        self.slots = list(zip(structure.blocks, structure.slices()))
        self.phase_slots = [i for i, (block, _) in enumerate(self.slots)
                            if block.is_repeated or block.dim == 1]
        self.unitary_slots = [i for i in range(len(self.slots)) if i not in self.phase_slots]
        # 整體相位不影響 ρ(QG)，固定第一個相位槽
        self.free_phases = max(0, len(self.phase_slots) - 1)

    def batch_rho(self, phases: np.ndarray, unitaries: Sequence[np.ndarray]) -> np.ndarray:
        """phases: (B, free_phases)；unitaries: 每個么正槽一個 (k, k) 矩陣"""
        count = phases.shape[0]
        dim = self.structure.total_dim
        q = np.zeros((count, dim, dim), dtype=complex)
        all_phases = np.concatenate([np.zeros((count, 1)), phases], axis=1) if self.phase_slots else phases
        for position, slot in enumerate(self.phase_slots):
            block, s = self.slots[slot]
            factors = np.exp(1j * all_phases[:, position])
            q[:, s, s] = factors[:, None, None] * np.eye(block.dim)
        for unitary, slot in zip(unitaries, self.unitary_slots):
            _, s = self.slots[slot]
            q[:, s, s] = unitary
        return np.max(np.abs(np.linalg.eigvals(q @ self.g)), axis=-1)

    def evaluate(self, phases: np.ndarray, unitaries: Sequence[np.ndarray], chunk: int = 10_000) -> np.ndarray:
        return np.concatenate([self.batch_rho(phases[i:i + chunk], unitaries)
                               for i in range(0, max(1, phases.shape[0]), chunk)])

    def grid(self, centers: np.ndarray, width: float, points: int) -> np.ndarray:
        if self.free_phases == 0:
            return np.zeros((1, 0))
        axes = [np.linspace(c - width, c + width, points) for c in centers]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def mu_brute_force(g: np.ndarray, structure: BlockStructure,
                   grid_opts: Optional[BruteForceOptions] = None) -> float:
    """
    μ = max_Q ρ(Q·g) 的網格搜尋（Q 走遍結構化么正矩陣）

    相位以均勻網格並逐輪放大細化，k > 1 的完整區塊以 Haar 隨機么正取樣，最後以 Nelder–Mead 微調
    """
    opts = grid_opts or BruteForceOptions()
    g = structure.check_matrix(g)
    if structure.total_dim > opts.max_dim:
        raise SpecificationError(
            f"brute force is limited to total dimension {opts.max_dim}, got {structure.total_dim}"
        )
    if max_singular_value(g) <= TINY:
        return 0.0

    search = _UnitarySearch(g, structure)
    rng = np.random.default_rng(opts.seed)
    if search.unitary_slots:
        samples = [[unitary_group.rvs(search.slots[slot][0].dim, random_state=rng)
                    for slot in search.unitary_slots] for _ in range(max(1, opts.unitary_samples))]
    else:
        samples = [[]]

    points = max(2, opts.phase_points)
    budget = max(1, opts.max_grid_points // len(samples))
    while search.free_phases and points > 2 and points ** search.free_phases > budget:
        points -= 1
    spacing = 2.0 * np.pi / points
    base = np.stack([m.ravel() for m in np.meshgrid(
        *[np.arange(points) * spacing] * search.free_phases, indexing="ij")], axis=1) \
        if search.free_phases else np.zeros((1, 0))

    best_value, best_phases, best_sample = -1.0, base[0], samples[0]
    for sample in samples:
        values = search.evaluate(base, sample)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best_value, best_phases, best_sample = float(values[index]), base[index], sample

    width = spacing
    for _ in range(opts.refine_rounds if search.free_phases else 0):
        candidates = search.grid(best_phases, width, max(3, opts.refine_points))
        values = search.evaluate(candidates, best_sample)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best_value, best_phases = float(values[index]), candidates[index]
        width = 2.0 * width / (max(3, opts.refine_points) - 1)

    if opts.polish:
        best_value = max(best_value, _polish(search, best_phases, best_sample))
    return best_value


def _polish(search: _UnitarySearch, phases: np.ndarray, sample: List[np.ndarray]) -> float:
    sizes = [search.slots[slot][0].dim for slot in search.unitary_slots]
    total = search.free_phases + sum(k * k for k in sizes)
    if total == 0:
        return float(search.evaluate(np.zeros((1, 0)), sample)[0])

    def unpack(x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        offset = search.free_phases
        unitaries = []
        for base, k in zip(sample, sizes):
            unitaries.append(base @ la.expm(1j * _hermitian(x[offset:offset + k * k], k)))
            offset += k * k
        return x[:search.free_phases].reshape(1, -1), unitaries

    def objective(x: np.ndarray) -> float:
        p, unitaries = unpack(x)
        return -float(search.batch_rho(p, unitaries)[0])

    x0 = np.concatenate([phases, np.zeros(sum(k * k for k in sizes))])
    result = minimize(objective, x0, method="Nelder-Mead",
                      options={"maxiter": 400 * total, "xatol": 1e-10, "fatol": 1e-12})
    return max(-float(result.fun), -objective(x0))


# ---------------------------------------------------------------- robust performance

def structured_mu(g: np.ndarray, structure: BlockStructure,
                  upper_opts: Optional[UpperBoundOptions] = None,
                  lower_opts: Optional[LowerBoundOptions] = None) -> MuResult:
    """在給定結構上同時計算上下界"""
    g = structure.check_matrix(g)
    lower, witness, converged, iterations = _lower_bound_search(g, structure, lower_opts or LowerBoundOptions())
    upper, scaling, _ = _upper_bound_search(g, structure, upper_opts or UpperBoundOptions())
    if lower > upper + 1e-9:
        logger.warning(f"Lower bound {lower:.12g} exceeds upper bound {upper:.12g}")
    return MuResult(
        lower=lower,
        upper=upper,
        witness=witness,
        scaling=scaling,
        converged=converged,
        iterations=iterations,
        structure=structure
    )


def robust_performance_mu(g: GMatrix, uncertainty: Optional[BlockStructure] = None,
                          upper_opts: Optional[UpperBoundOptions] = None,
                          lower_opts: Optional[LowerBoundOptions] = None) -> MuResult:
    """
    強健性能 μ：在不確定性結構後附加完整的性能區塊 Δ_p（n×n）

    uncertainty 省略時每個通道使用 δ·I_n
    """
    if uncertainty is None:
        uncertainty = BlockStructure(tuple(RepeatedScalar(dim) for dim in g.channel_dims))
    if uncertainty.total_dim != g.uncertainty_dim:
        raise SpecificationError(
            f"uncertainty structure has dimension {uncertainty.total_dim}, G11 is {g.uncertainty_dim}"
        )
    structure = uncertainty.appended(FullComplex(g.n))
    result = structured_mu(g.assemble(), structure, upper_opts, lower_opts)
    logger.debug(f"Robust performance mu in [{result.lower:.6g}, {result.upper:.6g}]")
    return result
