"""
偏置控制器合成服務
以多起點擬牛頓法（盒約束 L-BFGS-B）最大化瞬時傳輸機率，產生控制器集合 {D(m)}
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize

from ..core.config import run_parallel
from ..core.dynamics import TransferDynamics
from ..core.errors import NumericalError, SpecificationError
from ..core.network import build_hamiltonian
from ..models.control_models import Controller, ControllerEnsemble
from ..models.network_models import BiasField, Hamiltonian, SpinNetworkSpec, TransferProblem


logger = logging.getLogger(__name__)


@dataclass
class SynthesisOptions:
    """合成配置"""
    bias_bound: float = 100.0       # D ∈ [−B, B]^N
    t_min: float = 0.1
    t_max: Optional[float] = None   # None 表示 5N
    time_weight: float = 0.0        # 目標函數 p − w_t·t
    max_iter: int = 400
    gtol: float = 1e-6
    restart_bias_range: float = 10.0
    time_scan_points: int = 4001    # 局部解後重掃 t 的格點數
    time_rescans: int = 3           # 重掃 t 並再拋光的最多次數
    center_bias: bool = True        # 儲存零平均的代表元 D − c·I
    workers: Optional[int] = None

    def resolved_t_max(self, n: int) -> float:
        return float(self.t_max) if self.t_max is not None else 5.0 * n

    def validate(self, n: int) -> None:
        t_max = self.resolved_t_max(n)
        if not self.bias_bound > 0:
            raise SpecificationError(f"bias bound must be positive, got {self.bias_bound}")
        if not 0 < self.t_min <= t_max:
            raise SpecificationError(f"infeasible time bounds [{self.t_min}, {t_max}]")
        if self.max_iter < 1:
            raise SpecificationError(f"iteration cap must be positive, got {self.max_iter}")
        if self.time_weight < 0:
            raise SpecificationError(f"time weight must be non-negative, got {self.time_weight}")
        if self.time_scan_points < 2 or self.time_rescans < 0:
            raise SpecificationError(
                f"invalid time rescan settings: {self.time_scan_points} points, {self.time_rescans} passes"
            )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("workers")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthesisOptions":
        known = {key: data[key] for key in cls.__dataclass_fields__ if key in data}
        return cls(**known)


def centered_bias(d: np.ndarray, bias_bound: float) -> np.ndarray:
    """
    D 與 D + c·I 給出相同的 p(t)、時間平均與耦合靈敏度，只差全域相位

    取平均為零的代表元；平移量夾在 [max D − B, min D + B] 內以維持盒約束
    """
    d = np.asarray(d, dtype=float)
    shift = float(np.clip(np.mean(d), np.max(d) - bias_bound, np.min(d) + bias_bound))
    return d - shift


class ControllerSynthesizer:
    """多起點控制器合成器"""

    def __init__(self, spec: SpinNetworkSpec, prob: TransferProblem,
                 config: Optional[SynthesisOptions] = None):
        if prob.n != spec.n:
            raise SpecificationError(f"transfer problem is for n={prob.n}, network has n={spec.n}")
        self.spec = spec
        self.prob = prob
        self.config = config or SynthesisOptions()
        self.config.validate(spec.n)
        self.h: Hamiltonian = build_hamiltonian(spec)
        self.t_max = self.config.resolved_t_max(spec.n)

    def _objective(self, x: np.ndarray):
        """負的懲罰目標 −(p − w_t·t) 與其梯度"""
        d, t = x[:-1], float(x[-1])
        dynamics = TransferDynamics(self.h, BiasField(d), self.prob)
        p, grad_d, grad_t = dynamics.gradient(t)
        value = -(p - self.config.time_weight * t)
        grad = -np.append(grad_d, grad_t - self.config.time_weight)
        return value, grad

    def _starting_point(self, seed: int, m: int) -> np.ndarray:
        rng = np.random.default_rng([seed, m])
        reach = min(self.config.restart_bias_range, self.config.bias_bound)
        d0 = rng.uniform(-reach, reach, self.spec.n)
        t0 = rng.uniform(self.config.t_min, min(2.0 * self.spec.n, self.t_max))
        return np.append(d0, t0)

    def _evaluate(self, d: np.ndarray, t: float, m: int, status: str) -> Controller:
        if self.config.center_bias:
            d = centered_bias(d, self.config.bias_bound)
        bias = BiasField(d)
        dynamics = TransferDynamics(self.h, bias, self.prob)
        return Controller(
            d=bias,
            t_f=t,
            p_tf=dynamics.probability(t),
            m=m,
            p_avg=dynamics.averaged_probability(),
            status=status
        )

    def _trivial_controller(self, m: int) -> Controller:
        """IN = OUT：以大失諧固定激發，於 t_min 讀出"""
        d = np.zeros(self.spec.n)
        d[self.prob.in_spin - 1] = self.config.bias_bound
        return self._evaluate(d, self.config.t_min, m, status="trivial")

    def _bounds(self) -> List[Tuple[float, float]]:
        bounds = [(-self.config.bias_bound, self.config.bias_bound)] * self.spec.n
        bounds.append((self.config.t_min, self.t_max))
        return bounds

    def _polish(self, x0: np.ndarray) -> Tuple[np.ndarray, str]:
        """盒約束 L-BFGS-B 局部最佳化"""
        bounds = self._bounds()
        result = minimize(
            self._objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": self.config.max_iter, "gtol": self.config.gtol, "ftol": 1e-15}
        )
        lower = np.array([b[0] for b in bounds])
        upper = np.array([b[1] for b in bounds])
        return np.clip(result.x, lower, upper), "converged" if result.success else "iteration_cap"

    def _penalized(self, x: np.ndarray) -> float:
        return TransferDynamics(self.h, BiasField(x[:-1]), self.prob).probability(float(x[-1])) \
            - self.config.time_weight * float(x[-1])

    def _rescan_time(self, d: np.ndarray) -> Tuple[float, float]:
        """
        固定 D，在 [t_min, t_max] 上密集掃描 p(t) − w_t·t

        回傳在最佳值 1e-3 之內的最早時間點，與該點的目標值
        """
        dynamics = TransferDynamics(self.h, BiasField(d), self.prob)
        times = np.linspace(self.config.t_min, self.t_max, self.config.time_scan_points)
        values = np.abs(dynamics.amplitudes(times)) ** 2 - self.config.time_weight * times
        index = int(np.flatnonzero(values >= np.max(values) - 1e-3)[0])
        return float(times[index]), float(values[index])

    def run_restart(self, seed: int, m: int) -> Controller:
        """
        第 m 個起點（1-based）的局部最佳化

        L-BFGS-B 可能停在 t 邊界上的失諧點；每次拋光後固定 D 重掃 t，
        從掃描到的最早峰值再拋光，保留目標值最佳者
        """
        if self.prob.is_trivial:
            return self._trivial_controller(m)
        x0 = self._starting_point(seed, m)
        try:
            x, status = self._polish(x0)
        except (NumericalError, np.linalg.LinAlgError, ValueError) as e:
            logger.warning(f"Restart {m} failed ({e}); keeping its starting point")
            return self._evaluate(x0[:-1], float(x0[-1]), m, "failed")
        best = self._penalized(x)
        for _ in range(self.config.time_rescans):
            t_scan, scanned = self._rescan_time(x[:-1])
            if scanned <= best + 1e-12 and abs(t_scan - x[-1]) < 1e-9:
                break
            try:
                candidate, candidate_status = self._polish(np.append(x[:-1], t_scan))
            except (NumericalError, np.linalg.LinAlgError, ValueError) as e:
                logger.warning(f"Restart {m}: re-polish from t={t_scan:.4f} failed ({e})")
                break
            value = self._penalized(candidate)
            if value <= best + 1e-12:
                break
            logger.debug(f"Restart {m}: time rescan improved objective {best:.6f} -> {value:.6f}")
            x, status, best = candidate, candidate_status, value
        return self._evaluate(x[:-1], float(x[-1]), m, status)

    def synthesize(self, count: int, seed: int) -> ControllerEnsemble:
        if count < 1:
            raise SpecificationError(f"ensemble size must be at least 1, got {count}")
        logger.info(f"Synthesizing {count} controllers for {self.prob.in_spin}->{self.prob.out_spin} "
                    f"on {self.spec.to_dict()} (seed {seed})")
        generated = run_parallel(lambda m: self.run_restart(seed, m), range(1, count + 1),
                                 self.config.workers)
        p_tf = np.array([c.p_tf for c in generated])
        order = np.argsort(-p_tf, kind="stable")
        controllers = [generated[i] for i in order]
        avg_rank = rank_by_time_average([c.p_avg for c in controllers])
        statuses = [c.status for c in controllers]
        logger.info(f"Ensemble ready: best p_tf={controllers[0].p_tf:.6f}, worst p_tf={controllers[-1].p_tf:.6f}, "
                    f"{statuses.count('iteration_cap')} at iteration cap, {statuses.count('failed')} failed")
        opts = self.config.to_dict()
        opts["t_max"] = self.t_max
        opts["restart_distribution"] = {
            "d": [-min(self.config.restart_bias_range, self.config.bias_bound),
                  min(self.config.restart_bias_range, self.config.bias_bound)],
            "t": [self.config.t_min, min(2.0 * self.spec.n, self.t_max)]
        }
        return ControllerEnsemble(
            problem=self.prob,
            spec=self.spec,
            controllers=controllers,
            avg_rank=avg_rank,
            seed=seed,
            opts=opts
        )


def synthesize(spec: SpinNetworkSpec, prob: TransferProblem, count: int, seed: int,
               opts: Optional[SynthesisOptions] = None) -> ControllerEnsemble:
    """產生 count 個控制器，依 p_tf 遞減排序並計算時間平均排名"""
    return ControllerSynthesizer(spec, prob, opts).synthesize(count, seed)


def rank_by_time_average(source: Union[ControllerEnsemble, Sequence[float]]) -> List[int]:
    """
    排列 I(·)：I(m) 為第 m 個控制器在時間平均機率遞減排序中的名次

    同值時保持原順序
    """
    if isinstance(source, ControllerEnsemble):
        h = build_hamiltonian(source.spec)
        values = [
            c.p_avg if c.p_avg is not None
            else TransferDynamics(h, c.d, source.problem).averaged_probability()
            for c in source.controllers
        ]
    else:
        values = list(source)
    if not values:
        raise SpecificationError("cannot rank an empty ensemble")
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    ranks = np.empty(len(values), dtype=int)
    ranks[order] = np.arange(1, len(values) + 1)
    return [int(r) for r in ranks]
