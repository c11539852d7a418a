"""
控制器資料模型
偏置控制器、控制器集合與其 JSON 交換格式
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
from dataclasses import dataclass, field

import numpy as np

from .network_models import BiasField, SpinNetworkSpec, TransferProblem
from ..core.errors import ConfigError, SpecificationError


@dataclass(frozen=True)
class Controller:
    """單一偏置控制器 D(m) 與其讀出時間 t_f(m)"""
    d: BiasField
    t_f: float
    p_tf: float
    m: int
    p_avg: Optional[float] = None
    status: str = "converged"  # converged / iteration_cap / failed / trivial

    def __post_init__(self):
        if not self.t_f > 0:
            raise SpecificationError(f"controller {self.m}: readout time must be positive, got {self.t_f}")
        if not -1e-12 <= self.p_tf <= 1 + 1e-12:
            raise SpecificationError(f"controller {self.m}: p_tf {self.p_tf} outside [0, 1]")

    @property
    def n(self) -> int:
        return self.d.n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "d": self.d.to_list(),
            "t_f": float(self.t_f),
            "p_tf": float(self.p_tf),
            "p_avg": None if self.p_avg is None else float(self.p_avg),
            "status": self.status
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Controller":
        return cls(
            d=BiasField(np.array(data["d"], dtype=float)),
            t_f=float(data["t_f"]),
            p_tf=float(data["p_tf"]),
            m=int(data["m"]),
            p_avg=None if data.get("p_avg") is None else float(data["p_avg"]),
            status=data.get("status", "converged")
        )


@dataclass
class ControllerEnsemble:
    """依 p_tf 遞減排序的控制器集合，附時間平均排名 I(·)"""
    problem: TransferProblem
    spec: SpinNetworkSpec
    controllers: List[Controller]
    avg_rank: List[int]
    seed: Optional[int] = None
    opts: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.controllers:
            raise SpecificationError("an ensemble needs at least one controller")
        if self.problem.n != self.spec.n:
            raise ConfigError(f"transfer problem is for n={self.problem.n}, network has n={self.spec.n}")
        for controller in self.controllers:
            if controller.n != self.spec.n:
                raise ConfigError(f"controller {controller.m} has {controller.n} biases, network has {self.spec.n} spins")
        p_tf = np.array([c.p_tf for c in self.controllers])
        if np.any(np.diff(p_tf) > 0):
            raise ConfigError("controllers must be sorted by descending p_tf")
        if sorted(self.avg_rank) != list(range(1, len(self.controllers) + 1)):
            raise ConfigError("avg_rank must be a permutation of 1..M")

    def __len__(self) -> int:
        return len(self.controllers)

    def by_average_order(self) -> List[Controller]:
        """依時間平均機率遞減排列的控制器 {D(I(m))}"""
        ordered: List[Optional[Controller]] = [None] * len(self.controllers)
        for controller, rank in zip(self.controllers, self.avg_rank):
            ordered[rank - 1] = controller
        return ordered  # type: ignore[return-value]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "problem": self.problem.to_dict(),
            "controllers": [c.to_dict() for c in self.controllers],
            "avg_rank": list(self.avg_rank),
            "seed": self.seed,
            "opts": self.opts
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ControllerEnsemble":
        try:
            spec = SpinNetworkSpec.from_dict(data["spec"])
            problem = TransferProblem.from_dict(data["problem"], n=spec.n)
            controllers = [Controller.from_dict(c) for c in data["controllers"]]
            avg_rank = [int(r) for r in data["avg_rank"]]
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed ensemble document: {e}") from e
        return cls(
            problem=problem,
            spec=spec,
            controllers=controllers,
            avg_rank=avg_rank,
            seed=data.get("seed"),
            opts=data.get("opts", {})
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ControllerEnsemble":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read ensemble from {path}: {e}") from e
        return cls.from_dict(data)
