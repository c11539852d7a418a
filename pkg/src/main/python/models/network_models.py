"""
自旋網路資料模型
單激發子空間中的網路規格、Hamiltonian、偏置場、擾動結構與傳輸問題
"""

from typing import Any, Dict
from dataclasses import dataclass, field

import numpy as np

from .base_models import LabeledEnum, check_index, frozen_array, real_list
from ..core.errors import SpecificationError


class Topology(LabeledEnum):
    """網路拓撲"""
    CHAIN = "chain"
    RING = "ring"


class CouplingModel(LabeledEnum):
    """耦合模型"""
    XX = "xx"
    XXX = "xxx"


class PerturbationKind(LabeledEnum):
    """擾動類型"""
    COUPLING = "coupling"
    LEAKAGE = "leakage"


@dataclass(frozen=True)
class SpinNetworkSpec:
    """網路規格：自旋數、拓撲與耦合模型"""
    n: int
    topology: Topology = Topology.CHAIN
    coupling_model: CouplingModel = CouplingModel.XX

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology.parse(self.topology))
        object.__setattr__(self, "coupling_model", CouplingModel.parse(self.coupling_model))
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise SpecificationError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 2:
            raise SpecificationError(f"a spin network needs n >= 2, got {self.n}")
        if self.topology is Topology.RING and self.n < 3:
            raise SpecificationError(f"a ring needs n >= 3, got {self.n}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "topology": self.topology.value,
            "coupling": self.coupling_model.value
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpinNetworkSpec":
        return cls(
            n=data["n"],
            topology=data.get("topology", "chain"),
            coupling_model=data.get("coupling", "xx")
        )


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """單激發子空間的 Hamiltonian（無因次能量單位）"""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = frozen_array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise SpecificationError(f"Hamiltonian must be square, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class BiasField:
    """靜態偏置場 D = diag(D_1..D_N)"""
    d: np.ndarray

    def __post_init__(self):
        d = frozen_array(self.d, dtype=float).ravel()
        if not np.all(np.isfinite(d)):
            raise SpecificationError("bias field entries must be finite")
        object.__setattr__(self, "d", d)

    @classmethod
    def zeros(cls, n: int) -> "BiasField":
        return cls(np.zeros(n))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.d).astype(complex)

    def to_list(self):
        return real_list(self.d)


@dataclass(frozen=True, eq=False)
class PerturbationStructure:
    """結構化擾動方向 S；大小 δ 由呼叫端以純量提供"""
    label: str
    s: np.ndarray
    kind: PerturbationKind
    spin: int  # 耦合 (k, k+1) 的 k，或漏失中心 k；1-based

    def __post_init__(self):
        s = frozen_array(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise SpecificationError(f"structure '{self.label}' must be square")
        if not np.array_equal(s, s.T):
            raise SpecificationError(f"structure '{self.label}' must be symmetric")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "kind", PerturbationKind.parse(self.kind))

    @property
    def n(self) -> int:
        return self.s.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "kind": self.kind.value, "k": self.spin}


@dataclass(frozen=True)
class TransferProblem:
    """激發傳輸問題 |IN> = e_in → |OUT> = e_out"""
    in_spin: int
    out_spin: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "in_spin", check_index(self.in_spin, self.n, "in spin"))
        object.__setattr__(self, "out_spin", check_index(self.out_spin, self.n, "out spin"))

    @property
    def is_trivial(self) -> bool:
        return self.in_spin == self.out_spin

    def in_state(self) -> np.ndarray:
        return basis_vector(self.n, self.in_spin)

    def out_state(self) -> np.ndarray:
        return basis_vector(self.n, self.out_spin)

    def to_dict(self) -> Dict[str, Any]:
        return {"in": self.in_spin, "out": self.out_spin}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], n: int) -> "TransferProblem":
        return cls(in_spin=data["in"], out_spin=data["out"], n=n)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """正規化波函數 |Ψ>"""
    psi: np.ndarray
    tolerance: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        psi = frozen_array(self.psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > self.tolerance:
            raise SpecificationError(f"state is not normalized (norm {norm:.16g})")
        object.__setattr__(self, "psi", psi)

    @classmethod
    def basis(cls, n: int, k: int) -> "QuantumState":
        return cls(basis_vector(n, k))

    @property
    def n(self) -> int:
        return self.psi.shape[0]

    def population(self, k: int) -> float:
        return float(abs(self.psi[k - 1]) ** 2)


def basis_vector(n: int, k: int) -> np.ndarray:
    """自然基底向量 e_k（1-based）"""
    check_index(k, n, "spin")
    vector = np.zeros(n, dtype=complex)
    vector[k - 1] = 1.0
    return vector
