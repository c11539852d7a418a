"""
自旋網路建構
名義 Hamiltonian、偏置矩陣與結構化擾動方向（耦合誤差、偏置場漏失）
"""

import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..models.network_models import (
    BiasField,
    CouplingModel,
    Hamiltonian,
    PerturbationKind,
    PerturbationStructure,
    SpinNetworkSpec,
    Topology,
)
from ..models.base_models import check_index
from .errors import ConfigError, SpecificationError, StructureNotPresentError


logger = logging.getLogger(__name__)

Perturbation = Tuple[PerturbationStructure, float, float]


class NetworkSpecDocument(BaseModel):
    """網路規格 JSON 文件"""
    n: int = Field(..., ge=2, description="自旋數")
    topology: str = Field("chain", pattern="^(chain|ring)$")
    coupling: str = Field("xx", pattern="^(xx|xxx)$")

    def to_spec(self) -> SpinNetworkSpec:
        return SpinNetworkSpec(n=self.n, topology=self.topology, coupling_model=self.coupling)


def load_network_spec(path: Union[str, Path]) -> SpinNetworkSpec:
    """從 JSON 檔讀取網路規格"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = NetworkSpecDocument(**json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"cannot read network spec from {path}: {e}") from e
    return document.to_spec()


def build_hamiltonian(spec: SpinNetworkSpec) -> Hamiltonian:
    """
    名義 Hamiltonian：次/超對角線為 1，環的 (1,N)/(N,1) 角落為 1

    XXX 模型再加上單位矩陣
    """
    n = spec.n
    matrix = np.zeros((n, n))
    idx = np.arange(n - 1)
    matrix[idx, idx + 1] = 1.0
    matrix[idx + 1, idx] = 1.0
    if spec.topology is Topology.RING:
        matrix[0, n - 1] = matrix[n - 1, 0] = 1.0
    if spec.coupling_model is CouplingModel.XXX:
        matrix += np.eye(n)
    return Hamiltonian(matrix)


def coupling_structure(spec: SpinNetworkSpec, k: int) -> PerturbationStructure:
    """耦合 (k, k+1) 的擾動方向；k = n 表示環的首尾耦合 (1, n)"""
    n = spec.n
    k = check_index(k, n, "coupling index")
    if k == n and spec.topology is not Topology.RING:
        raise StructureNotPresentError(f"coupling ({n},1) does not exist on a {n}-spin chain")
    i, j = (k - 1, k) if k < n else (0, n - 1)
    s = np.zeros((n, n))
    s[i, j] = s[j, i] = 1.0
    return PerturbationStructure(
        label=f"coupling({i + 1},{j + 1})",
        s=s,
        kind=PerturbationKind.COUPLING,
        spin=k
    )


def leakage_structure(spec: SpinNetworkSpec, k: int) -> PerturbationStructure:
    """
    偏置場 k 漏到最近鄰自旋的擾動方向 S_kk

    環的鄰居循環取用；鏈的端點捨棄不存在的鄰居（不重新正規化）
    """
    n = spec.n
    k = check_index(k, n, "leakage index")
    diagonal = np.zeros(n)
    diagonal[k - 1] = -1.0
    for neighbor in (k - 2, k):
        if spec.topology is Topology.RING:
            diagonal[neighbor % n] += 0.5
        elif 0 <= neighbor < n:
            diagonal[neighbor] += 0.5
    return PerturbationStructure(
        label=f"leakage({k})",
        s=np.diag(diagonal),
        kind=PerturbationKind.LEAKAGE,
        spin=k
    )


def all_coupling_structures(spec: SpinNetworkSpec) -> List[PerturbationStructure]:
    """所有耦合：鏈 N−1 個，環 N 個（首尾耦合放最後）"""
    last = spec.n if spec.topology is Topology.RING else spec.n - 1
    return [coupling_structure(spec, k) for k in range(1, last + 1)]


def all_leakage_structures(spec: SpinNetworkSpec) -> List[PerturbationStructure]:
    return [leakage_structure(spec, k) for k in range(1, spec.n + 1)]


def perturbation_scale(structure: PerturbationStructure, bias: BiasField) -> float:
    """耦合擾動的比例為 1；漏失擾動以名義偏置 D_k 為比例"""
    if structure.kind is PerturbationKind.LEAKAGE:
        return float(bias.d[structure.spin - 1])
    return 1.0


def total_hamiltonian(h: Hamiltonian, d: BiasField,
                      perturbations: Sequence[Perturbation] = ()) -> Hamiltonian:
    """H + diag(d) + Σ δ·scale·S"""
    n = h.n
    if d.n != n:
        raise SpecificationError(f"bias field has {d.n} entries, Hamiltonian is {n}x{n}")
    matrix = h.matrix + d.as_matrix()
    for structure, magnitude, scale in perturbations:
        if structure.n != n:
            raise SpecificationError(
                f"structure '{structure.label}' is {structure.n}x{structure.n}, Hamiltonian is {n}x{n}"
            )
        matrix = matrix + float(magnitude) * float(scale) * structure.s
    return Hamiltonian(matrix)
