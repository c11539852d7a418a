"""
分析結果資料模型
靈敏度紀錄與研究輸出的逐控制器紀錄
"""

from typing import Any, Dict, Optional
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class SensitivityRecord:
    """∂p/∂δ 於 δ=0 的值與其對數形式 value/(1−p)"""
    value: float
    log_value: Optional[float]  # 1−p < 1e−12 時為 None
    structure_label: str
    t: float
    p: float
    m: Optional[int] = None
    rank: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RunRecord:
    """μ 研究中單一控制器的結果"""
    m: int
    rank_inst: int
    rank_avg: int
    p_tf: float
    p_avg: float
    sens: float
    log_sens: Optional[float]
    mu_lower: float
    mu_upper: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
