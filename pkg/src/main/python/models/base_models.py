"""
基礎資料模型
提供所有其他模型共用的陣列處理、索引檢查與序列化工具
"""

from typing import Any, List, Optional, Sequence, Union
from enum import Enum

import numpy as np

from ..core.errors import SpecificationError


ArrayLike = Union[np.ndarray, Sequence[float], Sequence[complex]]


class LabeledEnum(Enum):
    """以小寫字串為值的列舉，JSON 讀寫時不分大小寫"""

    @classmethod
    def parse(cls, value: Union[str, "LabeledEnum"]) -> "LabeledEnum":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            allowed = ", ".join(member.value for member in cls)
            raise SpecificationError(
                f"unknown {cls.__name__} '{value}' (expected one of: {allowed})"
            ) from None


def frozen_array(values: ArrayLike, dtype: Any = float) -> np.ndarray:
    """複製為唯讀陣列，讓模型建構後不可變"""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def check_index(k: int, n: int, name: str = "index") -> int:
    """檢查 1-based 索引是否落在 1..n"""
    if isinstance(k, bool) or int(k) != k:
        raise SpecificationError(f"{name} must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= n:
        raise SpecificationError(f"{name} {k} out of range 1..{n}")
    return k


def real_list(values: Optional[np.ndarray]) -> Optional[List[float]]:
    if values is None:
        return None
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]

