"""
資料轉換工具
複數矩陣與 JSON（[re, im] 配對）互轉，以及研究結果的 CSV / JSON 輸出
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.errors import ConfigError, SpecificationError


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"

PathLike = Union[str, Path]


def complex_to_pair(value: complex) -> List[float]:
    return [float(np.real(value)), float(np.imag(value))]


def pair_to_complex(value: Union[float, int, Sequence[float]]) -> complex:
    """JSON 中的複數：純量或 [re, im]"""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise SpecificationError(f"cannot read complex number from {value!r}")


class ComplexMatrixConverter:
    """複數矩陣的 JSON 表示"""

    @staticmethod
    def to_pairs(matrix: np.ndarray) -> List[List[List[float]]]:
        """複數矩陣 → [re, im] 巢狀陣列"""
        return [[complex_to_pair(value) for value in row] for row in np.asarray(matrix)]

    @staticmethod
    def from_pairs(data: Sequence[Sequence[Any]]) -> np.ndarray:
        """[re, im] 巢狀陣列（元素也可以是實數）→ 複數矩陣"""
        try:
            matrix = np.array([[pair_to_complex(value) for value in row] for row in data], dtype=complex)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed complex matrix: {e}") from e
        if matrix.ndim != 2:
            raise ConfigError(f"expected a 2-D matrix, got shape {matrix.shape}")
        return matrix

    @staticmethod
    def load_matrix(path: PathLike, key: Optional[str] = None) -> np.ndarray:
        """
        從 JSON 檔讀取複數矩陣

        Args:
            key: 文件為物件時讀取的欄位；省略時依序嘗試 "g"、"matrix"
        """
        data = load_json(path)
        if isinstance(data, dict):
            keys = [key] if key else ["g", "matrix"]
            for name in keys:
                if name in data:
                    return ComplexMatrixConverter.from_pairs(data[name])
            raise ConfigError(f"{path} has no matrix field (tried {', '.join(keys)})")
        return ComplexMatrixConverter.from_pairs(data)


def matrix_to_pairs(matrix: np.ndarray) -> List[List[List[float]]]:
    return ComplexMatrixConverter.to_pairs(matrix)


def pairs_to_matrix(data: Sequence[Sequence[Any]]) -> np.ndarray:
    return ComplexMatrixConverter.from_pairs(data)


def load_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


def save_json(data: Any, path: PathLike) -> Path:
    """以固定鍵序寫出 JSON，重跑時內容相同"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Saved {path}")
    return path


def write_csv(rows: Union[pd.DataFrame, Sequence[Dict[str, Any]]], path: PathLike,
              columns: Optional[Sequence[str]] = None) -> Path:
    """
    寫出 CSV：浮點數 12 位有效數字（|v| < 1e−4 時為科學記號），缺值留空
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info(f"Saved {len(frame)} rows to {path}")
    return path


def read_csv_columns(path: PathLike, x: str, y: str) -> pd.DataFrame:
    """讀取 CSV 的兩個欄位（去掉任一欄缺值的列）"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    missing = [name for name in (x, y) if name not in frame.columns]
    if missing:
        raise ConfigError(f"{path} has no column(s) {', '.join(missing)}")
    return frame[[x, y]].dropna()
