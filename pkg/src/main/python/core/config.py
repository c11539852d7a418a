"""
執行期設定
從環境變數（.env）讀取執行緒數、日誌層級與輸出目錄，並提供工作池
"""

import os
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from dotenv import load_dotenv


T = TypeVar("T")
R = TypeVar("R")

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass
class RuntimeSettings:
    """執行期設定"""
    threads: int = 1
    log_level: str = "INFO"
    output_dir: str = "output"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threads": self.threads,
            "log_level": self.log_level,
            "output_dir": self.output_dir
        }


def load_runtime_settings() -> RuntimeSettings:
    """載入 .env 與環境變數"""
    load_dotenv()
    default_threads = os.cpu_count() or 1
    try:
        threads = int(os.getenv("SPINMU_THREADS", str(default_threads)))
    except ValueError:
        logging.getLogger(__name__).warning(f"SPINMU_THREADS is not an integer, using {default_threads}")
        threads = default_threads
    return RuntimeSettings(
        threads=max(1, threads),
        log_level=os.getenv("SPINMU_LOG_LEVEL", "INFO").upper(),
        output_dir=os.getenv("SPINMU_OUTPUT_DIR", "output")
    )


def setup_logging(level: Optional[str] = None) -> None:
    """設定日誌"""
    logging.basicConfig(
        level=getattr(logging, (level or "INFO").upper(), logging.INFO),
        format=LOG_FORMAT
    )


def run_parallel(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    以執行緒池套用 func，結果依輸入順序回傳

    workers 為 None 時使用 SPINMU_THREADS
    """
    items = list(items)
    if workers is None:
        workers = load_runtime_settings().threads
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
