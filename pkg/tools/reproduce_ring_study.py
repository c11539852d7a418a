#!/usr/bin/env python3
"""
11 自旋環研究重現腳本
檢查環境後依 configs/ring11.json 合成控制器集合並執行全部研究
"""

import sys
import logging
import argparse
from pathlib import Path

# 添加專案路徑
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.main.python.api.cli import EXIT_OK, main as spinmu_main  # noqa: E402


def setup_logging():
    """設定日誌"""
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def check_environment(config_path: Path) -> bool:
    """檢查環境配置"""
    logger = logging.getLogger(__name__)

    logger.info("🔍 檢查環境配置...")

    python_version = sys.version_info
    if python_version.major < 3 or python_version.minor < 8:
        logger.error("Python 版本需要 3.8 或更高")
        return False
    logger.info(f"✅ Python 版本: {python_version.major}.{python_version.minor}")

    required_modules = ['numpy', 'scipy', 'pandas', 'matplotlib', 'pydantic', 'dotenv']
    missing_modules = []
    for module in required_modules:
        try:
            __import__(module)
            logger.info(f"✅ {module} 已安裝")
        except ImportError:
            missing_modules.append(module)
            logger.error(f"❌ {module} 未安裝")

    if missing_modules:
        logger.error("請安裝缺少的模組: pip install -e .")
        return False

    if not config_path.exists():
        logger.error(f"❌ 設定檔不存在: {config_path}")
        return False
    logger.info(f"✅ 設定檔: {config_path}")
    return True


def run_pipeline(config_path: Path, output_dir: Path, threads: int) -> bool:
    """合成控制器集合並執行三種研究"""
    logger = logging.getLogger(__name__)
    ensemble_path = output_dir / "ensemble.json"
    common = ["--threads", str(threads)] if threads else []

    logger.info("🚀 合成控制器集合...")
    if spinmu_main(common + ["synth", "--config", str(config_path), "--out", str(ensemble_path)]) != EXIT_OK:
        logger.error("❌ 控制器合成失敗")
        return False

    logger.info("📊 執行研究...")
    code = spinmu_main(common + [
        "study", "all",
        "--config", str(config_path),
        "--ensemble", str(ensemble_path),
        "--out", str(output_dir)
    ])
    if code != EXIT_OK:
        logger.error(f"❌ 研究失敗（結束代碼 {code}）")
        return False

    logger.info(f"✅ 結果已寫入 {output_dir}")
    return True


def main():
    """主要執行函數"""
    parser = argparse.ArgumentParser(description="重現 11 自旋環 1→3 研究")
    parser.add_argument("--config", default=str(project_root / "configs" / "ring11.json"))
    parser.add_argument("--out", default=str(project_root / "output" / "ring11"))
    parser.add_argument("--threads", type=int, default=0, help="0 表示使用 SPINMU_THREADS")
    args = parser.parse_args()

    setup_logging()
    logger = logging.getLogger(__name__)

    logger.info("=" * 50)
    logger.info("🧲 spinmu 11 自旋環研究")
    logger.info("=" * 50)

    config_path = Path(args.config)
    if not check_environment(config_path):
        logger.error("❌ 環境檢查失敗")
        return False

    return run_pipeline(config_path, Path(args.out), args.threads)


if __name__ == "__main__":
    try:
        success = main()
        sys.exit(0 if success else 1)
    except Exception as e:
        print(f"執行失敗: {e}")
        sys.exit(1)
