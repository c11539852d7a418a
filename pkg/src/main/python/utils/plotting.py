"""
繪圖工具
以 matplotlib 輸出研究結果的 SVG 折線圖；固定雜湊鹽與省略日期，重跑時檔案相同
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


logger = logging.getLogger(__name__)

plt.rcParams.update({
    "svg.hashsalt": "spinmu",
    "svg.fonttype": "none",
    "figure.figsize": (8.0, 6.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
})

PathLike = Union[str, Path]
Series = Sequence[float]


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Saved plot {path}")
    return path


def _shade(ax, window: Optional[Tuple[int, int]]) -> None:
    if window is not None:
        ax.axvspan(window[0], window[1], color="tab:orange", alpha=0.15, label="crossover")


def plot_sensitivity(rank: Series, p_tf: Series, sensitivity: Series, log_sensitivity: Series,
                     path: PathLike, title: str = "", window: Optional[Tuple[int, int]] = None) -> Path:
    """上：p(t_f) 對排名；下：靈敏度與對數靈敏度"""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    top.plot(rank, p_tf, color="tab:blue", linewidth=1.2)
    top.set_ylabel("p(t_f)")
    if title:
        top.set_title(title)
    _shade(top, window)

    bottom.plot(rank, sensitivity, color="tab:red", linewidth=1.0, label="sensitivity")
    bottom.set_ylabel("dp/dδ")
    twin = bottom.twinx()
    log_values = [float("nan") if v is None else v for v in log_sensitivity]
    twin.plot(rank, log_values, color="tab:green", linewidth=1.0, linestyle="--", label="log-sensitivity")
    twin.set_ylabel("log-sensitivity")
    bottom.set_xlabel("controller rank m")
    _shade(bottom, window)
    fig.tight_layout()
    return _save(fig, path)


def plot_average_vs_instant(rank: Series, p_tf: Series, p_avg: Series, path: PathLike,
                            p_win: Optional[Series] = None, tau: Optional[float] = None) -> Path:
    """同一排名下的瞬時與時間平均傳輸機率"""
    fig, ax = plt.subplots()
    ax.plot(rank, p_tf, color="tab:blue", linewidth=1.2, label="p(t_f)")
    ax.plot(rank, p_avg, color="tab:red", linewidth=1.0, label="time-averaged p")
    if p_win is not None:
        ax.plot(rank, p_win, color="tab:gray", linewidth=0.8, linestyle=":", label="p averaged over 2 t_f")
    ax.set_xlabel("controller rank m")
    ax.set_ylabel("transfer probability")
    if tau is not None:
        ax.set_title(f"Kendall tau = {tau:.4f}")
    ax.legend(loc="lower left")
    fig.tight_layout()
    return _save(fig, path)


def plot_mu_study(rank: Series, p_avg: Series, sensitivity: Series, mu_lower: Series, mu_upper: Series,
                  path: PathLike, window: Optional[Tuple[int, int]] = None) -> Path:
    """依時間平均排名 I(m) 排列：上為 p_avg，中為靈敏度，下為 μ 上下界"""
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8.0, 8.0))
    axes[0].plot(rank, p_avg, color="tab:blue", linewidth=1.2)
    axes[0].set_ylabel("time-averaged p")
    axes[1].plot(rank, sensitivity, color="tab:red", linewidth=1.0)
    axes[1].set_ylabel("|dp/dδ|")
    axes[2].plot(rank, mu_lower, color="tab:purple", linewidth=1.0, label="μ lower")
    axes[2].plot(rank, mu_upper, color="tab:purple", linewidth=0.8, linestyle="--", label="μ upper")
    axes[2].set_ylabel("μ")
    axes[2].set_xlabel("rank by time-averaged probability")
    axes[2].legend(loc="upper left")
    for ax in axes:
        _shade(ax, window)
    fig.tight_layout()
    return _save(fig, path)
