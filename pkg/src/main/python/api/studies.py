"""
研究流程
控制器集合上的靈敏度、瞬時對時間平均、μ 對傳輸機率三種研究，輸出 CSV / SVG / JSON 與 Kendall τ 統計
"""

import json
import math
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, asdict, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy.stats import kendalltau, rankdata

from ..core.config import load_runtime_settings, run_parallel
from ..core.dynamics import TransferDynamics, aggregate_records, make_record, sensitivity_sweep
from ..core.errors import ConfigError, SpecificationError
from ..core.network import NetworkSpecDocument, build_hamiltonian, coupling_structure, leakage_structure, perturbation_scale
from ..models.analysis_models import RunRecord, SensitivityRecord
from ..models.control_models import Controller, ControllerEnsemble
from ..models.network_models import PerturbationKind, PerturbationStructure, SpinNetworkSpec, TransferProblem
from ..models.robust_models import GMatrix
from ..services.lft import absorb_controller, build_plant, output_matrix
from ..services.ssv import LowerBoundOptions, UpperBoundOptions, robust_performance_mu
from ..services.synthesis import SynthesisOptions, synthesize
from ..utils.data_converter import complex_to_pair, pair_to_complex, save_json, write_csv
from ..utils.plotting import plot_average_vs_instant, plot_mu_study, plot_sensitivity


logger = logging.getLogger(__name__)

Window = Tuple[int, int]


# ---------------------------------------------------------------- configuration

class TransferSection(BaseModel):
    """傳輸問題 {"in": k, "out": l}"""
    model_config = ConfigDict(populate_by_name=True)

    in_spin: int = Field(..., alias="in", ge=1, description="輸入自旋")
    out_spin: int = Field(..., alias="out", ge=1, description="輸出自旋")


class SynthesisSection(BaseModel):
    count: int = Field(100, ge=1, description="控制器數量 M")
    seed: int = Field(42, description="亂數種子")
    bias_bound: float = Field(100.0, gt=0, description="偏置上限 B")
    t_min: float = Field(0.1, gt=0)
    t_max: Optional[float] = Field(None, gt=0, description="預設 5N")
    time_weight: float = Field(0.0, ge=0)
    max_iter: int = Field(400, ge=1)


class StructureSelector(BaseModel):
    kind: str = Field(..., pattern="^(coupling|leakage)$")
    k: int = Field(..., ge=1, description="耦合 (k, k+1) 或漏失中心 k")


class ExperimentConfig(BaseModel):
    """實驗設定檔"""
    network: NetworkSpecDocument
    transfer: TransferSection
    synthesis: SynthesisSection = Field(default_factory=SynthesisSection)
    structures: List[StructureSelector] = Field(default_factory=list, description="μ 研究的不確定通道")
    sensitivity_structures: Optional[List[StructureSelector]] = Field(
        None, description="靈敏度研究的擾動結構，未指定時沿用 structures"
    )
    s0: Union[float, List[float]] = Field(0.0, description="評估頻率，純量或 [re, im]")
    s0_offset: float = Field(0.0, description="加到 s0 實部的偏移")
    crossover_window: Optional[List[int]] = Field(None, min_length=2, max_length=2)
    ensemble: Optional[str] = Field(None, description="既有控制器集合檔")
    output_dir: Optional[str] = None
    seed: int = 42

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """讀取設定檔；pydantic 驗證錯誤原樣拋出"""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read experiment config {path}: {e}") from e
        return cls(**data)

    def to_spec(self) -> SpinNetworkSpec:
        return self.network.to_spec()

    def to_problem(self) -> TransferProblem:
        return TransferProblem(in_spin=self.transfer.in_spin, out_spin=self.transfer.out_spin, n=self.network.n)

    def _build(self, selectors: List[StructureSelector],
               kind: Optional[PerturbationKind]) -> List[PerturbationStructure]:
        spec = self.to_spec()
        selected = []
        for selector in selectors:
            if kind is not None and selector.kind != kind.value:
                continue
            builder = coupling_structure if selector.kind == "coupling" else leakage_structure
            selected.append(builder(spec, selector.k))
        return selected

    def structure_list(self, kind: Optional[PerturbationKind] = None) -> List[PerturbationStructure]:
        """μ 研究與 export-g 的不確定通道"""
        return self._build(self.structures, kind)

    def sensitivity_structure_list(self, kind: Optional[PerturbationKind] = None) -> List[PerturbationStructure]:
        selectors = self.structures if self.sensitivity_structures is None else self.sensitivity_structures
        return self._build(selectors, kind)

    def synthesis_options(self, workers: Optional[int] = None) -> SynthesisOptions:
        return SynthesisOptions(
            bias_bound=self.synthesis.bias_bound,
            t_min=self.synthesis.t_min,
            t_max=self.synthesis.t_max,
            time_weight=self.synthesis.time_weight,
            max_iter=self.synthesis.max_iter,
            workers=workers
        )

    def s0_value(self, offset: Optional[float] = None) -> complex:
        return pair_to_complex(self.s0) + (self.s0_offset if offset is None else offset)

    def window(self) -> Optional[Window]:
        if self.crossover_window is None:
            return None
        lo, hi = self.crossover_window
        if not 1 <= lo < hi:
            raise SpecificationError(f"crossover window must satisfy 1 <= lo < hi, got [{lo}, {hi}]")
        return lo, hi


@dataclass
class StudyOptions:
    """研究的統計與偵測參數"""
    fidelity_threshold: float = 0.9     # p_tf 跌破此值視為品質下降
    sensitivity_factor: float = 2.0     # |sens| 超過前 10% 平均的倍數
    top_fraction: float = 0.1
    min_window: int = 3
    crossover_fraction: float = 0.15    # 交叉區間寬度佔集合大小的比例
    edge_fraction: float = 0.25         # 區間頭尾各取此比例平均以比較升降
    stationary_tolerance: float = 1e-10  # 1 − p_tf 低於此值時一階靈敏度視為 0
    window_factor: float = 2.0          # p_win 的平均區間 = factor·t_f
    window_steps: int = 2001
    workers: Optional[int] = None
    upper: UpperBoundOptions = field(default_factory=UpperBoundOptions)
    lower: LowerBoundOptions = field(default_factory=LowerBoundOptions)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("workers")
        return data


@dataclass
class StudyResult:
    """單一研究的輸出"""
    study: str
    files: List[Path]
    summary: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {"study": self.study, "files": [str(f) for f in self.files], "summary": self.summary}


# ---------------------------------------------------------------- statistics

def kendall_tau_test(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """τ-b 與雙尾 p 值"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise SpecificationError(f"Kendall tau needs two equal-length lists, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise SpecificationError("Kendall tau needs at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise SpecificationError("Kendall tau inputs must be finite")
    if np.unique(x).size == 1 or np.unique(y).size == 1:
        raise SpecificationError("Kendall tau is undefined when one list is all ties")
    result = kendalltau(x, y, variant="b")
    return float(result.statistic if hasattr(result, "statistic") else result[0]), float(result.pvalue)


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall τ-b（處理同值）"""
    return kendall_tau_test(x, y)[0]


def _tau_entry(name: str, x: Sequence[float], y: Sequence[float],
               taus: Dict[str, Optional[float]], p_values: Dict[str, Optional[float]]) -> None:
    try:
        taus[name], p_values[name] = kendall_tau_test(x, y)
    except SpecificationError as e:
        logger.warning(f"Kendall tau '{name}' undefined: {e}")
        taus[name], p_values[name] = None, None


def _first_rank(mask: np.ndarray) -> Optional[int]:
    hits = np.flatnonzero(mask)
    return int(hits[0]) + 1 if hits.size else None


def _top_count(size: int, fraction: float) -> int:
    return max(1, int(math.ceil(fraction * size)))


def _unit_ranks(values: np.ndarray) -> np.ndarray:
    """平均名次轉到 [0, 1]；同值同名次"""
    if values.size < 2:
        return np.zeros(values.size)
    return (rankdata(values) - 1.0) / (values.size - 1)


def detect_crossover(p_avg: Sequence[float], mu_lower: Sequence[float],
                     sensitivity: Optional[Sequence[float]] = None,
                     opts: Optional[StudyOptions] = None) -> Optional[Window]:
    """
    交叉區間：p_avg 下降最快、且 μ（與靈敏度）同時上升的連續排名區間

    以寬度 W = max(min_window, ⌈crossover_fraction·M⌉) 的視窗滑過排名；
    分數為 p_avg 的正規化降幅乘上 μ 與靈敏度名次在視窗尾端對頭端的升幅，
    任一項不為正時分數為 0。回傳分數最高的第一個視窗，全部為 0 時回傳 None
    """
    opts = opts or StudyOptions()
    p_avg = np.asarray(p_avg, dtype=float)
    mu_lower = np.asarray(mu_lower, dtype=float)
    size = p_avg.size
    if size != mu_lower.size:
        raise SpecificationError("p_avg and mu_lower must have the same length")
    if sensitivity is not None and len(sensitivity) != size:
        raise SpecificationError("sensitivity must have the same length as p_avg")
    if size < opts.min_window:
        return None
    width = min(size, max(opts.min_window, int(math.ceil(opts.crossover_fraction * size))))
    edge = max(1, int(opts.edge_fraction * width))
    span = float(np.max(p_avg) - np.min(p_avg))
    mu_rank = _unit_ranks(mu_lower)
    sens_rank = _unit_ranks(np.asarray(sensitivity, dtype=float)) if sensitivity is not None else None

    def rise(ranks: np.ndarray, lo: int, hi: int) -> float:
        return float(np.mean(ranks[hi - edge + 1:hi + 1]) - np.mean(ranks[lo:lo + edge]))

    scores = np.zeros(size - width + 1)
    for lo in range(size - width + 1):
        hi = lo + width - 1
        drop = (p_avg[lo] - p_avg[hi]) / span if span > 0 else 0.0
        terms = [drop, rise(mu_rank, lo, hi)]
        if sens_rank is not None:
            terms.append(rise(sens_rank, lo, hi))
        if all(term > 0 for term in terms):
            scores[lo] = float(np.prod(terms))
    best = int(np.argmax(scores))
    if scores[best] <= 0:
        return None
    return best + 1, best + width


def sensitivity_crossover(p_tf: Sequence[float], sensitivity: Sequence[float],
                          opts: Optional[StudyOptions] = None) -> Dict[str, Optional[float]]:
    """p_tf 首次跌破門檻的排名與 |sens| 首次超過前 10% 平均兩倍的排名"""
    opts = opts or StudyOptions()
    p_tf = np.asarray(p_tf, dtype=float)
    magnitude = np.abs(np.asarray(sensitivity, dtype=float))
    size = p_tf.size
    baseline = float(np.mean(magnitude[:_top_count(size, opts.top_fraction)]))
    p_drop = _first_rank(p_tf < opts.fidelity_threshold)
    sens_rise = _first_rank(magnitude > opts.sensitivity_factor * baseline)
    gap = abs(p_drop - sens_rise) if p_drop is not None and sens_rise is not None else None
    return {
        "p_drop_rank": p_drop,
        "sensitivity_rise_rank": sens_rise,
        "gap": gap,
        "gap_fraction": None if gap is None else gap / size
    }


# ---------------------------------------------------------------- ensembles

def resolve_output_dir(cfg: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> Path:
    if output_dir is not None:
        return Path(output_dir)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(load_runtime_settings().output_dir)


def check_ensemble(cfg: ExperimentConfig, ensemble: ControllerEnsemble) -> ControllerEnsemble:
    """集合必須與設定檔的網路與傳輸問題一致"""
    if ensemble.spec != cfg.to_spec():
        raise ConfigError(f"ensemble network {ensemble.spec.to_dict()} does not match config {cfg.to_spec().to_dict()}")
    if ensemble.problem != cfg.to_problem():
        raise ConfigError(f"ensemble transfer {ensemble.problem.to_dict()} does not match config {cfg.to_problem().to_dict()}")
    return ensemble


def load_or_synthesize(cfg: ExperimentConfig, ensemble_path: Optional[Union[str, Path]] = None,
                       workers: Optional[int] = None) -> ControllerEnsemble:
    """優先讀取既有集合檔，否則依設定合成"""
    path = ensemble_path or cfg.ensemble
    if path:
        logger.info(f"Loading ensemble from {path}")
        return check_ensemble(cfg, ControllerEnsemble.load(path))
    return synthesize(cfg.to_spec(), cfg.to_problem(), cfg.synthesis.count, cfg.synthesis.seed,
                      cfg.synthesis_options(workers))


def _average_probabilities(ensemble: ControllerEnsemble) -> List[float]:
    h = build_hamiltonian(ensemble.spec)
    return [
        c.p_avg if c.p_avg is not None else TransferDynamics(h, c.d, ensemble.problem).averaged_probability()
        for c in ensemble.controllers
    ]


# ---------------------------------------------------------------- studies

def _primary_records(records: List[SensitivityRecord], structures: int) -> List[SensitivityRecord]:
    """每個控制器一筆：單一結構取其值，多結構取 "mean" 彙總"""
    if structures == 1:
        return records
    return [r for r in records if r.structure_label == "mean"]


def run_sensitivity_study(cfg: ExperimentConfig, ensemble: Optional[ControllerEnsemble] = None,
                          output_dir: Optional[Union[str, Path]] = None,
                          opts: Optional[StudyOptions] = None) -> StudyResult:
    """
    耦合與漏失兩族擾動在 t_f(m) 的靈敏度與對數靈敏度，依控制器排名輸出
    """
    opts = opts or StudyOptions()
    if not cfg.sensitivity_structure_list():
        raise SpecificationError("sensitivity study needs at least one perturbation structure")
    ensemble = ensemble or load_or_synthesize(cfg, workers=opts.workers)
    out = resolve_output_dir(cfg, output_dir)
    p_avg = _average_probabilities(ensemble)

    files: List[Path] = []
    detail_rows: List[Dict[str, Any]] = []
    summary: Dict[str, Any] = {"study": "sensitivity", "count": len(ensemble), "families": {}}
    for kind in PerturbationKind:
        structures = cfg.sensitivity_structure_list(kind)
        if not structures:
            continue
        records = sensitivity_sweep(ensemble, structures, kind, workers=opts.workers)
        for record in records:
            detail_rows.append({"family": kind.value, **record.to_dict()})
        primary = _primary_records(records, len(structures))
        rows = [{
            "m": r.m,
            "rank": r.rank,
            "p_tf": r.p,
            "p_avg": p_avg[r.rank - 1],
            "structure": r.structure_label,
            "sensitivity": r.value,
            "log_sensitivity": r.log_value
        } for r in primary]
        files.append(write_csv(rows, out / f"sensitivity_{kind.value}.csv",
                               columns=["m", "rank", "p_tf", "p_avg", "structure", "sensitivity", "log_sensitivity"]))
        crossover = sensitivity_crossover([r.p for r in primary], [r.value for r in primary], opts)
        window = None
        if crossover["p_drop_rank"] is not None and crossover["sensitivity_rise_rank"] is not None:
            window = (min(crossover["p_drop_rank"], crossover["sensitivity_rise_rank"]),
                      max(crossover["p_drop_rank"], crossover["sensitivity_rise_rank"]))
        files.append(plot_sensitivity(
            [r.rank for r in primary], [r.p for r in primary], [r.value for r in primary],
            [r.log_value for r in primary], out / f"sensitivity_{kind.value}.svg",
            title=f"{kind.value} perturbations ({', '.join(s.label for s in structures)})",
            window=window
        ))
        summary["families"][kind.value] = {
            "structures": [s.label for s in structures],
            "crossover": crossover
        }
        logger.info(f"Sensitivity study ({kind.value}): p_tf drops at rank {crossover['p_drop_rank']}, "
                    f"sensitivity rises at rank {crossover['sensitivity_rise_rank']}")

    files.append(write_csv(detail_rows, out / "sensitivity_detail.csv",
                           columns=["family", "m", "rank", "structure_label", "t", "p", "value", "log_value"]))
    files.append(save_json(summary, out / "sensitivity_summary.json"))
    return StudyResult("sensitivity", files, summary)


def run_average_vs_instant_study(cfg: ExperimentConfig, ensemble: Optional[ControllerEnsemble] = None,
                                 output_dir: Optional[Union[str, Path]] = None,
                                 opts: Optional[StudyOptions] = None) -> StudyResult:
    """瞬時 p(t_f) 排名與時間平均排名的一致性（Kendall τ）"""
    opts = opts or StudyOptions()
    ensemble = ensemble or load_or_synthesize(cfg, workers=opts.workers)
    out = resolve_output_dir(cfg, output_dir)
    h = build_hamiltonian(ensemble.spec)

    def evaluate(indexed: Tuple[int, Controller]) -> Dict[str, Any]:
        rank, controller = indexed
        dynamics = TransferDynamics(h, controller.d, ensemble.problem)
        p_avg = controller.p_avg if controller.p_avg is not None else dynamics.averaged_probability()
        return {
            "m": controller.m,
            "rank_inst": rank,
            "rank_avg": ensemble.avg_rank[rank - 1],
            "p_tf": controller.p_tf,
            "p_avg": p_avg,
            "p_win": dynamics.windowed_probability(opts.window_factor * controller.t_f, opts.window_steps)
        }

    rows = run_parallel(evaluate, list(enumerate(ensemble.controllers, start=1)), opts.workers)
    taus: Dict[str, Optional[float]] = {}
    p_values: Dict[str, Optional[float]] = {}
    _tau_entry("p_tf_vs_p_avg", [r["p_tf"] for r in rows], [r["p_avg"] for r in rows], taus, p_values)
    _tau_entry("p_tf_vs_p_win", [r["p_tf"] for r in rows], [r["p_win"] for r in rows], taus, p_values)

    files = [
        write_csv(rows, out / "average_vs_instant.csv",
                  columns=["m", "rank_inst", "rank_avg", "p_tf", "p_avg", "p_win"]),
        plot_average_vs_instant([r["rank_inst"] for r in rows], [r["p_tf"] for r in rows],
                                [r["p_avg"] for r in rows], out / "average_vs_instant.svg",
                                p_win=[r["p_win"] for r in rows], tau=taus["p_tf_vs_p_avg"])
    ]
    summary = {"study": "average", "count": len(rows), "tau": taus, "p_value": p_values}
    files.append(save_json(summary, out / "average_summary.json"))
    logger.info(f"Average-vs-instant study: tau={taus['p_tf_vs_p_avg']}")
    return StudyResult("average", files, summary)


def controller_g(ensemble: ControllerEnsemble, structures: Sequence[PerturbationStructure],
                 s0: complex, controller: Controller) -> GMatrix:
    """單一控制器在 s0 的 G 矩陣"""
    h = build_hamiltonian(ensemble.spec)
    plant = build_plant(h, output_matrix(ensemble.problem), structures, s0)
    return absorb_controller(plant, controller.d)


def run_mu_study(cfg: ExperimentConfig, ensemble: Optional[ControllerEnsemble] = None,
                 output_dir: Optional[Union[str, Path]] = None,
                 opts: Optional[StudyOptions] = None, s0_offset: Optional[float] = None) -> StudyResult:
    """
    依時間平均排名 I(m) 計算每個控制器的強健性能 μ，並與靈敏度、p_avg 做 Kendall τ

    不確定性為每個選定結構一個 δ·I_n 通道，性能區塊為 n×n 完整複數區塊
    """
    opts = opts or StudyOptions()
    structures = cfg.structure_list()
    if not structures:
        raise SpecificationError("mu study needs at least one perturbation structure")
    ensemble = ensemble or load_or_synthesize(cfg, workers=opts.workers)
    out = resolve_output_dir(cfg, output_dir)
    s0 = cfg.s0_value(s0_offset)
    h = build_hamiltonian(ensemble.spec)
    plant = build_plant(h, output_matrix(ensemble.problem), structures, s0)
    rank_inst = {id(c): i for i, c in enumerate(ensemble.controllers, start=1)}
    ordered = ensemble.by_average_order()

    def evaluate(indexed: Tuple[int, Controller]) -> RunRecord:
        rank_avg, controller = indexed
        dynamics = TransferDynamics(h, controller.d, ensemble.problem)
        records = []
        for structure in structures:
            scale = perturbation_scale(structure, controller.d)
            p, value = dynamics.sensitivity(scale * structure.s.astype(complex), controller.t_f)
            records.append(make_record(p, value, structure.label, controller.t_f))
        sens = records[0] if len(records) == 1 else aggregate_records(records)
        mu = robust_performance_mu(absorb_controller(plant, controller.d),
                                   upper_opts=opts.upper, lower_opts=opts.lower)
        return RunRecord(
            m=controller.m,
            rank_inst=rank_inst[id(controller)],
            rank_avg=rank_avg,
            p_tf=controller.p_tf,
            p_avg=controller.p_avg if controller.p_avg is not None else dynamics.averaged_probability(),
            sens=sens.value,
            log_sens=sens.log_value,
            mu_lower=mu.lower,
            mu_upper=mu.upper
        )

    records: List[RunRecord] = run_parallel(evaluate, list(enumerate(ordered, start=1)), opts.workers)
    p_avg = np.array([r.p_avg for r in records])
    mu_lower = np.array([r.mu_lower for r in records])
    # p ≈ 1 為駐點，一階靈敏度以 0 計
    stationary = np.array([1.0 - r.p_tf < opts.stationary_tolerance for r in records], dtype=bool)
    magnitude = np.where(stationary, 0.0, np.abs([r.sens for r in records]))

    window, window_source = cfg.window(), "config"
    if window is None:
        window, window_source = detect_crossover(p_avg, mu_lower, magnitude, opts), "detected"
    if window is None or window[1] > len(records):
        logger.warning("No crossover window found; using the full rank range")
        window, window_source = (1, len(records)), "full"

    taus: Dict[str, Optional[float]] = {}
    p_values: Dict[str, Optional[float]] = {}
    _tau_entry("mu_vs_sens", magnitude, mu_lower, taus, p_values)
    _tau_entry("mu_vs_p", mu_lower, p_avg, taus, p_values)
    lo, hi = window
    _tau_entry("mu_vs_p_incremental", np.diff(mu_lower[lo - 1:hi]), np.diff(p_avg[lo - 1:hi]), taus, p_values)

    files = [
        write_csv([r.to_dict() for r in records], out / "mu_study.csv",
                  columns=["m", "rank_inst", "rank_avg", "p_tf", "p_avg", "sens", "log_sens", "mu_lower", "mu_upper"]),
        plot_mu_study([r.rank_avg for r in records], p_avg, magnitude, mu_lower,
                      [r.mu_upper for r in records], out / "mu_study.svg", window=window)
    ]
    summary = {
        "study": "mu",
        "count": len(records),
        "s0": complex_to_pair(s0),
        "structures": [s.label for s in structures],
        "window": list(window),
        "window_source": window_source,
        "stationary": int(np.count_nonzero(stationary)),
        "tau": taus,
        "p_value": p_values
    }
    files.append(save_json(summary, out / "mu_summary.json"))
    logger.info(f"Mu study: tau(sens, mu)={taus['mu_vs_sens']}, tau(mu, p_avg)={taus['mu_vs_p']}, "
                f"incremental tau={taus['mu_vs_p_incremental']} over {window}")
    return StudyResult("mu", files, summary)


STUDIES = {
    "sensitivity": run_sensitivity_study,
    "average": run_average_vs_instant_study,
    "mu": run_mu_study,
}


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """由 dict 建構設定；驗證失敗轉為 ConfigError"""
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}") from e
