"""
spinmu 命令列介面
synth / study / mu / tau / export-g 子命令；結束代碼 0 成功、2 設定錯誤、3 數值錯誤
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field, ValidationError

from .studies import (
    STUDIES,
    ExperimentConfig,
    StudyOptions,
    check_ensemble,
    controller_g,
    kendall_tau_test,
    load_or_synthesize,
    resolve_output_dir,
)
from ..core.config import load_runtime_settings, setup_logging
from ..core.errors import NumericalError, SpecificationError
from ..models.control_models import ControllerEnsemble
from ..models.robust_models import BlockStructure, FullComplex, RepeatedScalar
from ..services.ssv import BruteForceOptions, LowerBoundOptions, mu_brute_force, structured_mu
from ..utils.data_converter import ComplexMatrixConverter, load_json, read_csv_columns, save_json


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class BlockDocument(BaseModel):
    kind: str = Field(..., pattern="^(repeated_scalar|full_complex)$")
    dim: Optional[int] = Field(None, ge=1)
    rows: Optional[int] = Field(None, ge=1)
    cols: Optional[int] = Field(None, ge=1)


class BlockStructureDocument(BaseModel):
    """區塊結構 JSON：{"blocks": [{"kind": "repeated_scalar", "dim": 11}, {"kind": "full_complex", "rows": 11, "cols": 11}]}"""
    blocks: List[BlockDocument] = Field(..., min_length=1)

    def to_structure(self) -> BlockStructure:
        blocks = []
        for block in self.blocks:
            if block.kind == "repeated_scalar":
                if block.dim is None:
                    raise SpecificationError("repeated_scalar block needs 'dim'")
                blocks.append(RepeatedScalar(block.dim))
            else:
                rows = block.rows or block.dim
                if rows is None:
                    raise SpecificationError("full_complex block needs 'rows' (or 'dim')")
                blocks.append(FullComplex(rows, block.cols or rows))
        return BlockStructure(tuple(blocks))


def _emit(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    ensemble = load_or_synthesize(cfg, workers=args.threads)
    out = Path(args.out) if args.out else resolve_output_dir(cfg) / "ensemble.json"
    ensemble.save(out)
    logger.info(f"Wrote {len(ensemble)} controllers to {out}")
    _emit({"ensemble": str(out), "count": len(ensemble), "best_p_tf": ensemble.controllers[0].p_tf})
    return EXIT_OK


def cmd_study(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    opts = StudyOptions(workers=args.threads)
    ensemble = load_or_synthesize(cfg, args.ensemble, workers=args.threads)
    names = list(STUDIES) if args.name == "all" else [args.name]
    results = {}
    for name in names:
        kwargs = {"s0_offset": args.s0_offset} if name == "mu" else {}
        result = STUDIES[name](cfg, ensemble, args.out, opts, **kwargs)
        results[name] = result.to_dict()
    _emit(results)
    return EXIT_OK


def cmd_mu(args: argparse.Namespace) -> int:
    g = ComplexMatrixConverter.load_matrix(args.g)
    structure = BlockStructureDocument(**load_json(args.structure)).to_structure()
    result = structured_mu(g, structure, lower_opts=LowerBoundOptions(seed=args.seed))
    data = result.to_dict()
    if args.brute_force:
        data["brute_force"] = mu_brute_force(g, structure, BruteForceOptions(seed=args.seed))
    _emit(data)
    return EXIT_OK


def cmd_tau(args: argparse.Namespace) -> int:
    frame = read_csv_columns(args.csv, args.x, args.y)
    tau, p_value = kendall_tau_test(frame[args.x].to_numpy(), frame[args.y].to_numpy())
    _emit({"x": args.x, "y": args.y, "n": int(len(frame)), "tau": tau, "p_value": p_value})
    return EXIT_OK


def cmd_export_g(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    ensemble = check_ensemble(cfg, ControllerEnsemble.load(args.ensemble))
    order = ensemble.by_average_order() if args.order == "avg" else ensemble.controllers
    if not 1 <= args.rank <= len(order):
        raise SpecificationError(f"rank {args.rank} out of range 1..{len(order)}")
    structures = cfg.structure_list()
    if not structures:
        raise SpecificationError("export-g needs at least one perturbation structure in the config")
    g = controller_g(ensemble, structures, cfg.s0_value(args.s0_offset), order[args.rank - 1])
    path = save_json(g.to_dict(), args.out)
    _emit({"g": str(path), "dim": g.uncertainty_dim + g.n, "structures": list(g.structure_labels)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinmu", description="Robust bias-field control of spin-network transfer")
    parser.add_argument("--log-level", default=None, help="DEBUG / INFO / WARNING（預設 SPINMU_LOG_LEVEL）")
    parser.add_argument("--threads", type=int, default=None, help="工作執行緒數（預設 SPINMU_THREADS）")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthesize a controller ensemble")
    synth.add_argument("--config", required=True)
    synth.add_argument("--out", default=None, help="ensemble JSON path")
    synth.set_defaults(func=cmd_synth)

    study = sub.add_parser("study", help="run a study on an ensemble")
    study.add_argument("name", choices=sorted(STUDIES) + ["all"])
    study.add_argument("--config", required=True)
    study.add_argument("--ensemble", default=None)
    study.add_argument("--out", default=None, help="output directory")
    study.add_argument("--s0-offset", type=float, default=None, help="evaluate G at s0 + offset")
    study.set_defaults(func=cmd_study)

    mu = sub.add_parser("mu", help="mu bounds of a matrix over a block structure")
    mu.add_argument("--g", required=True, help="JSON matrix of [re, im] pairs")
    mu.add_argument("--structure", required=True)
    mu.add_argument("--seed", type=int, default=0)
    mu.add_argument("--brute-force", action="store_true")
    mu.set_defaults(func=cmd_mu)

    tau = sub.add_parser("tau", help="Kendall tau-b between two CSV columns")
    tau.add_argument("--csv", required=True)
    tau.add_argument("--x", required=True)
    tau.add_argument("--y", required=True)
    tau.set_defaults(func=cmd_tau)

    export = sub.add_parser("export-g", help="write the G matrix of one controller")
    export.add_argument("--config", required=True)
    export.add_argument("--ensemble", required=True)
    export.add_argument("--rank", type=int, default=1)
    export.add_argument("--order", choices=["avg", "inst"], default="avg")
    export.add_argument("--s0-offset", type=float, default=None)
    export.add_argument("--out", required=True)
    export.set_defaults(func=cmd_export_g)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = load_runtime_settings()
    setup_logging(args.log_level or settings.log_level)
    if args.threads is None:
        args.threads = settings.threads
    try:
        return args.func(args)
    except (SpecificationError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"Numerical error: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
