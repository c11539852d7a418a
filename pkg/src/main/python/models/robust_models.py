"""
強健控制資料模型
輸出矩陣 C、廣義受控體 P、吸收控制器後的 G、不確定性區塊結構與 μ 結果
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field

import numpy as np

from .base_models import LabeledEnum, frozen_array
from ..core.errors import ConfigError, SpecificationError
from ..utils.data_converter import complex_to_pair, matrix_to_pairs, pair_to_complex, pairs_to_matrix


@dataclass(frozen=True, eq=False)
class OutputMatrix:
    """C：單位矩陣去掉 OUT 那一列，z = CΨ 為與 OUT 正交的誤差"""
    c: np.ndarray
    out_spin: int

    def __post_init__(self):
        object.__setattr__(self, "c", frozen_array(self.c, dtype=float))

    @property
    def n(self) -> int:
        return self.c.shape[0]


# 訊號順序：列 (ζ, z, Ψ) × 行 (v, w, u)
ROWS = ("zeta", "z", "psi")
COLUMNS = ("v", "w", "u")


@dataclass(frozen=True, eq=False)
class PlantMatrix:
    """3×3 區塊的廣義受控體 P，於頻率 s0 評估"""
    blocks: Tuple[Tuple[np.ndarray, ...], ...]
    s0: complex
    structure_labels: Tuple[str, ...]
    leakage_spins: Tuple[Optional[int], ...]  # 漏失通道的自旋（1-based），耦合通道為 None
    n: int

    def __post_init__(self):
        if len(self.blocks) != 3 or any(len(row) != 3 for row in self.blocks):
            raise SpecificationError("plant needs a 3x3 grid of blocks")
        blocks = tuple(tuple(frozen_array(b, dtype=complex) for b in row) for row in self.blocks)
        for a in range(3):
            heights = {blocks[a][b].shape[0] for b in range(3)}
            widths = {blocks[r][a].shape[1] for r in range(3)}
            if len(heights) != 1 or len(widths) != 1:
                raise SpecificationError("plant blocks do not conform")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "structure_labels", tuple(self.structure_labels))
        object.__setattr__(self, "leakage_spins", tuple(self.leakage_spins))

    def block(self, row: int, col: int) -> np.ndarray:
        """P_row,col（1-based，與 P11..P33 記號一致）"""
        return self.blocks[row - 1][col - 1]

    @property
    def channels(self) -> int:
        return len(self.structure_labels)

    @property
    def uncertainty_dim(self) -> int:
        return self.blocks[0][0].shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.block([list(row) for row in self.blocks])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s0": complex_to_pair(self.s0),
            "structures": list(self.structure_labels),
            "rows": list(ROWS),
            "columns": list(COLUMNS),
            "blocks": {
                f"P{r + 1}{c + 1}": matrix_to_pairs(self.blocks[r][c])
                for r in range(3) for c in range(3)
            }
        }


@dataclass(frozen=True, eq=False)
class GMatrix:
    """吸收控制器 −iD 後的 G：(v, w) → (ζ, z)"""
    g11: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    g22: np.ndarray
    s0: complex = 0j
    structure_labels: Tuple[str, ...] = ()
    channel_dims: Tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("g11", "g12", "g21", "g22"):
            object.__setattr__(self, name, frozen_array(getattr(self, name), dtype=complex))
        k, n = self.g12.shape
        if self.g11.shape != (k, k) or self.g21.shape != (n, k) or self.g22.shape != (n, n):
            raise SpecificationError(
                f"G blocks do not conform: g11 {self.g11.shape}, g12 {self.g12.shape}, "
                f"g21 {self.g21.shape}, g22 {self.g22.shape}"
            )
        dims = tuple(self.channel_dims) or ((k,) if k else ())
        if sum(dims) != k:
            raise SpecificationError(f"channel dimensions {dims} do not add up to {k}")
        object.__setattr__(self, "channel_dims", dims)
        object.__setattr__(self, "structure_labels", tuple(self.structure_labels))

    @property
    def n(self) -> int:
        return self.g22.shape[0]

    @property
    def uncertainty_dim(self) -> int:
        return self.g11.shape[0]

    def assemble(self) -> np.ndarray:
        """[[G11, G12], [G21, G22]] 組成單一方陣"""
        return np.block([[self.g11, self.g12], [self.g21, self.g22]])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s0": complex_to_pair(self.s0),
            "structures": list(self.structure_labels),
            "channel_dims": list(self.channel_dims),
            "g": matrix_to_pairs(self.assemble()),
            "g11": matrix_to_pairs(self.g11),
            "g12": matrix_to_pairs(self.g12),
            "g21": matrix_to_pairs(self.g21),
            "g22": matrix_to_pairs(self.g22)
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GMatrix":
        try:
            blocks = {name: pairs_to_matrix(data[name]) for name in ("g11", "g12", "g21", "g22")}
        except KeyError as e:
            raise ConfigError(f"G document is missing block {e}") from e
        return cls(
            s0=pair_to_complex(data.get("s0", 0.0)),
            structure_labels=tuple(data.get("structures", ())),
            channel_dims=tuple(int(d) for d in data.get("channel_dims", ())),
            **blocks
        )


class BlockKind(LabeledEnum):
    """不確定性區塊種類"""
    REPEATED_SCALAR = "repeated_scalar"
    FULL_COMPLEX = "full_complex"


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BlockKind.parse(self.kind))
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise SpecificationError(f"block dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def is_repeated(self) -> bool:
        return self.kind is BlockKind.REPEATED_SCALAR

    def to_dict(self) -> Dict[str, Any]:
        if self.is_repeated:
            return {"kind": self.kind.value, "dim": self.dim}
        return {"kind": self.kind.value, "rows": self.dim, "cols": self.dim}


def RepeatedScalar(dim: int) -> Block:
    """δ·I_dim"""
    return Block(BlockKind.REPEATED_SCALAR, dim)


def FullComplex(rows: int, cols: Optional[int] = None) -> Block:
    """完整複數區塊（僅支援方陣）"""
    if cols is not None and cols != rows:
        raise SpecificationError(f"full complex blocks must be square, got {rows}x{cols}")
    return Block(BlockKind.FULL_COMPLEX, rows)


@dataclass(frozen=True)
class BlockStructure:
    """依序排列的區塊對角結構 𝒟"""
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise SpecificationError("a block structure needs at least one block")
        object.__setattr__(self, "blocks", blocks)

    @property
    def total_dim(self) -> int:
        return sum(block.dim for block in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def slices(self) -> List[slice]:
        bounds = np.cumsum([0] + [block.dim for block in self.blocks])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def count(self, kind: Union[BlockKind, str]) -> int:
        kind = BlockKind.parse(kind)
        return sum(1 for block in self.blocks if block.kind is kind)

    def appended(self, block: Block) -> "BlockStructure":
        return BlockStructure(self.blocks + (block,))

    def check_matrix(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape != (self.total_dim, self.total_dim):
            raise SpecificationError(f"matrix of shape {g.shape} does not fit structure of dimension {self.total_dim}")
        return g

    def compose(self, parts: Sequence[Union[complex, np.ndarray]]) -> np.ndarray:
        """由每個區塊的參數（純量或方陣）組成區塊對角 Δ"""
        if len(parts) != len(self.blocks):
            raise SpecificationError(f"expected {len(self.blocks)} block values, got {len(parts)}")
        delta = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for block, part, sl in zip(self.blocks, parts, self.slices()):
            if block.is_repeated:
                delta[sl, sl] = complex(part) * np.eye(block.dim)
            else:
                part = np.asarray(part, dtype=complex)
                if part.shape != (block.dim, block.dim):
                    raise SpecificationError(f"full block needs {block.dim}x{block.dim}, got {part.shape}")
                delta[sl, sl] = part
        return delta

    def to_dict(self) -> Dict[str, Any]:
        return {"blocks": [block.to_dict() for block in self.blocks]}


@dataclass(eq=False)
class MuResult:
    """μ 的上下界、下界的見證擾動與上界的尺度矩陣"""
    lower: float
    upper: float
    witness: Optional[np.ndarray] = None
    scaling: Optional[np.ndarray] = None
    converged: bool = True
    iterations: int = 0
    structure: Optional[BlockStructure] = field(default=None, repr=False)

    @property
    def witness_norm(self) -> Optional[float]:
        if self.witness is None:
            return None
        return float(np.linalg.norm(self.witness, 2))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": float(self.lower),
            "upper": float(self.upper),
            "witness_norm": self.witness_norm,
            "converged": bool(self.converged),
            "iterations": int(self.iterations)
        }
