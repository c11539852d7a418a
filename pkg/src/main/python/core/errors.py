"""
例外類別
規格錯誤與數值錯誤分開，CLI 依此決定結束代碼
"""

from typing import Optional


class SpinMuError(Exception):
    """所有 spinmu 錯誤的基底類別"""


class SpecificationError(SpinMuError, ValueError):
    """輸入規格不合法（尺寸、索引、邊界、空輸入）"""


class StructureNotPresentError(SpecificationError):
    """網路中不存在所要求的擾動結構（例如鏈的首尾耦合）"""


class ConfigError(SpecificationError):
    """設定檔或集合檔不一致"""


class NumericalError(SpinMuError, ArithmeticError):
    """數值運算失敗"""


class NumericalContractError(NumericalError):
    """輸入違反數值契約（例如非 Hermitian 矩陣）"""


class FrequencySingularError(NumericalError):
    """(s0·I + iH) 在指定頻率奇異"""

    def __init__(self, s0: complex, suggested_offset: float = 1e-6,
                 condition: Optional[float] = None):
        self.s0 = s0
        self.suggested_offset = suggested_offset
        self.condition = condition
        message = (
            f"resolvent is singular at s0={s0} (condition number {condition:.3g}); "
            if condition is not None else f"resolvent is singular at s0={s0}; "
        )
        message += f"retry with an offset such as s0={suggested_offset:g} (--s0-offset)"
        super().__init__(message)


class SingularFeedbackError(NumericalError):
    """虛擬回授 (I + P33·iD) 奇異，無法吸收控制器"""


class MuBoundaryError(NumericalError):
    """(I − G11·Δ) 奇異：擾動位於 μ 邊界上"""
