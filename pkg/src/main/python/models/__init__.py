"""
自旋網路強健控制資料模型
網路規格、控制器集合、受控體與 μ 結果的統一資料結構
"""

from .base_models import (
    LabeledEnum,
    frozen_array,
    check_index
)

from .network_models import (
    Topology,
    CouplingModel,
    PerturbationKind,
    SpinNetworkSpec,
    Hamiltonian,
    BiasField,
    PerturbationStructure,
    TransferProblem,
    QuantumState,
    basis_vector
)

from .control_models import (
    Controller,
    ControllerEnsemble
)

from .analysis_models import (
    SensitivityRecord,
    RunRecord
)

from .robust_models import (
    OutputMatrix,
    PlantMatrix,
    GMatrix,
    BlockKind,
    Block,
    BlockStructure,
    RepeatedScalar,
    FullComplex,
    MuResult
)

__all__ = [
    'LabeledEnum',
    'frozen_array',
    'check_index',
    'Topology',
    'CouplingModel',
    'PerturbationKind',
    'SpinNetworkSpec',
    'Hamiltonian',
    'BiasField',
    'PerturbationStructure',
    'TransferProblem',
    'QuantumState',
    'basis_vector',
    'Controller',
    'ControllerEnsemble',
    'SensitivityRecord',
    'RunRecord',
    'OutputMatrix',
    'PlantMatrix',
    'GMatrix',
    'BlockKind',
    'Block',
    'BlockStructure',
    'RepeatedScalar',
    'FullComplex',
    'MuResult'
]
