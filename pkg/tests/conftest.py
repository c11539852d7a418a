"""
pytest 共用設定
將專案根目錄加入 sys.path，提供常用網路與亂數 fixture
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.main.python.core.network import build_hamiltonian  # noqa: E402
from src.main.python.models.network_models import SpinNetworkSpec, TransferProblem  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chain2():
    return SpinNetworkSpec(n=2, topology="chain")


@pytest.fixture
def ring11():
    return SpinNetworkSpec(n=11, topology="ring")


@pytest.fixture
def ring11_h(ring11):
    return build_hamiltonian(ring11)


@pytest.fixture
def ring11_problem():
    return TransferProblem(in_spin=1, out_spin=3, n=11)
