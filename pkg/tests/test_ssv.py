"""
結構化奇異值 μ 測試
"""

import numpy as np
import pytest

from src.main.python.core.errors import SpecificationError
from src.main.python.core.network import build_hamiltonian, coupling_structure
from src.main.python.models.network_models import BiasField, TransferProblem
from src.main.python.models.robust_models import BlockStructure, FullComplex, RepeatedScalar
from src.main.python.services.lft import absorb_controller, build_plant, output_matrix
from src.main.python.services.ssv import (
    mu_brute_force,
    mu_lower_bound,
    mu_upper_bound,
    robust_performance_mu,
    structured_mu,
    witness_is_valid,
)


def _random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


ORACLE_STRUCTURES = [
    (RepeatedScalar(2), FullComplex(1)),
    (FullComplex(1), FullComplex(1), FullComplex(1)),
    (RepeatedScalar(3), FullComplex(1)),
    (RepeatedScalar(2), FullComplex(2)),
    (RepeatedScalar(1), FullComplex(1), FullComplex(2)),
]


class TestKnownValues:
    """已知 μ 值"""

    def test_full_block_is_max_singular_value(self):
        g = _random_complex(np.random.default_rng(0), 4)
        structure = BlockStructure((FullComplex(4),))
        result = structured_mu(g, structure)
        sigma = np.linalg.norm(g, 2)
        assert abs(result.upper - sigma) <= 1e-6 * sigma
        assert abs(result.lower - sigma) <= 1e-6 * sigma

    def test_repeated_scalar_diagonal(self):
        g = np.diag([2.0, 0.5]).astype(complex)
        result = structured_mu(g, BlockStructure((RepeatedScalar(2),)))
        assert abs(result.lower - 2.0) < 1e-6
        assert abs(result.upper - 2.0) < 1e-6
        assert witness_is_valid(g, result.witness)
        assert np.isclose(result.witness_norm, 0.5)

    def test_nilpotent_has_zero_mu(self):
        g = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        structure = BlockStructure((RepeatedScalar(2),))
        beta, witness = mu_lower_bound(g, structure)
        assert beta == 0.0
        assert witness is None
        upper, _ = mu_upper_bound(g, structure)
        assert upper < 1e-6

    def test_zero_matrix(self):
        result = structured_mu(np.zeros((3, 3)), BlockStructure((RepeatedScalar(2), FullComplex(1))))
        assert result.lower == 0.0 and result.upper == 0.0

    def test_identity(self):
        structure = BlockStructure((RepeatedScalar(2),))
        result = structured_mu(np.eye(2), structure)
        assert abs(result.lower - 1.0) < 1e-9
        assert abs(result.upper - 1.0) < 1e-6
        assert abs(mu_brute_force(np.eye(2), structure) - 1.0) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(SpecificationError):
            structured_mu(np.eye(3), BlockStructure((RepeatedScalar(2),)))


class TestBoundProperties:
    """上下界的一般性質"""

    def test_lower_never_exceeds_upper(self):
        rng = np.random.default_rng(1)
        for case in range(20):
            structure = BlockStructure(ORACLE_STRUCTURES[case % len(ORACLE_STRUCTURES)])
            g = _random_complex(rng, structure.total_dim)
            result = structured_mu(g, structure)
            assert result.lower <= result.upper + 1e-9
            assert result.upper <= np.linalg.norm(g, 2) + 1e-9
            if result.lower > 0:
                assert witness_is_valid(g, result.witness)
                assert np.isclose(result.witness_norm, 1.0 / result.lower)

    def test_separate_bounds_are_reported_unchanged(self):
        """分開計算的上下界成立 β_l ≤ β_u，且 structured_mu 原樣回報兩者"""
        rng = np.random.default_rng(7)
        for case in range(15):
            structure = BlockStructure(ORACLE_STRUCTURES[case % len(ORACLE_STRUCTURES)])
            g = _random_complex(rng, structure.total_dim)
            lower, _ = mu_lower_bound(g, structure)
            upper, _ = mu_upper_bound(g, structure)
            assert lower <= upper + 1e-9
            result = structured_mu(g, structure)
            assert result.lower == pytest.approx(lower, rel=1e-12)
            assert result.upper == pytest.approx(upper, rel=1e-12)

    def test_homogeneous_in_scale(self):
        rng = np.random.default_rng(2)
        structure = BlockStructure((RepeatedScalar(2), FullComplex(2)))
        g = _random_complex(rng, 4)
        base = structured_mu(g, structure)
        scaled = structured_mu(3.0 * g, structure)
        assert abs(scaled.lower - 3.0 * base.lower) <= 1e-6 * scaled.lower
        assert abs(scaled.upper - 3.0 * base.upper) <= 1e-6 * scaled.upper

    def test_coarser_structure_never_lowers_upper_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            g = _random_complex(rng, 4)
            repeated, _ = mu_upper_bound(g, BlockStructure((RepeatedScalar(4),)))
            split, _ = mu_upper_bound(g, BlockStructure((FullComplex(2), FullComplex(2))))
            whole, _ = mu_upper_bound(g, BlockStructure((FullComplex(4),)))
            assert np.isclose(whole, np.linalg.norm(g, 2))
            assert whole >= repeated - 1e-9
            assert whole >= split - 1e-9

    def test_witness_is_structured(self):
        rng = np.random.default_rng(4)
        structure = BlockStructure((RepeatedScalar(3), FullComplex(1)))
        g = _random_complex(rng, 4)
        _, witness = mu_lower_bound(g, structure)
        block = witness[:3, :3]
        assert np.allclose(block, block[0, 0] * np.eye(3))
        assert np.allclose(witness[:3, 3], 0) and np.allclose(witness[3, :3], 0)

    def test_seed_reproducible(self):
        g = _random_complex(np.random.default_rng(5), 4)
        structure = BlockStructure((RepeatedScalar(2), FullComplex(2)))
        first = structured_mu(g, structure)
        second = structured_mu(g, structure)
        assert first.lower == second.lower
        assert first.upper == second.upper


class TestBruteForce:
    """與暴力搜尋比對"""

    @pytest.mark.parametrize("blocks", ORACLE_STRUCTURES)
    def test_bounds_agree_with_grid_search(self, blocks):
        structure = BlockStructure(blocks)
        rng = np.random.default_rng(structure.total_dim + len(blocks))
        for _ in range(2):
            g = _random_complex(rng, structure.total_dim)
            reference = mu_brute_force(g, structure)
            result = structured_mu(g, structure)
            tolerance = 1e-2 * max(1.0, reference)
            assert abs(result.lower - reference) <= tolerance
            assert reference <= result.upper + tolerance

    def test_dimension_limit(self):
        structure = BlockStructure((RepeatedScalar(4), FullComplex(3)))
        with pytest.raises(SpecificationError):
            mu_brute_force(np.eye(7), structure)


class TestRobustPerformance:
    """強健性能 μ：不確定性區塊後接完整性能區塊"""

    def test_two_spin_matches_grid_search(self, chain2):
        h = build_hamiltonian(chain2)
        prob = TransferProblem(in_spin=1, out_spin=2, n=2)
        plant = build_plant(h, output_matrix(prob), [coupling_structure(chain2, 1)], 0.3)
        g = absorb_controller(plant, BiasField(np.array([0.4, -0.9])))
        result = robust_performance_mu(g)
        assert len(result.structure) == 2
        assert result.structure.blocks[1] == FullComplex(2)
        reference = mu_brute_force(g.assemble(), result.structure)
        assert abs(result.lower - reference) <= 1e-2 * max(1.0, reference)
        assert result.lower <= result.upper + 1e-9

    def test_uncertainty_dimension_checked(self, chain2):
        h = build_hamiltonian(chain2)
        prob = TransferProblem(in_spin=1, out_spin=2, n=2)
        g = absorb_controller(build_plant(h, output_matrix(prob), [coupling_structure(chain2, 1)], 0.3),
                              BiasField.zeros(2))
        with pytest.raises(SpecificationError):
            robust_performance_mu(g, BlockStructure((RepeatedScalar(3),)))

    def test_result_document(self):
        result = structured_mu(np.diag([2.0, 0.5]), BlockStructure((RepeatedScalar(2),)))
        data = result.to_dict()
        assert set(data) == {"lower", "upper", "witness_norm", "converged", "iterations"}
