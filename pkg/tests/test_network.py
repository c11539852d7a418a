"""
自旋網路建構測試
"""

import json

import numpy as np
import pytest

from src.main.python.core.errors import ConfigError, SpecificationError, StructureNotPresentError
from src.main.python.core.network import (
    all_coupling_structures,
    all_leakage_structures,
    build_hamiltonian,
    coupling_structure,
    leakage_structure,
    load_network_spec,
    perturbation_scale,
    total_hamiltonian,
)
from src.main.python.models.network_models import BiasField, PerturbationKind, SpinNetworkSpec, TransferProblem


class TestBuildHamiltonian:
    """名義 Hamiltonian"""

    def test_chain_three_spins(self):
        h = build_hamiltonian(SpinNetworkSpec(n=3))
        expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        assert np.array_equal(h.matrix, expected)

    def test_ring_closes_corners(self, ring11_h):
        assert ring11_h.matrix[0, 10] == 1
        assert ring11_h.matrix[10, 0] == 1
        assert np.count_nonzero(ring11_h.matrix) == 22

    def test_ring_spectrum(self, ring11_h):
        eigenvalues = np.sort(np.linalg.eigvalsh(ring11_h.matrix))
        expected = np.sort(2 * np.cos(2 * np.pi * np.arange(11) / 11))
        assert np.allclose(eigenvalues, expected, atol=1e-12)

    def test_xxx_adds_identity(self):
        h = build_hamiltonian(SpinNetworkSpec(n=4, topology="chain", coupling_model="xxx"))
        assert np.array_equal(np.diag(h.matrix), np.ones(4))

    @pytest.mark.parametrize("n, topology", [(1, "chain"), (2, "ring")])
    def test_invalid_sizes(self, n, topology):
        with pytest.raises(SpecificationError):
            SpinNetworkSpec(n=n, topology=topology)

    def test_unknown_topology(self):
        with pytest.raises(SpecificationError):
            SpinNetworkSpec(n=4, topology="star")


class TestStructures:
    """耦合與漏失擾動方向"""

    def test_coupling_56_on_ring(self, ring11):
        s = coupling_structure(ring11, 5)
        assert s.label == "coupling(5,6)"
        assert s.s[4, 5] == 1 and s.s[5, 4] == 1
        assert np.count_nonzero(s.s) == 2
        assert s.kind is PerturbationKind.COUPLING

    def test_ring_closure_pair(self, ring11):
        s = coupling_structure(ring11, 11)
        assert s.s[0, 10] == 1 and s.s[10, 0] == 1

    def test_chain_has_no_closure(self):
        with pytest.raises(StructureNotPresentError):
            coupling_structure(SpinNetworkSpec(n=5), 5)

    def test_index_out_of_range(self, ring11):
        with pytest.raises(SpecificationError):
            coupling_structure(ring11, 0)
        with pytest.raises(SpecificationError):
            leakage_structure(ring11, 12)

    def test_leakage_wraps_on_ring(self, ring11):
        s = leakage_structure(ring11, 1)
        diagonal = np.diag(s.s)
        assert diagonal[0] == -1
        assert diagonal[1] == 0.5 and diagonal[10] == 0.5
        assert np.isclose(diagonal.sum(), 0.0)

    def test_leakage_truncates_at_chain_end(self):
        s = leakage_structure(SpinNetworkSpec(n=4), 1)
        assert np.array_equal(np.diag(s.s), [-1.0, 0.5, 0.0, 0.0])

    def test_ring_leakage_entries_sum_to_zero(self, ring11):
        for structure in all_leakage_structures(ring11):
            assert np.sum(structure.s) == pytest.approx(0.0, abs=1e-15)

    def test_chain_end_leakage_loses_half(self):
        chain = SpinNetworkSpec(n=5)
        assert np.sum(leakage_structure(chain, 1).s) == pytest.approx(-0.5)
        assert np.sum(leakage_structure(chain, 5).s) == pytest.approx(-0.5)
        assert np.sum(leakage_structure(chain, 3).s) == pytest.approx(0.0)

    def test_family_sizes(self, ring11):
        assert len(all_coupling_structures(ring11)) == 11
        assert len(all_coupling_structures(SpinNetworkSpec(n=11))) == 10
        assert len(all_leakage_structures(ring11)) == 11

    def test_leakage_scale_uses_bias(self, ring11):
        d = BiasField(np.arange(11, dtype=float))
        assert perturbation_scale(leakage_structure(ring11, 4), d) == 3.0
        assert perturbation_scale(coupling_structure(ring11, 4), d) == 1.0


class TestTotalHamiltonian:
    """H + D + Σ δ·scale·S"""

    def test_sum_is_hermitian(self, ring11, ring11_h, rng):
        d = BiasField(rng.uniform(-5, 5, 11))
        s = leakage_structure(ring11, 3)
        total = total_hamiltonian(ring11_h, d, [(s, 0.1, d.d[2]), (coupling_structure(ring11, 5), -0.2, 1.0)])
        assert np.allclose(total.matrix, total.matrix.conj().T)
        assert np.isclose(total.matrix[2, 2].real, d.d[2] - 0.1 * d.d[2])

    @pytest.mark.parametrize("topology", ["chain", "ring"])
    def test_coupling_direction_shifts_one_pair(self, topology):
        """H + δ·S_k 等於把耦合 k 改成 1 + δ 的 Hamiltonian"""
        spec = SpinNetworkSpec(n=5, topology=topology)
        h = build_hamiltonian(spec)
        delta = 0.37
        for structure in all_coupling_structures(spec):
            k = structure.spin
            i, j = (k - 1, k) if k < spec.n else (0, spec.n - 1)
            expected = h.matrix.copy()
            expected[i, j] = expected[j, i] = 1.0 + delta
            total = total_hamiltonian(h, BiasField.zeros(spec.n), [(structure, delta, 1.0)])
            assert np.allclose(total.matrix, expected, atol=1e-15)

    def test_linear_in_bias_and_magnitude(self, ring11, ring11_h, rng):
        """三點共線：a·X1 + (1 − a)·X2 的總 Hamiltonian 等於兩端矩陣的同一組合"""
        s = coupling_structure(ring11, 5)
        d1, d2 = rng.uniform(-5, 5, 11), rng.uniform(-5, 5, 11)
        first = total_hamiltonian(ring11_h, BiasField(d1), [(s, 0.2, 1.0)]).matrix
        second = total_hamiltonian(ring11_h, BiasField(d2), [(s, -0.6, 1.0)]).matrix
        for a in (-0.5, 0.3, 1.7):
            mixed = total_hamiltonian(ring11_h, BiasField(a * d1 + (1 - a) * d2),
                                      [(s, a * 0.2 + (1 - a) * -0.6, 1.0)]).matrix
            assert np.allclose(mixed, a * first + (1 - a) * second, atol=1e-12)

    def test_dimension_mismatch(self, ring11_h):
        with pytest.raises(SpecificationError):
            total_hamiltonian(ring11_h, BiasField(np.zeros(3)))


class TestNetworkSpecFile:
    """網路規格 JSON"""

    def test_load(self, tmp_path):
        path = tmp_path / "network.json"
        path.write_text(json.dumps({"n": 11, "topology": "ring", "coupling": "xx"}))
        spec = load_network_spec(path)
        assert spec == SpinNetworkSpec(n=11, topology="ring")
        assert spec.to_dict() == {"n": 11, "topology": "ring", "coupling": "xx"}

    def test_invalid_document(self, tmp_path):
        path = tmp_path / "network.json"
        path.write_text(json.dumps({"n": 1, "topology": "ring"}))
        with pytest.raises(ConfigError):
            load_network_spec(path)

    def test_transfer_problem_bounds(self):
        with pytest.raises(SpecificationError):
            TransferProblem(in_spin=1, out_spin=12, n=11)
