"""
研究流程與命令列介面測試
"""

import json

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.main.python.api.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from src.main.python.api.studies import (
    ExperimentConfig,
    StudyOptions,
    detect_crossover,
    kendall_tau,
    parse_config,
    run_average_vs_instant_study,
    run_mu_study,
    run_sensitivity_study,
    sensitivity_crossover,
)
from src.main.python.core.errors import ConfigError, FrequencySingularError, SpecificationError
from src.main.python.models.control_models import Controller, ControllerEnsemble
from src.main.python.models.network_models import BiasField, PerturbationKind, SpinNetworkSpec, TransferProblem
from src.main.python.services.synthesis import SynthesisOptions, synthesize


TOY_CONFIG = {
    "network": {"n": 4, "topology": "chain"},
    "transfer": {"in": 1, "out": 4},
    "synthesis": {"count": 6, "seed": 7},
    "structures": [{"kind": "coupling", "k": 2}, {"kind": "leakage", "k": 2}],
    "s0": 0.0,
}


@pytest.fixture
def toy_config():
    return ExperimentConfig(**TOY_CONFIG)


@pytest.fixture
def toy_ensemble(toy_config):
    return synthesize(toy_config.to_spec(), toy_config.to_problem(), 6, 7, SynthesisOptions(workers=1))


@pytest.fixture
def study_options():
    return StudyOptions(workers=1, window_steps=501)


def _manual_ensemble(p_tf, p_avg, avg_rank):
    spec = SpinNetworkSpec(n=2)
    controllers = [
        Controller(d=BiasField(np.array([0.1 * m, -0.1 * m])), t_f=1.0 + m, p_tf=p, m=m, p_avg=a)
        for m, (p, a) in enumerate(zip(p_tf, p_avg), start=1)
    ]
    return ControllerEnsemble(problem=TransferProblem(1, 2, 2), spec=spec, controllers=controllers,
                              avg_rank=avg_rank)


class TestKendallTau:
    """Kendall τ-b"""

    def test_concordant(self):
        assert kendall_tau([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_discordant(self):
        assert kendall_tau([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_one_swap(self):
        assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3)

    @pytest.mark.parametrize("x, y", [
        ([1, 2, 3], [1, 2]),
        ([1], [1]),
        ([1, 1, 1], [1, 2, 3]),
        ([1, 2, float("nan")], [1, 2, 3]),
    ])
    def test_invalid_inputs(self, x, y):
        with pytest.raises(SpecificationError):
            kendall_tau(x, y)


class TestCrossover:
    """交叉區間偵測"""

    def test_detects_window(self):
        p_avg = [1, 1, 1, 1, 0.95, 0.8, 0.7, 0.55, 0.5, 0.4]
        mu = [1, 1, 1, 1, 1, 1, 1, 2, 2, 2]
        assert detect_crossover(p_avg, mu) == (6, 8)

    def test_minimum_width_at_end(self):
        p_avg = [1] * 9 + [0.5]
        mu = [1] * 9 + [3]
        assert detect_crossover(p_avg, mu) == (8, 10)

    def test_flat_mu(self):
        assert detect_crossover([1, 0.5, 0.2, 0.1], [1, 1, 1, 1]) is None

    def test_sensitivity_must_rise_with_mu(self):
        """p_avg 與 μ 均勻變化時，由靈敏度的上升決定區間"""
        p_avg = np.linspace(1.0, 0.1, 10)
        mu = np.arange(10.0)
        sens = [0, 0, 0, 0, 0, 0, 0, 1, 2, 3]
        assert detect_crossover(p_avg, mu, sens) == (7, 9)
        assert detect_crossover(p_avg, mu, [0] * 10) is None

    def test_ignores_drop_without_mu_rise(self):
        p_avg = [0.48, 0.3, 0.2, 0.2, 0.2, 0.2, 0.1, 0.05]
        mu = [1, 1, 1, 1, 1, 1.5, 2, 3]
        lo, hi = detect_crossover(p_avg, mu)
        assert lo >= 4

    def test_length_mismatch(self):
        with pytest.raises(SpecificationError):
            detect_crossover([1, 0.5, 0.2], [1, 2, 3], [0.1, 0.2])

    def test_sensitivity_crossover(self):
        result = sensitivity_crossover([0.99, 0.98, 0.95, 0.85, 0.6], [0.1, -0.1, 0.15, -0.5, 1.0])
        assert result["p_drop_rank"] == 4
        assert result["sensitivity_rise_rank"] == 4
        assert result["gap"] == 0


class TestExperimentConfig:
    """設定檔"""

    def test_aliases_and_structures(self, toy_config):
        assert toy_config.to_problem() == TransferProblem(in_spin=1, out_spin=4, n=4)
        labels = [s.label for s in toy_config.structure_list()]
        assert labels == ["coupling(2,3)", "leakage(2)"]
        assert toy_config.s0_value() == 0j
        assert toy_config.s0_value(1e-6) == pytest.approx(1e-6)

    def test_invalid_topology(self):
        data = dict(TOY_CONFIG, network={"n": 4, "topology": "star"})
        with pytest.raises(ValidationError):
            ExperimentConfig(**data)
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_sensitivity_structures_override(self, toy_config):
        assert [s.label for s in toy_config.sensitivity_structure_list()] == ["coupling(2,3)", "leakage(2)"]
        cfg = ExperimentConfig(**dict(TOY_CONFIG, sensitivity_structures=[
            {"kind": "coupling", "k": 1}, {"kind": "leakage", "k": 1}, {"kind": "leakage", "k": 4}
        ]))
        assert [s.label for s in cfg.structure_list()] == ["coupling(2,3)", "leakage(2)"]
        assert [s.label for s in cfg.sensitivity_structure_list(PerturbationKind.LEAKAGE)] == \
            ["leakage(1)", "leakage(4)"]

    def test_window_order(self):
        cfg = ExperimentConfig(**dict(TOY_CONFIG, crossover_window=[5, 2]))
        with pytest.raises(SpecificationError):
            cfg.window()


class TestStudies:
    """三種研究的輸出"""

    def test_sensitivity_study(self, toy_config, toy_ensemble, study_options, tmp_path):
        result = run_sensitivity_study(toy_config, toy_ensemble, tmp_path, study_options)
        coupling = pd.read_csv(tmp_path / "sensitivity_coupling.csv")
        leakage = pd.read_csv(tmp_path / "sensitivity_leakage.csv")
        assert len(coupling) == 6 and len(leakage) == 6
        assert list(coupling["rank"]) == list(range(1, 7))
        assert list(coupling.columns) == ["m", "rank", "p_tf", "p_avg", "structure", "sensitivity",
                                          "log_sensitivity"]
        assert np.all(np.diff(coupling["p_tf"]) <= 0)
        assert (tmp_path / "sensitivity_coupling.svg").exists()
        assert set(result.summary["families"]) == {"coupling", "leakage"}

    def test_sensitivity_needs_structures(self, toy_ensemble, study_options, tmp_path):
        cfg = ExperimentConfig(**dict(TOY_CONFIG, structures=[]))
        with pytest.raises(SpecificationError):
            run_sensitivity_study(cfg, toy_ensemble, tmp_path, study_options)

    def test_sensitivity_study_uses_its_own_structures(self, toy_ensemble, study_options, tmp_path):
        cfg = ExperimentConfig(**dict(TOY_CONFIG, structures=[{"kind": "coupling", "k": 2}],
                                      sensitivity_structures=[{"kind": "leakage", "k": 1}]))
        result = run_sensitivity_study(cfg, toy_ensemble, tmp_path, study_options)
        assert set(result.summary["families"]) == {"leakage"}
        assert result.summary["families"]["leakage"]["structures"] == ["leakage(1)"]

    def test_average_study(self, toy_config, toy_ensemble, study_options, tmp_path):
        result = run_average_vs_instant_study(toy_config, toy_ensemble, tmp_path, study_options)
        frame = pd.read_csv(tmp_path / "average_vs_instant.csv")
        assert len(frame) == 6
        assert sorted(frame["rank_avg"]) == list(range(1, 7))
        assert frame["p_win"].between(0, 1).all()
        summary = json.loads((tmp_path / "average_summary.json").read_text())
        assert summary["tau"] == result.summary["tau"]

    def test_average_study_extreme_taus(self, study_options, tmp_path):
        p = [0.9, 0.8, 0.7, 0.6]
        cfg = ExperimentConfig(network={"n": 2}, transfer={"in": 1, "out": 2})
        agreeing = run_average_vs_instant_study(cfg, _manual_ensemble(p, p, [1, 2, 3, 4]),
                                                tmp_path / "same", study_options)
        assert agreeing.summary["tau"]["p_tf_vs_p_avg"] == pytest.approx(1.0)
        reversed_avg = list(reversed(p))
        opposing = run_average_vs_instant_study(cfg, _manual_ensemble(p, reversed_avg, [4, 3, 2, 1]),
                                                tmp_path / "reversed", study_options)
        assert opposing.summary["tau"]["p_tf_vs_p_avg"] == pytest.approx(-1.0)

    def test_mu_study(self, toy_config, toy_ensemble, study_options, tmp_path):
        result = run_mu_study(toy_config, toy_ensemble, tmp_path, study_options)
        frame = pd.read_csv(tmp_path / "mu_study.csv")
        assert len(frame) == 6
        assert list(frame["rank_avg"]) == list(range(1, 7))
        assert (frame["mu_lower"] <= frame["mu_upper"] + 1e-9).all()
        assert (frame["mu_lower"] >= 0).all()
        assert set(result.summary["tau"]) == {"mu_vs_sens", "mu_vs_p", "mu_vs_p_incremental"}
        assert result.summary["window_source"] in ("detected", "full")

    def test_mu_study_counts_stationary_controllers(self, study_options, tmp_path):
        """p_tf ≈ 1 的控制器一階靈敏度以 0 計入 τ"""
        cfg = ExperimentConfig(network={"n": 2}, transfer={"in": 1, "out": 2},
                               structures=[{"kind": "coupling", "k": 1}])
        ensemble = _manual_ensemble([1.0, 1.0 - 1e-12, 0.9, 0.8], [0.5, 0.45, 0.4, 0.3], [1, 2, 3, 4])
        result = run_mu_study(cfg, ensemble, tmp_path, study_options)
        assert result.summary["stationary"] == 2

    def test_mu_study_is_reproducible(self, toy_config, toy_ensemble, study_options, tmp_path):
        run_mu_study(toy_config, toy_ensemble, tmp_path / "a", study_options)
        run_mu_study(toy_config, toy_ensemble, tmp_path / "b", StudyOptions(workers=3))
        first = (tmp_path / "a" / "mu_study.csv").read_bytes()
        second = (tmp_path / "b" / "mu_study.csv").read_bytes()
        assert first == second

    def test_mu_study_singular_frequency(self, study_options, tmp_path):
        data = dict(TOY_CONFIG, network={"n": 3}, transfer={"in": 1, "out": 3},
                    structures=[{"kind": "coupling", "k": 1}])
        cfg = ExperimentConfig(**data)
        ensemble = synthesize(cfg.to_spec(), cfg.to_problem(), 2, 0, SynthesisOptions(workers=1))
        with pytest.raises(FrequencySingularError):
            run_mu_study(cfg, ensemble, tmp_path, study_options)
        result = run_mu_study(cfg, ensemble, tmp_path, study_options, s0_offset=1e-6)
        assert result.summary["s0"] == [1e-6, 0.0]


class TestCommandLine:
    """spinmu 命令列"""

    def _write_config(self, tmp_path, data):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_synth_and_study(self, tmp_path, capsys):
        config = self._write_config(tmp_path, dict(TOY_CONFIG, synthesis={"count": 3, "seed": 1}))
        ensemble = str(tmp_path / "ensemble.json")
        assert main(["--threads", "1", "synth", "--config", config, "--out", ensemble]) == EXIT_OK
        assert main(["--threads", "1", "study", "average", "--config", config,
                     "--ensemble", ensemble, "--out", str(tmp_path / "out")]) == EXIT_OK
        assert (tmp_path / "out" / "average_vs_instant.csv").exists()
        assert main(["--threads", "1", "export-g", "--config", config, "--ensemble", ensemble,
                     "--out", str(tmp_path / "g.json")]) == EXIT_OK
        capsys.readouterr()
        structure = tmp_path / "structure.json"
        structure.write_text(json.dumps({"blocks": [{"kind": "repeated_scalar", "dim": 4},
                                                    {"kind": "repeated_scalar", "dim": 4},
                                                    {"kind": "full_complex", "rows": 4}]}))
        assert main(["mu", "--g", str(tmp_path / "g.json"), "--structure", str(structure)]) == EXIT_OK
        output = json.loads(capsys.readouterr().out)
        assert output["lower"] <= output["upper"] + 1e-9

    def test_mu_command(self, tmp_path, capsys):
        g = tmp_path / "g.json"
        g.write_text(json.dumps([[2.0, 0.0], [0.0, 0.5]]))
        structure = tmp_path / "structure.json"
        structure.write_text(json.dumps({"blocks": [{"kind": "repeated_scalar", "dim": 2}]}))
        assert main(["mu", "--g", str(g), "--structure", str(structure), "--brute-force"]) == EXIT_OK
        output = json.loads(capsys.readouterr().out)
        assert output["lower"] == pytest.approx(2.0, abs=1e-6)
        assert output["brute_force"] == pytest.approx(2.0, abs=1e-6)

    def test_tau_command(self, tmp_path, capsys):
        csv = tmp_path / "values.csv"
        csv.write_text("a,b\n1,1\n2,3\n3,2\n4,4\n")
        assert main(["tau", "--csv", str(csv), "--x", "a", "--y", "b"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["tau"] == pytest.approx(2 / 3)

    def test_missing_config(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG

    def test_invalid_config(self, tmp_path):
        config = self._write_config(tmp_path, dict(TOY_CONFIG, transfer={"in": 0, "out": 4}))
        assert main(["synth", "--config", config]) == EXIT_CONFIG

    def test_singular_frequency_exit_code(self, tmp_path):
        data = dict(TOY_CONFIG, network={"n": 3}, transfer={"in": 1, "out": 3},
                    synthesis={"count": 2, "seed": 0}, structures=[{"kind": "coupling", "k": 1}])
        config = self._write_config(tmp_path, data)
        code = main(["--threads", "1", "study", "mu", "--config", config, "--out", str(tmp_path / "out")])
        assert code == EXIT_NUMERICAL
