import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from dyntomo import io
from dyntomo.channel import dephasing
from dyntomo.cli import demo_dephasing, main
from dyntomo.operators import Observable
from dyntomo.tomography import MeasurementRecord, TimeGrid, simulate_measurements, dephasing_observables

from conftest import LN2, RHO0

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestComplexJson:
    def test_round_trip(self):
        m = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])
        assert io.matrix_to_json(m)[0][1] == [0.1, -0.2]
        np.testing.assert_array_equal(io.matrix_from_json(io.matrix_to_json(m)), m)

    def test_bare_reals(self):
        np.testing.assert_array_equal(io.matrix_from_json([[1, 0], [0, 1]]), np.eye(2))

    @pytest.mark.parametrize("bad", [[], [[1, 2], [3]], [[[1, 2, 3]]], "x"])
    def test_malformed(self, bad):
        with pytest.raises(io.ScenarioError):
            io.matrix_from_json(bad)

    def test_signal_round_trip(self):
        sig = dephasing(2.0).decomposition.signals[1]
        spec = io.signal_to_json(sig)
        assert spec == {"terms": [{"coeff": [1.0, 0.0], "rate": [-2.0, 0.0]}]}
        assert io.signal_from_json(spec) == sig


class TestRecordCsv:
    def test_round_trip(self, tmp_path):
        q1, q2 = dephasing_observables()
        rec = simulate_measurements(dephasing(1.0), RHO0, [q1, q2], TimeGrid((0.0, LN2, 2.0)), 1e-3, 5)
        path = tmp_path / "rec.csv"
        io.write_record_csv(rec, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,Q1,Q2"
        assert len(lines) == 4
        back = io.read_record_csv(path, [q2, q1])
        assert back.labels == ["Q1", "Q2"]
        np.testing.assert_array_equal(back.values, rec.values)
        assert back.grid == rec.grid

    def test_unknown_column(self, tmp_path):
        path = tmp_path / "rec.csv"
        path.write_text("t,W\n0,1\n")
        with pytest.raises(io.ScenarioError):
            io.read_record_csv(path, list(dephasing_observables()))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "rec.csv"
        path.write_text("time,Q1\n0,1\n")
        with pytest.raises(io.ScenarioError):
            io.read_record_csv(path, list(dephasing_observables()))


class TestScenario:
    def test_load(self):
        scn = io.load_scenario(SCENARIOS / "dephasing.json")
        assert scn.channel.is_decomposed and scn.channel.dim == 2
        assert scn.grid_times == (0.0, math.log(2))
        assert [q.label for q in scn.observables] == ["Q1", "Q2"]

    def test_two_channels_rejected(self, tmp_path):
        raw = json.loads((SCENARIOS / "dephasing.json").read_text())
        raw["pure_decoherence"] = {}
        path = tmp_path / "s.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(io.ScenarioError):
            io.load_scenario(path)


class TestValidate:
    def test_ok(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "--scenario", str(SCENARIOS / "dephasing.json"))
        assert code == 0 and json.loads(out)["ok"]

    def test_bad_initial(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "--scenario", str(SCENARIOS / "bad_initial.json"))
        rep = json.loads(out)
        assert code == 1 and rep["init_ok"] is False

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _, err = run_cli(capsys, "validate", "--scenario", str(path))
        assert code == 2 and "invalid JSON" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "validate", "--scenario", str(tmp_path / "nope.json"))
        assert code == 2


class TestDecompose:
    def test_dephasing(self, capsys):
        code, out, _ = run_cli(capsys, "decompose", "--scenario", str(SCENARIOS / "dephasing.json"))
        rep = json.loads(out)
        assert code == 0 and rep["mu"] == 2 and rep["max_residual"] <= 1e-9

    def test_identity(self, capsys):
        code, out, _ = run_cli(capsys, "decompose", "--scenario", str(SCENARIOS / "identity.json"))
        assert code == 0 and json.loads(out)["mu"] == 1

    def test_undersampled(self, capsys):
        code, out, err = run_cli(capsys, "decompose", "--scenario", str(SCENARIOS / "undersampled.json"))
        assert code == 1
        assert json.loads(out)["offending_time"] == 0.5
        assert "t=0.5" in err

    def test_decoherence(self, capsys):
        code, out, _ = run_cli(capsys, "decompose", "--scenario", str(SCENARIOS / "decoherence_qubit.json"))
        assert code == 0 and json.loads(out)["mu"] == 3


class TestRun:
    def test_reference_scenario(self, capsys, tmp_path):
        rec, rep = tmp_path / "rec.csv", tmp_path / "rep.json"
        code, _, _ = run_cli(
            capsys, "run", "--scenario", str(SCENARIOS / "dephasing.json"),
            "--record-out", str(rec), "--report-out", str(rep),
        )
        report = json.loads(rep.read_text())
        assert code == 0
        assert report["frobenius_error"] <= 1e-10
        assert report["completeness"]["span_dimension"] == 4
        assert rec.read_text().splitlines()[0] == "t,Q1,Q2"

    def test_matches_demo(self, capsys):
        code, out, _ = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "dephasing.json"))
        state = io.matrix_from_json(json.loads(out)["state"])
        demo = demo_dephasing(1.0, LN2)
        assert np.linalg.norm(state - demo["closed_form_state"]) <= 1e-10

    @pytest.mark.parametrize("name", ["dephasing_noisy.json", "dephasing_auto.json", "decoherence_qubit.json"])
    def test_byte_identical(self, capsys, tmp_path, name):
        outputs = []
        for k in range(2):
            rec, rep = tmp_path / f"rec{k}.csv", tmp_path / f"rep{k}.json"
            code, _, _ = run_cli(
                capsys, "run", "--scenario", str(SCENARIOS / name), "--record-out", str(rec), "--report-out", str(rep)
            )
            assert code == 0
            outputs.append((rec.read_bytes(), rep.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_noisy_is_reasonable(self, capsys):
        code, out, _ = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "dephasing_noisy.json"))
        rep = json.loads(out)
        assert code == 0 and len(rep["grid"]) == 6 and rep["frobenius_error"] < 1e-2

    def test_single_observable_incomplete(self, capsys):
        code, out, err = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "single_observable.json"))
        rep = json.loads(out)
        assert code == 1 and rep["deficit"] == 2 and "deficit 2" in err

    def test_invalid_channel(self, capsys):
        code, _, err = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "bad_initial.json"))
        assert code == 1 and err.startswith("error: validate")

    def test_needs_true_state(self, capsys):
        code, _, _ = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "identity.json"))
        assert code == 2

    def test_decoherence_auto_grid(self, capsys):
        code, out, _ = run_cli(capsys, "run", "--scenario", str(SCENARIOS / "decoherence_qubit.json"))
        rep = json.loads(out)
        assert code == 0 and rep["frobenius_error"] <= 1e-8

    def test_from_record_file(self, capsys, tmp_path):
        q1, q2 = dephasing_observables()
        rec = simulate_measurements(dephasing(1.0), RHO0, [q1, q2], TimeGrid((0.0, 1.5)))
        io.write_record_csv(rec, tmp_path / "data.csv")
        raw = json.loads((SCENARIOS / "dephasing.json").read_text())
        del raw["true_state"]
        raw["record"] = "data.csv"
        (tmp_path / "s.json").write_text(json.dumps(raw))
        code, out, _ = run_cli(capsys, "run", "--scenario", str(tmp_path / "s.json"))
        state = io.matrix_from_json(json.loads(out)["state"])
        assert code == 0 and np.linalg.norm(state - RHO0) <= 1e-10


class TestDemo:
    def test_values(self, capsys):
        code, out, _ = run_cli(capsys, "demo-dephasing", "--gamma", "1", "--t", repr(LN2), "--json")
        d = json.loads(out)
        assert code == 0
        assert d["projections"]["Tr(sigma3 rho)"] == pytest.approx(0.2, abs=1e-12)
        assert d["projections"]["Tr(sigma2 rho)"] == pytest.approx(0.4, abs=1e-12)
        np.testing.assert_allclose(io.matrix_from_json(d["closed_form_state"]), RHO0, atol=1e-12)

    def test_text(self, capsys):
        code, out, _ = run_cli(capsys, "demo-dephasing")
        assert code == 0 and "Tr(sigma2 rho) = 0.4" in out

    def test_late_time_warns(self, capsys):
        code, _, err = run_cli(capsys, "demo-dephasing", "--t", "50", "--json")
        assert code == 0 and "warning" in err

    def test_zero_time(self, capsys):
        code, _, err = run_cli(capsys, "demo-dephasing", "--t", "0")
        assert code == 1 and "t > 0" in err
