import json
import subprocess
import sys

import pytest

from crquery.cli import ExperimentConfig, main, run
from crquery.errors import ValidationError
from crquery.pmf import dsbs

from .conftest import H_01


@pytest.fixture
def files(write_json):
    return {
        "dsbs": write_json("dsbs.json", dsbs(0.1).to_json()),
        "bad": write_json("bad.json", {"alphabet_sizes": [2, 2], "probs": [0.3, 0.2, 0.2, 0.2]}),
        "rho": write_json("rho05.json", {"matrix": [[1.0, 0.5], [0.5, 1.0]]}),
        "notpd": write_json("notpd.json", {"matrix": [[1.0, 2.0], [2.0, 1.0]]}),
        "mu": write_json("mu.json", [0.5, 0.25, 0.125, 0.125]),
        "uniform16": write_json("u16.json", {"weights": {str(i): 1 / 16 for i in range(16)}}),
        "kf": write_json("kf.json", {"probs": [[0.5, 0.0], [0.0, 0.5]]}),
        "tri": write_json("tri.json", {"alphabet_sizes": [2, 2, 2], "probs": [0.5, 0, 0, 0, 0, 0, 0, 0.5]}),
    }


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCommands:
    def test_capacity(self, capsys, files):
        code, out, _ = call(capsys, "capacity", "--pmf", files["dsbs"], "--set", "1,2", "--reproducible")
        assert code == 0
        res = json.loads(out)
        assert res["e_star"] == pytest.approx(1 - H_01, abs=1e-11)
        assert res["lambda_sum"] == 2.0
        assert "timestamp" not in res

    def test_capacity_methods_agree(self, capsys, files):
        vals = []
        for method in ("lp", "alt", "partition"):
            code, out, _ = call(capsys, "capacity", "--pmf", files["tri"], "--method", method, "--reproducible")
            assert code == 0
            vals.append(json.loads(out)["e_star"])
        assert vals == pytest.approx([1.0, 1.0, 1.0])

    def test_capacity_exact(self, capsys, files):
        code, out, _ = call(capsys, "capacity", "--pmf", files["tri"], "--exact", "--reproducible")
        assert code == 0 and json.loads(out)["e_star"] == pytest.approx(1.0)

    def test_gaussian(self, capsys, files):
        code, out, _ = call(capsys, "gaussian", "--cov", files["rho"], "--reproducible")
        assert code == 0
        assert json.loads(out)["c"] == pytest.approx(0.207518749639, abs=1e-12)

    def test_bounds(self, capsys, files):
        code, out, _ = call(capsys, "bounds", "--measure", files["uniform16"], "--delta", "0.25", "--alpha", "0.5",
                            "--reproducible")
        assert json.loads(out) == {"set_size": 16, "mass": 1.0, "bound": 64.0}
        code, out, _ = call(capsys, "bounds", "--measure", files["uniform16"], "--delta", "0.25", "--alpha", "2",
                            "--delta-prime", "0.25", "--reproducible")
        assert json.loads(out)["lower_bound"] == pytest.approx(2.0)

    def test_secrecy_csv(self, capsys, files):
        code, out, _ = call(capsys, "secrecy", "--joint", files["kf"], "--format", "csv", "--reproducible")
        assert out.splitlines() == ["s_in,s_var,sc_lhs,sc_rhs", "1.0,1.0,1.0,2.0"]

    def test_simulate(self, capsys, files, tmp_path):
        trace = tmp_path / "t.csv"
        code, out, _ = call(capsys, "simulate", "--pmf", files["dsbs"], "--protocol", "sw2", "--n", "10",
                            "--trials", "120", "--eta", "0.2", "--quantile", "0.1", "--seed", "7",
                            "--trace", str(trace), "--reproducible")
        assert code == 0
        res = json.loads(out)
        assert set(res) >= {"success_rate", "exponent_quantile", "rate_used", "bins"}
        assert len(trace.read_text().splitlines()) == 121

    def test_simulate_requires_seed(self, capsys, files):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--pmf", files["dsbs"]])
        assert exc.value.code == 2

    def test_verify(self, capsys):
        code, out, _ = call(capsys, "verify", "--suite", "secrecy", "--seed", "1", "--reproducible")
        assert code == 0 and json.loads(out)["pass"] is True


class TestExitCodes:
    def test_validation_no_output_file(self, capsys, files, tmp_path):
        target = tmp_path / "out.json"
        code, _, err = call(capsys, "capacity", "--pmf", files["bad"], "--output", str(target))
        assert code == 2
        assert not target.exists()
        assert "sum to 0.9" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = call(capsys, "capacity", "--pmf", str(tmp_path / "nope.json"))
        assert code == 2

    def test_not_pd(self, capsys, files):
        assert call(capsys, "gaussian", "--cov", files["notpd"])[0] == 2

    def test_resource(self, capsys, files):
        code, _, _ = call(capsys, "simulate", "--pmf", files["dsbs"], "--protocol", "none", "--n", "30",
                          "--trials", "100", "--seed", "1")
        assert code == 3

    def test_contract(self, capsys, write_json):
        path = write_json("unif9.json", {"alphabet_sizes": [3, 3], "probs": [1 / 9] * 9})
        code, _, _ = call(capsys, "simulate", "--pmf", path, "--protocol", "none", "--n", "9",
                          "--trials", "100", "--seed", "0")
        assert code == 4

    def test_unknown_suite(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--suite", "nope"])
        assert exc.value.code == 2

    def test_run_rejects_unknown_command(self):
        with pytest.raises(ValidationError):
            run(ExperimentConfig(command="plot"))


class TestReproducibility:
    def test_timestamp_present_by_default(self, capsys, files):
        _, out, _ = call(capsys, "gaussian", "--cov", files["rho"])
        assert "timestamp" in json.loads(out)

    def test_threads_env_does_not_change_output(self, capsys, files, tmp_path, monkeypatch):
        outs = []
        for threads in ("1", "3"):
            monkeypatch.setenv("CRQUERY_THREADS", threads)
            target = tmp_path / f"sim{threads}.json"
            code = main(["simulate", "--pmf", files["dsbs"], "--n", "8", "--trials", "100", "--seed", "3",
                         "--reproducible", "--output", str(target)])
            assert code == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]

    def test_twelve_significant_digits(self, capsys, files):
        _, out, _ = call(capsys, "capacity", "--pmf", files["dsbs"], "--reproducible")
        assert '"e_star": 0.531004406411' in out

    def test_module_entry_point(self, files):
        proc = subprocess.run([sys.executable, "-m", "crquery", "gaussian", "--cov", files["rho"], "--reproducible"],
                              capture_output=True, text=True, check=True)
        assert json.loads(proc.stdout)["c"] == pytest.approx(0.207518749639)
