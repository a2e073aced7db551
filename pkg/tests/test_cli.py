import json

import pytest

from convtune.cli import main

FAST_TOML = """
seed = 5

[plant]
f_sw = 2.5e3

[controller.fuzzy]
g_de = 10.0

[loop]
control_period = 400e-6
dt = 40e-6
initial_duty = 0.3

[optimizer]
algo = "ica"

[optimizer.ica]
n_colonies = 6
n_imperialists = 2
max_iter = 3

[optimizer.pso]
pop_size = 6
max_iter = 3

[optimizer.aco]
archive_size = 3
n_ants = 6
max_iter = 3

[scenario]
names = ["fast_load5"]

[[scenario.custom]]
name = "fast_load5"
v_in = 28.0
duration = 16e-3
window = 2e-3
snapshots = [6e-3, 16e-3]
events = [{t = 8e-3, kind = "load_scale", output = 1, factor = 0.5}]
"""


@pytest.fixture()
def fast_config(tmp_path):
    path = tmp_path / "fast.toml"
    path.write_text(FAST_TOML)
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestSimulate:
    def test_emits_trace_and_plot(self, fast_config, tmp_path, capsys):
        out = tmp_path / "o"
        rc = main(["simulate", "--config", fast_config, "--out", str(out)])
        assert rc == 0
        assert (out / "trace.csv").exists() and (out / "outputs.svg").exists()
        lines = (out / "trace.csv").read_text().splitlines()
        assert len(lines) - 1 == round(16e-3 / 400e-6) + 1
        svg = (out / "outputs.svg").read_text()
        assert svg.count("<polyline") == 3
        assert svg.count("<line") >= 2  # axes drawn as line elements, not polylines

    def test_config_file_not_mutated(self, fast_config, tmp_path):
        before = read(fast_config)
        main(["simulate", "--config", fast_config, "--out", str(tmp_path / "x")])
        assert read(fast_config) == before

    def test_json_echoes_resolved_config(self, fast_config, tmp_path):
        out = tmp_path / "o"
        main(["simulate", "--config", fast_config, "--out", str(out)])
        doc = json.loads((out / "simulate.json").read_text())
        assert doc["config"]["plant"]["f_sw"] == 2.5e3
        assert doc["config"]["plant"]["l1"] == pytest.approx(100e-6)  # default echoed
        assert doc["config"]["optimizer"]["pso"]["c1"] == 2.0


class TestTune:
    def test_outputs_and_determinism(self, fast_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["tune", "--config", fast_config, "--out", str(out1)]) == 0
        assert main(["tune", "--config", fast_config, "--out", str(out2)]) == 0
        for name in ("weights.json", "convergence.csv", "convergence.svg"):
            assert read(out1 / name) == read(out2 / name)
        doc = json.loads((out1 / "weights.json").read_text())
        assert sum(doc["weights"]) == pytest.approx(1.0, abs=1e-9)
        hist = [float(r.split(",")[1]) for r in
                (out1 / "convergence.csv").read_text().splitlines()[1:]]
        assert all(b <= a for a, b in zip(hist, hist[1:]))

    def test_seed_changes_output(self, fast_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["tune", "--config", fast_config, "--out", str(out1)])
        main(["tune", "--config", fast_config, "--out", str(out2), "--seed", "9"])
        assert read(out1 / "weights.json") != read(out2 / "weights.json")

    def test_algo_flag_override(self, fast_config, tmp_path, capsys):
        rc = main(["tune", "--config", fast_config, "--out",
                   str(tmp_path / "o"), "--algo", "pso"])
        assert rc == 0
        assert "tune[pso]" in capsys.readouterr().out


class TestScenarioCmd:
    def test_report_row_count(self, fast_config, tmp_path):
        out = tmp_path / "o"
        assert main(["scenario", "--config", fast_config, "--out", str(out)]) == 0
        lines = (out / "regulation.csv").read_text().splitlines()
        # 2 methods (ica + constant) x 2 snapshots x 3 rails
        assert len(lines) - 1 == 12
        doc = json.loads((out / "report.json").read_text())
        assert {"regulation", "convergence", "flags", "weights", "config"} <= set(doc)

    def test_tuned_not_worse_than_constant(self, fast_config, tmp_path):
        out = tmp_path / "o"
        main(["scenario", "--config", fast_config, "--out", str(out)])
        totals = {}
        for line in (out / "convergence.csv").read_text().splitlines()[1:]:
            method, _, _, total = line.split(",")
            totals[method] = float(total)
        assert totals["ica"] <= totals["constant"] + 1e-9


class TestBench:
    def test_all_algorithms_near_origin_on_sphere(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["bench", "--out", str(out), "--seed", "0"]) == 0
        doc = json.loads((out / "bench.json").read_text())
        sphere_rows = [r for r in doc["results"] if r["function"] == "sphere"]
        assert len(sphere_rows) == 3
        for row in sphere_rows:
            assert row["position_error"] < 0.05
        csv_lines = (out / "bench.csv").read_text().splitlines()
        assert csv_lines[0] == ("function,algo,best_fitness,position_error,"
                                "convergence_iter,evaluations")


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("nonsense_key = 1\n")
        assert main(["simulate", "--config", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_is_2(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_divergence_is_3(self, tmp_path, capsys):
        cfg = tmp_path / "div.toml"
        cfg.write_text("[plant]\nl1 = 1e-15\n[scenario]\nnames = ['nominal']\n")
        assert main(["simulate", "--config", str(cfg), "--out",
                     str(tmp_path / "o")]) == 3
        assert "diverged" in capsys.readouterr().err

    def test_unwritable_out_dir_is_4(self, fast_config):
        assert main(["simulate", "--config", fast_config,
                     "--out", "/proc/definitely/not/writable"]) == 4

    def test_bad_format_flag_is_2(self, fast_config, tmp_path):
        assert main(["simulate", "--config", fast_config, "--out",
                     str(tmp_path / "o"), "--format", "pdf"]) == 2

    def test_negative_seed_is_2(self, fast_config, tmp_path, capsys):
        assert main(["tune", "--config", fast_config, "--out",
                     str(tmp_path / "o"), "--seed", "-3"]) == 2
        assert "seed" in capsys.readouterr().err


class TestEnvOutDir:
    def test_env_var_used_when_no_flag(self, fast_config, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("CONVTUNE_OUT", str(target))
        assert main(["simulate", "--config", fast_config]) == 0
        assert (target / "trace.csv").exists()
