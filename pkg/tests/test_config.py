import pytest

from convtune.config import ConfigError, RunConfig, load_config, parse_config
from convtune.power_stage import InputStep, LoadScale


class TestDefaults:
    def test_empty_config_equals_defaults(self):
        assert load_config("") == RunConfig()

    def test_default_scenarios_resolve(self):
        names = [sc.name for sc in RunConfig().scenarios()]
        assert names == ["load5_half", "load15_up20", "vin_30to35"]

    def test_echo_contains_every_default(self):
        echo = RunConfig().to_dict()
        assert echo["plant"]["l1"] == pytest.approx(100e-6)
        assert echo["controller"]["fuzzy"]["g_e"] == 5.0
        assert echo["controller"]["pid"]["kp"] == 0.05
        assert echo["loop"]["control_period"] == pytest.approx(20e-6)
        assert echo["optimizer"]["ica"]["n_colonies"] == 50
        assert echo["seed"] == 0


class TestStrictness:
    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="parse error"):
            load_config("seed = 42\nseed = 42\n")

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key 'sseed'"):
            load_config("sseed = 1\n")

    def test_unknown_plant_key_named(self):
        with pytest.raises(ConfigError, match="l_one"):
            load_config("[plant]\nl_one = 1e-4\n")

    def test_type_errors_named(self):
        with pytest.raises(ConfigError, match="seed"):
            load_config('seed = "zero"\n')
        with pytest.raises(ConfigError, match="plant.l1"):
            load_config('[plant]\nl1 = "big"\n')

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            load_config("[loop]\nduty_min = 0.5\nduty_max = 0.4\n")
        with pytest.raises(ConfigError):
            load_config("[optimizer]\nalgo = 'annealing'\n")
        with pytest.raises(ConfigError):
            load_config("[scenario]\nnames = ['no_such_thing']\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "missing.toml")

    def test_negative_seed_rejected(self):
        with pytest.raises(ConfigError, match="non-negative"):
            load_config("seed = -1\n")


class TestOverrides:
    def test_plant_override_isolated(self):
        cfg = load_config("[plant]\nl1 = 50e-6\n")
        params = cfg.plant.to_params()
        assert params.l[0] == pytest.approx(50e-6)
        assert params.l[1] == pytest.approx(100e-6)
        defaults = RunConfig().plant.to_params()
        assert params.c == defaults.c and params.r_series == defaults.r_series

    def test_controller_selection(self):
        cfg = load_config("[controller]\nkind = 'pid'\n[controller.pid]\nkp = 0.1\n")
        gains = cfg.controller.build()
        assert gains.kp == 0.1 and gains.ki == 100.0

    def test_fuzzy_gain_override(self):
        cfg = load_config("[controller.fuzzy]\ng_dd = 0.02\n")
        assert cfg.controller.build().g_dd == 0.02

    def test_optimizer_override(self):
        cfg = load_config(
            "[optimizer]\nalgo = 'pso'\n[optimizer.pso]\npop_size = 7\nmax_iter = 3\n")
        built = cfg.optimizer.build()
        assert built.pop_size == 7 and built.max_iter == 3 and built.c1 == 2.0

    def test_weights_normalized_on_demand(self):
        cfg = load_config("[weights]\nk = [2.0, 1.0, 1.0]\n")
        assert cfg.weight_vector().k == pytest.approx((0.5, 0.25, 0.25))

    def test_custom_scenario_parsed(self):
        text = """
[scenario]
names = ["mine"]
[[scenario.custom]]
name = "mine"
v_in = 24.0
duration = 8e-3
window = 1e-3
snapshots = [4e-3, 8e-3]
events = [{t = 4e-3, kind = "load_scale", output = 2, factor = 0.8},
          {t = 6e-3, kind = "input_step", v_in = 30.0}]
"""
        cfg = load_config(text)
        (sc,) = cfg.scenarios()
        assert sc.v_in_initial == 24.0
        assert isinstance(sc.events[0], LoadScale) and sc.events[0].factor == 0.8
        assert isinstance(sc.events[1], InputStep) and sc.events[1].new_v_in == 30.0

    def test_custom_scenario_bad_event_kind(self):
        text = """
[[scenario.custom]]
name = "x"
v_in = 28.0
events = [{t = 1e-3, kind = "explode"}]
"""
        with pytest.raises(ConfigError, match="load_scale"):
            load_config(text)

    def test_formats_validated(self):
        cfg = load_config("formats = ['csv']\n")
        assert cfg.formats == ("csv",)
        with pytest.raises(ConfigError):
            load_config("formats = ['pdf']\n")

    def test_out_dir_env_fallback(self, monkeypatch):
        monkeypatch.delenv("CONVTUNE_OUT", raising=False)
        assert RunConfig().resolve_out_dir() == "out"
        monkeypatch.setenv("CONVTUNE_OUT", "/tmp/elsewhere")
        assert RunConfig().resolve_out_dir() == "/tmp/elsewhere"
        assert load_config("out_dir = 'here'\n").resolve_out_dir() == "here"
