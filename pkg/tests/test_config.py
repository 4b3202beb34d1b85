from __future__ import annotations

import json

import pytest

from trackday.config import RunConfig, load_run_config, run_config_from_dict


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.localization == "off"
        assert cfg.laps == 3
        assert cfg.sample_budget == 4500

    def test_localization_validated(self):
        with pytest.raises(ValueError, match="localization"):
            RunConfig(localization="gps")

    def test_laps_validated(self):
        with pytest.raises(ValueError):
            RunConfig(laps=0)

    def test_with_seed_threads_through_subconfigs(self):
        cfg = RunConfig().with_seed(99)
        assert cfg.seed == 99
        assert cfg.sim.rng_seed == 99
        assert cfg.train.rng_seed == 99


class TestLoader:
    def test_empty_dict_gives_defaults(self):
        cfg = run_config_from_dict({})
        assert cfg.laps == RunConfig().laps

    def test_section_overrides(self):
        cfg = run_config_from_dict({"sim": {"dt": 0.1}, "laps": 5, "localization": "zones"})
        assert cfg.sim.dt == 0.1
        assert cfg.laps == 5
        assert cfg.localization == "zones"

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config key"):
            run_config_from_dict({"vehicle": {}})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ValueError, match="unknown keys in 'sim'"):
            run_config_from_dict({"sim": {"dt": 0.1, "gravity": 9.8}})

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"laps": 2, "driver": {"practice_speed": 8.0}}))
        cfg = load_run_config(path)
        assert cfg.laps == 2
        assert cfg.driver.practice_speed == 8.0

    def test_accel_action_set_coerced_to_tuple(self):
        cfg = run_config_from_dict({"accel": {"action_set": [-1.0, 0.0, 0.2, 0.4, 1.0]}})
        assert cfg.accel.action_set == (-1.0, 0.0, 0.2, 0.4, 1.0)
