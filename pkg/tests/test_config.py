import pytest

from tcropt.config import (ConfigError, load_scenario_config, parse_quantity,
                           scenario_config_from_mapping)


class TestParseQuantity:
    def test_plain_numbers_pass_through(self):
        assert parse_quantity(5) == 5.0
        assert parse_quantity(0.25) == 0.25
        assert parse_quantity("3e6") == 3e6

    def test_frequency_units(self):
        assert parse_quantity("10 MHz") == 1e7
        assert parse_quantity("1 GHz") == 1e9
        assert parse_quantity("20GHz") == 2e10

    def test_power_units(self):
        assert parse_quantity("0.2 W") == 0.2
        assert parse_quantity("200 mW") == pytest.approx(0.2)

    def test_data_sizes_are_decimal_bytes_to_bits(self):
        assert parse_quantity("500 KB") == 4e6
        assert parse_quantity("2000 KB") == 1.6e7
        assert parse_quantity("8 MB") == 6.4e7

    def test_dbm_to_watts(self):
        assert parse_quantity("-134 dBm") == pytest.approx(10 ** -16.4)
        assert parse_quantity("-134 dBm/Hz") == pytest.approx(10 ** -16.4)
        assert parse_quantity("30 dBm") == pytest.approx(1.0)

    def test_rates_and_lengths(self):
        assert parse_quantity("15 Mbps") == 1.5e7
        assert parse_quantity("1 km") == 1000.0

    def test_rejects_garbage(self):
        with pytest.raises(ConfigError):
            parse_quantity("ten MHz")
        with pytest.raises(ConfigError):
            parse_quantity("5 parsec")
        with pytest.raises(ConfigError):
            parse_quantity([1, 2])


class TestScenarioConfig:
    def test_defaults_from_empty_mapping(self):
        cfg = scenario_config_from_mapping({})
        assert cfg.n_users == 20
        assert cfg.n_servers == 3
        assert cfg.server_bandwidth == 1e7
        assert cfg.params.noise_density == pytest.approx(10 ** -16.4)

    def test_full_mapping(self):
        cfg = scenario_config_from_mapping({
            "users": 10,
            "servers": 2,
            "area": "1 km",
            "data_size": ["500 KB", "2000 KB"],
            "user": {"max_power": "0.2 W", "max_freq": "1 GHz"},
            "server": {"max_power": "10 W", "max_freq": "20 GHz",
                       "bandwidth": "10 MHz"},
            "weights": {"delay": 0.5, "energy": 0.5},
            "blockchain": {"block_size": "8 MB", "wired_rate": "15 Mbps",
                           "block_ratio": 1.0},
            "noise": "-134 dBm",
            "feedback_ratio": 0.9,
        })
        assert cfg.n_users == 10
        assert cfg.area_m == 1000.0
        assert cfg.data_bits_lo == 4e6
        assert cfg.params.block_size_bits == 6.4e7
        assert cfg.params.wired_rate_bps == 1.5e7

    def test_solver_section(self):
        cfg = scenario_config_from_mapping(
            {"solver": {"max_outer": 10, "tol_outer": 1e-4}})
        assert cfg.params.max_outer == 10
        assert cfg.params.tol_outer == 1e-4
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"solver": {"bogus_knob": 1}})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"userz": 5})
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"user": {"colour": "red"}})

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"users": 0})
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"data_size": ["2000 KB", "500 KB"]})
        with pytest.raises(ConfigError):
            scenario_config_from_mapping({"data_size": "500 KB"})


class TestLoadFile:
    def test_yaml_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("users: 6\nservers: 2\n"
                        "server:\n  bandwidth: 20 MHz\n")
        cfg = load_scenario_config(str(path))
        assert cfg.n_users == 6
        assert cfg.server_bandwidth == 2e7

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        cfg = load_scenario_config(str(path))
        assert cfg.n_users == 20

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_scenario_config("/no/such/file.yaml")

    def test_broken_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("users: [unclosed\n")
        with pytest.raises(ConfigError):
            load_scenario_config(str(path))
