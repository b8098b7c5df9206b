import pytest

from pathrules.config import RunConfig, load_config_file, make_config, parse_count


class TestParseCount:
    def test_integers_pass_through(self):
        assert parse_count(5) == 5
        assert parse_count("12") == 12

    def test_unlimited_words(self):
        for word in ("unlimited", "UNLIMITED", "none", "inf"):
            assert parse_count(word) is None
        assert parse_count(None) is None

    def test_rejects_garbage_and_nonpositive(self):
        for bad in ("soon", 0, -1, "0", 1.5, True):
            with pytest.raises(ValueError):
                parse_count(bad)


class TestValidation:
    def test_defaults_valid(self):
        config = RunConfig().validate()
        assert config.alpha == 100 and config.top_k == 300

    @pytest.mark.parametrize(
        "overrides",
        [
            {"max_len": 0},
            {"alpha": 0},
            {"beta": -2},
            {"top_k": 0},
            {"mode": "median"},
            {"path_weight": "quadratic"},
            {"workers": 0},
            {"column_order": "rso"},
            {"seed": 2**64},
        ],
    )
    def test_bad_values_rejected(self, overrides):
        with pytest.raises(ValueError):
            RunConfig(**overrides).validate()

    def test_unlimited_counts_allowed(self):
        RunConfig(alpha=None, beta=None, answer_cap=None, top_k=None).validate()


class TestFileAndPrecedence:
    def test_toml_round_trip(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('max_len = 6\nalpha = "unlimited"\nseed = 42\n')
        values = load_config_file(path)
        assert values == {"max_len": 6, "alpha": None, "seed": 42}

    def test_unknown_keys_listed(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("llama = 1\nwizard = 2\n")
        with pytest.raises(ValueError, match="llama, wizard"):
            load_config_file(path)

    def test_cli_overrides_file_overrides_defaults(self):
        config = make_config({"max_len": 6, "seed": 1}, {"seed": 9})
        assert config.max_len == 6
        assert config.seed == 9
        assert config.alpha == 100

    def test_explicit_unlimited_survives_merge(self):
        config = make_config({"alpha": 7}, {"alpha": None})
        assert config.alpha is None

    def test_summary_hides_output_paths_and_names_unlimited(self):
        config = RunConfig(alpha=None, rules_out="x.tsv")
        summary = config.summary()
        assert summary["alpha"] == "unlimited"
        assert "rules_out" not in summary
