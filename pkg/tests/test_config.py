"""
Tests for config-file loading and the flag > file > default merge.
"""

from pathlib import Path

import pytest

from ferex.cli import build_parser, build_run_config
from ferex.config import get_bool, get_float, get_int, load_config_file, settings
from ferex.errors import ConfigurationError, UsageError


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def _config(*argv: str):
    return build_run_config(build_parser().parse_args(list(argv)))


class TestGetters:
    """Tests for the typed getters."""

    def test_defaults_when_missing(self):
        """Absent keys fall back to the default."""
        assert get_int({}, "epochs", 5) == 5
        assert get_float({}, "momentum", None) is None
        assert get_bool({}, "shuffle_each_epoch", True) is True

    @pytest.mark.parametrize("raw", ["true", "1", "yes", "ON"])
    def test_bool_truthy(self, raw):
        """Common truthy spellings read as True."""
        assert get_bool({"flag": raw}, "flag") is True

    def test_bool_falsy(self):
        """Anything else reads as False."""
        assert get_bool({"flag": "off"}, "flag", True) is False

    def test_bad_number(self):
        """Non-numeric values name the key."""
        with pytest.raises(ConfigurationError, match="epochs"):
            get_int({"epochs": "many"}, "epochs", None)
        with pytest.raises(ConfigurationError, match="momentum"):
            get_float({"momentum": "fast"}, "momentum", None)


class TestLoadConfigFile:
    """Tests for load_config_file."""

    def test_reads_key_values(self, tmp_path):
        """Plain key=value lines and comments."""
        path = _write(tmp_path, "# run\nepochs=12\nlearning_rate=0.05\n")
        assert load_config_file(path) == {"epochs": "12", "learning_rate": "0.05"}

    def test_unknown_key(self, tmp_path):
        """Unknown keys are rejected by name."""
        path = _write(tmp_path, "epochs=3\nlearnig_rate=0.1\n")
        with pytest.raises(ConfigurationError, match="learnig_rate"):
            load_config_file(path)

    def test_missing_file(self, tmp_path):
        """A missing file is a configuration error."""
        with pytest.raises(ConfigurationError, match="not found"):
            load_config_file(tmp_path / "absent.cfg")


class TestBuildRunConfig:
    """Tests for build_run_config."""

    def test_builtin_defaults(self):
        """No flags and no file give the documented defaults."""
        config = _config("train")
        assert config.seed == settings.SEED == 42
        assert config.train.epochs == 100
        assert config.train.sgd.learning_rate == 0.01
        assert config.train.sgd.momentum == 0.9
        assert config.train.sgd.batch_size == 16
        assert config.model.input_size == 96
        assert config.preprocess.crop_fraction == 0.85
        assert config.train_fraction == 0.75
        assert config.has_source is False

    def test_file_overrides_defaults(self, tmp_path):
        """Values from the file replace the defaults."""
        path = _write(tmp_path, "epochs=7\nmomentum=0.5\nsynth=4\nshuffle_each_epoch=false\n")
        config = _config("train", "--config", str(path))
        assert config.train.epochs == 7
        assert config.train.sgd.momentum == 0.5
        assert config.synth == 4
        assert config.train.shuffle_each_epoch is False

    def test_flags_override_file(self, tmp_path):
        """Flags win over file values."""
        path = _write(tmp_path, "epochs=7\nseed=3\n")
        config = _config("train", "--config", str(path), "--epochs", "2", "--lr", "0.2")
        assert config.train.epochs == 2
        assert config.train.sgd.learning_rate == 0.2
        assert config.seed == config.train.seed == 3

    def test_data_flag_replaces_file_synth(self, tmp_path):
        """A source flag replaces the other source set in the file."""
        path = _write(tmp_path, "synth=4\n")
        config = _config("train", "--config", str(path), "--data", str(tmp_path))
        assert config.data == tmp_path
        assert config.synth is None

    def test_both_sources_in_file(self, tmp_path):
        """data and synth together in one file is a usage error."""
        path = _write(tmp_path, f"synth=4\ndata={tmp_path}\n")
        with pytest.raises(UsageError, match="mutually exclusive"):
            _config("train", "--config", str(path))

    def test_architecture_lists(self, tmp_path):
        """conv_channels and fc_widths read as comma-separated integers."""
        path = _write(tmp_path, "conv_channels=2,2,2,2\nfc_widths=8,4\ninput_size=16\n")
        config = _config("train", "--config", str(path))
        assert config.model.conv_channels == (2, 2, 2, 2)
        assert config.model.fc_widths == (8, 4)
        assert config.preprocess.input_size == 16

    def test_invalid_value_is_usage_error(self):
        """Out-of-range values become a usage error naming the field."""
        with pytest.raises(UsageError, match="momentum"):
            _config("train", "--momentum", "1.5")

    def test_unknown_file_key_is_usage_error(self, tmp_path):
        """Configuration problems surface as usage errors."""
        path = _write(tmp_path, "epoch=3\n")
        with pytest.raises(UsageError, match="epoch"):
            _config("train", "--config", str(path))
