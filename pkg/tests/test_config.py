import pytest

from tornmend import config
from tornmend.errors import ConfigError


def test_defaults_round_trip():
    cfg = config.Config()
    assert config.loads(config.dumps(cfg)) == cfg


def test_edited_values_round_trip(tmp_path):
    text = """
invert = true
[match]
tau = 2.0
samples = 48
[blend]
feather_width = 0.0
[simplify]
tolerance = 3.5
"""
    cfg = config.loads(text)
    assert cfg.invert and cfg.match.tau == 2.0 and cfg.match.samples == 48
    assert cfg.blend.feather_width == 0.0 and cfg.simplify.tolerance == 3.5
    path = tmp_path / "c.toml"
    path.write_text(config.dumps(cfg))
    again = config.load(path)
    assert again == cfg
    assert config.dumps(again) == config.dumps(cfg)


def test_overrides_win():
    cfg = config.loads("[match]\ntau = 2.0\n").with_overrides(match={"tau": 0.5})
    assert cfg.match.tau == 0.5


@pytest.mark.parametrize("text", [
    "[matching]\ntau = 1.0\n",
    "[match]\ntua = 1.0\n",
    "[match]\ntau = -1.0\n",
    "[match]\nsamples = 1\n",
    "[blend]\nfeather_width = -2.0\n",
    "[diffusion]\ndt = 5.0\n",
    "[repair]\natlas = 'glyphs.pgm'\n",
    "invert = 'yes'\n",
    "match = 3\n",
    "this is not toml",
])
def test_bad_files_raise_config_error(text):
    with pytest.raises(ConfigError):
        config.loads(text)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "absent.toml")
