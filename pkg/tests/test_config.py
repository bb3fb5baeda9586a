from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbsl.config import ConfigError, load_config, parse_config, parse_range

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[experiment]
model = normal
method = rbsl-var
"""


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.experiment.m == 100
    assert cfg.experiment.iterations == 1000
    assert cfg.experiment.burn_in == 0
    assert cfg.methods == ["rbsl-var"]
    assert cfg.gamma_prior_for("rbsl-var") == ("exponential", 0.5)
    assert cfg.gamma_prior_for("bsl") is None
    assert not cfg.is_grid and cfg.grid_points() == [None]


def test_comments_and_whitespace():
    cfg = parse_config("# header\n\n[experiment]\n  model = ma1   # trailing\nmethod=bsl\nm = 50\n")
    assert cfg.experiment.model == "ma1" and cfg.experiment.m == 50


def test_incompatible_gamma_prior_names_both_keys():
    errs = errors_of(MINIMAL + "\n[gamma_prior]\nkind = laplace\n")
    assert len(errs) == 1
    msg = errs[0]
    assert "method" in msg and "kind" in msg and "line" in msg


def test_burn_in_beyond_iterations():
    errs = errors_of(MINIMAL + "iterations = 10\nburn_in = 11\n")
    assert any("burn_in" in e for e in errs)


def test_unknown_key_and_section():
    errs = errors_of(MINIMAL + "colour = red\n[bogus]\na = 1\nb = 2\n")
    assert any("colour" in e for e in errs)
    assert sum("bogus" in e for e in errs) == 1
    assert not any("'a'" in e or " a " in e for e in errs)


def test_all_errors_reported_together():
    errs = errors_of("[experiment]\nmodel = nope\nm = abc\nmethod = rbsl-mean\nm = 3\n")
    assert len(errs) >= 3
    assert any("model" in e for e in errs)
    assert any("duplicate" in e.lower() for e in errs)


def test_key_before_section():
    errs = errors_of("m = 5\n" + MINIMAL)
    assert any("line 1" in e for e in errs)


def test_m_must_exceed_summary_dimension():
    errs = errors_of("[experiment]\nmodel = toad\nmethod = rbsl-var\nm = 40\n")
    assert any("m" in e for e in errs)


def test_grid_parameter_must_be_numeric():
    errs = errors_of(MINIMAL + "[grid]\nparameter = experiment.method\nvalues = 1:1:3\n")
    assert errs


def test_grid_expansion():
    cfg = parse_config(MINIMAL + "[grid]\nparameter = data.sd\nvalues = 1.0:0.5:2.0\nmethods = bsl, rbsl-mean\n")
    assert cfg.grid_points() == [1.0, 1.5, 2.0]
    assert cfg.methods == ["bsl", "rbsl-mean"]
    assert cfg.override("data.sd", 1.5).data.sd == 1.5
    assert cfg.override("experiment.m", 50.0).experiment.m == 50


def test_range_syntax():
    assert parse_range("1.0:0.1:2.0") == [round(1 + 0.1 * k, 12) for k in range(11)]
    assert parse_range("0.5, 1, 3") == [0.5, 1.0, 3.0]
    for bad in ("1:0:2", "2:1:1", "1:2"):
        with pytest.raises(ValueError):
            parse_range(bad)


@given(st.integers(-50, 50), st.integers(1, 20), st.integers(0, 30))
def test_range_endpoints(a, h, k):
    vals = parse_range(f"{a}:{h}:{a + h * k}")
    assert len(vals) == k + 1
    assert vals[0] == a and vals[-1] == a + h * k


def test_echo_contains_defaults():
    echo = parse_config(MINIMAL).echo()
    assert echo["experiment"]["thin"] == 1
    assert echo["gamma_prior"]["scale"] == 0.5


@pytest.mark.parametrize("path", sorted(CONFIGS.rglob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.experiment.model in ("normal", "ma1", "toad")
