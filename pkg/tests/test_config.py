import math
from pathlib import Path

import pytest

from quva.config import ConfigError, dump_fields, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[de]
kappa2 = 1
kappa1 = -1
kappa0 = 8

[ansatz]
depth = 2

[search]
p_c = 4
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.problem.kappa2, cfg.problem.kappa1, cfg.problem.kappa0) == (1.0, -1.0, 8.0)
    assert cfg.search.n_random_init == 600 and cfg.search.n_guided == 600
    assert cfg.measurement.shots is None
    assert cfg.oracle is None
    assert cfg.emit_plots


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*_d[0-9].ini")))
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.oracle is not None
    assert cfg.search.n_random_init + cfg.search.n_guided == 1200


def test_correlation_config_needs_no_run_sections():
    cfg = load_config(CONFIGS / "correlation.ini", strict=False)
    assert cfg.correlation.depths == (0, 1, 2, 3)
    assert cfg.correlation.n_samples == 500
    with pytest.raises(ConfigError, match=r"missing section \[de\]"):
        load_config(CONFIGS / "correlation.ini")


def test_missing_required_field_is_named():
    text = MINIMAL.replace("kappa0 = 8\n", "")
    with pytest.raises(ConfigError, match="kappa0"):
        parse_config(text)


def test_bad_value_reports_line():
    text = MINIMAL.replace("kappa1 = -1", "kappa1 = minus one")
    with pytest.raises(ConfigError, match=r"kappa1 .*line 4.*real number"):
        parse_config(text)


@pytest.mark.parametrize("extra, pattern", [
    ("[bogus]\nx = 1\n", "unknown section"),
    ("[measurement]\nshotz = 10\n", "unknown field 'shotz'"),
    ("[oracle]\nf0 = 1\nscaling = wide\n", "matched or peak"),
    ("[search]\np_c = -1\n", "p_c"),
])
def test_invalid_configs_rejected(extra, pattern):
    text = MINIMAL.replace("[search]\np_c = 4\n", "") + extra
    if "p_c" not in extra:
        text += "[search]\np_c = 4\n"
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_shots_parsing():
    assert parse_config(MINIMAL + "[measurement]\nshots = 5000\n").measurement.shots == 5000
    assert parse_config(MINIMAL + "[measurement]\nshots = exact\n").measurement.shots is None
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "[measurement]\nshots = lots\n")


def test_infinite_threshold_accepted():
    cfg = parse_config(MINIMAL.replace("p_c = 4", "p_c = inf"))
    assert math.isinf(cfg.search.p_c)


def test_dump_fields_is_plain_data():
    import json

    out = dump_fields(parse_config(MINIMAL + "[oracle]\nf0 = -1\n"))
    json.dumps(out)
    assert out["de"]["kappa0"] == 8.0 and out["oracle"]["f0"] == -1.0


def test_readme_example_parses():
    import re

    readme = (CONFIGS.parent / "README.md").read_text()
    block = re.search(r"```ini\n(.*?)```", readme, re.S).group(1)
    cfg = parse_config(block)
    assert cfg.ansatz.layout.value == "six_param"
    assert cfg.oracle.f0 == -1.0
