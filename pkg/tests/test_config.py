"""key=value config parsing and the spec builders derived from it."""

import pytest

from distreg import BaseKernelSpec, EmbeddingKernelSpec, SyntheticConfig
from distreg.config import (
    DEFAULTS,
    base_spec_from,
    embed_spec_from,
    load_config,
    parse_config,
    penalty_from,
    seed_list_from,
    synthetic_config_from,
)


def test_empty_text_yields_defaults():
    assert parse_config("") == DEFAULTS


def test_assignments_comments_and_blanks():
    cfg = parse_config(
        """
        # a comment line
        n = 128          # trailing comment
        noise_sigma=0.2

        base.family = laplacian
        sizes = 32, 64,128
        """
    )
    assert cfg["n"] == 128
    assert cfg["noise_sigma"] == 0.2
    assert cfg["base.family"] == "laplacian"
    assert cfg["sizes"] == [32, 64, 128]
    # untouched keys keep their defaults
    assert cfg["d_max"] == DEFAULTS["d_max"]


def test_beta_accepts_auto_and_numbers():
    assert parse_config("beta = auto")["beta"] == "auto"
    assert parse_config("beta = 0.5")["beta"] == 0.5


def test_unknown_key_reports_line_number():
    with pytest.raises(ValueError, match="line 2.*unknown"):
        parse_config("n = 4\nbogus = 1\n")


def test_bad_value_reports_line_number():
    with pytest.raises(ValueError, match="line 1.*bad value"):
        parse_config("n = not-a-number")
    with pytest.raises(ValueError, match="expected key=value"):
        parse_config("just some words")


def test_load_config_reads_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n = 32\nseed = 9\n")
    cfg = load_config(path)
    assert cfg["n"] == 32 and cfg["seed"] == 9


def test_spec_builders():
    cfg = parse_config("p = 3\nbase.family = laplacian\nbase.bandwidth = 0.25\n")
    base = base_spec_from(cfg)
    assert base == BaseKernelSpec("laplacian", 0.25, 3)
    embed = embed_spec_from(cfg)
    assert isinstance(embed, EmbeddingKernelSpec)
    assert embed.base == base
    penalty = penalty_from(parse_config("penalty.kind = laplacian"))
    assert penalty.kind == "laplacian"


def test_synthetic_config_builder_and_seed_override():
    cfg = parse_config("n = 24\nd = 10\nseed = 5\n")
    scfg = synthetic_config_from(cfg)
    assert isinstance(scfg, SyntheticConfig)
    assert (scfg.n, scfg.d, scfg.seed) == (24, 10, 5)
    assert synthetic_config_from(cfg, seed=77).seed == 77


def test_seed_list_is_base_plus_offsets():
    cfg = parse_config("seed = 7\nseeds = 3\n")
    assert seed_list_from(cfg) == [7, 8, 9]
    assert seed_list_from(cfg, seed=100) == [100, 101, 102]
