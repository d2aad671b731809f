import pytest

from prase.config import PraseConfig, build_config, flatten, parse_overrides, set_option
from prase.ingest import ConfigError


def test_defaults():
    cfg = PraseConfig()
    assert (cfg.K, cfg.alpha1, cfg.alpha2, cfg.beta) == (1, 1.0, 1.0, 0.8)
    assert cfg.delta1 == cfg.delta2 == cfg.delta_f == 0.1
    assert cfg.feedback_mode == "both"


def test_feedback_modes():
    assert PraseConfig(feedback_mode="mappings_only").use_embedding_blend is False
    assert PraseConfig(feedback_mode="mappings_only").use_se_mappings is True
    assert PraseConfig(feedback_mode="embeddings_only").use_se_mappings is False
    assert PraseConfig(feedback_mode="embeddings_only").use_embedding_blend is True


def test_file_then_overrides(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nK = 2\nbeta=0.5  # trailing\n\ntrainer.epochs=7\n")
    cfg = build_config(f, ["K=3", "reasoner.case_fold=true"])
    assert cfg.K == 3 and cfg.beta == 0.5 and cfg.trainer.epochs == 7 and cfg.reasoner.case_fold is True


def test_flatten_lists_nested_keys():
    flat = flatten(PraseConfig())
    assert flat["K"] == 1 and flat["reasoner.beta"] == 0.8 and flat["trainer.dim"] == 100


@pytest.mark.parametrize("key, raw", [("nope", "1"), ("reasoner.nope", "1"), ("K", "x"), ("reasoner", "1"),
                                      ("reasoner.case_fold", "maybe")])
def test_bad_overrides(key, raw):
    with pytest.raises(ConfigError):
        set_option(PraseConfig(), key, raw)


def test_override_syntax():
    assert parse_overrides(["a=b=c"]) == [("a", "b=c")]
    with pytest.raises(ConfigError):
        parse_overrides(["novalue"])


@pytest.mark.parametrize("override", ["K=-1", "beta=1", "alpha1=0", "delta_f=1", "feedback_mode=both_ways",
                                      "trainer.dim=0", "reasoner.top_k=0"])
def test_invalid_values(override):
    with pytest.raises(ConfigError):
        build_config(None, [override])


def test_bad_config_file(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("K 2\n")
    with pytest.raises(ConfigError, match=":1"):
        build_config(f)
    with pytest.raises(ConfigError):
        build_config(tmp_path / "absent.cfg")
