import json

import numpy as np
import pytest

from covertpath.errors import ConfigurationError, CornerPointError
from covertpath.harness import (
    ExperimentConfig,
    load_config,
    parse_config_text,
    run_experiment,
    run_lemma_suite,
    write_csv_summary,
    write_jsonl,
)

FIG2_TEXT = """\
# toy two-link system
num_links = 2
block_length = 8
probs = 0 0.5 0.25 0.25
willie_sets = 1 ; 2
mode = deniable
epsilon = 0.45
seed = 11
trials = 3
num_bins = 32
num_message_bins = 4
"""

REMARK1_TEXT = """\
num_links = 3
block_length = 6
probs = 0.5 0 0 0 0 0 0 0.5
willie_sets = 1,2 ; 1,3 ; 2,3
mode = hidable
epsilon = 0.5
seed = 2
"""


class TestConfigParsing:
    def test_parses_core_keys(self):
        cfg = parse_config_text(FIG2_TEXT)
        assert cfg.system.num_links == 2
        assert cfg.system.block_length == 8
        assert np.allclose(cfg.innocent.probs, [0, 0.5, 0.25, 0.25])
        assert cfg.family.subsets == ((1,), (2,))
        assert cfg.mode == "deniable"
        assert cfg.epsilon == 0.45
        assert cfg.seed == 11 and cfg.trials == 3
        assert cfg.num_bins == 32 and cfg.num_message_bins == 4

    def test_comma_family_format(self):
        cfg = parse_config_text(REMARK1_TEXT)
        assert cfg.family.subsets == ((1, 2), (1, 3), (2, 3))

    def test_default_epsilon_is_inverse_sqrt_n(self):
        text = FIG2_TEXT.replace("epsilon = 0.45\n", "")
        cfg = parse_config_text(text)
        assert cfg.effective_epsilon == pytest.approx(1 / np.sqrt(8))

    @pytest.mark.parametrize("mutation,fragment", [
        ("willie_sets = 1 ; 2", ""),                      # missing key
        ("num_links = 2", "num_links = two"),             # bad int
        ("mode = deniable", "mode = sneaky"),             # bad enum
        ("probs = 0 0.5 0.25 0.25", "probs = 0 0.5"),     # wrong length
    ])
    def test_rejects_bad_configs(self, mutation, fragment):
        text = FIG2_TEXT.replace(mutation, fragment)
        with pytest.raises(ConfigurationError):
            parse_config_text(text)

    def test_rejects_unknown_and_duplicate_keys(self):
        with pytest.raises(ConfigurationError):
            parse_config_text(FIG2_TEXT + "mystery = 1\n")
        with pytest.raises(ConfigurationError):
            parse_config_text(FIG2_TEXT + "seed = 12\n")

    def test_hash_tracks_text(self):
        a = parse_config_text(FIG2_TEXT)
        b = parse_config_text(FIG2_TEXT + "# trailing comment\n")
        assert a.config_hash != b.config_hash

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "nope.cfg")


class TestRunExperiment:
    def test_composes_pipeline(self):
        cfg = parse_config_text(FIG2_TEXT)
        report = run_experiment(cfg)
        assert report["capacity"]["deniable_capacity"] == pytest.approx(
            1.811278, abs=1e-6
        )
        assert len(report["trials"]) == 3
        for trial in report["trials"]:
            assert trial["reliability"]["missed_detection"] == 0.0
            assert trial["codebook"]["num_bins"] == 32

    def test_deterministic_reports(self, tmp_path):
        cfg = parse_config_text(FIG2_TEXT)
        r1 = run_experiment(cfg)
        r2 = run_experiment(cfg)
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)

    def test_trial_seeds_depend_only_on_master_and_index(self):
        cfg = parse_config_text(FIG2_TEXT)
        one = run_experiment(cfg)
        fewer = parse_config_text(FIG2_TEXT.replace("trials = 3", "trials = 2"))
        two = run_experiment(fewer)
        for a, b in zip(two["trials"], one["trials"]):
            assert a["trial_seed"] == b["trial_seed"]

    def test_corner_point_surfaces_in_hidable_mode(self):
        cfg = parse_config_text(REMARK1_TEXT)
        with pytest.raises(CornerPointError) as err:
            run_experiment(cfg)
        assert err.value.subset == (1, 2)

    def test_writers(self, tmp_path):
        cfg = parse_config_text(FIG2_TEXT)
        report = run_experiment(cfg)
        jl = tmp_path / "trials.jsonl"
        cs = tmp_path / "summary.csv"
        write_jsonl(report, jl)
        write_csv_summary(report, cs)
        lines = jl.read_text().strip().splitlines()
        assert len(lines) == 3
        first = json.loads(lines[0])
        assert first["meta"]["config_hash"] == cfg.config_hash
        assert "covertpath" in first["meta"]["versions"]
        rows = cs.read_text().strip().splitlines()
        assert len(rows) == 4  # header + 3 trials


class TestLemmaSuite:
    @pytest.fixture(scope="class")
    def suite_report(self):
        text = FIG2_TEXT.replace("trials = 3", "trials = 8")
        cfg = parse_config_text(text)
        return run_lemma_suite(cfg)

    def test_lemma3_is_deterministically_perfect(self, suite_report):
        assert suite_report.lemma3["pass_fraction"] == 1.0

    def test_thresholds_recorded(self, suite_report):
        for lemma in (suite_report.lemma1, suite_report.lemma2,
                      suite_report.lemma4):
            assert 0.0 <= lemma["threshold"] <= 1.0
            assert lemma["samples"] > 0

    def test_pass_fractions_meet_thresholds(self, suite_report):
        assert suite_report.passes()

    def test_rate_cap_enforced(self):
        # 2^{nR} far above the entropy ceiling: must be rejected without
        # the contrast flag
        text = FIG2_TEXT.replace("num_bins = 32", "num_bins = 65536")
        cfg = parse_config_text(text)
        with pytest.raises(ConfigurationError) as err:
            run_lemma_suite(cfg)
        assert "ceiling" in str(err.value)

    def test_super_rate_contrast_degrades_lemma1(self):
        # R > H(p^a): concentration should degrade measurably vs the capped
        # run (direction of Lemma 1's proviso)
        base = FIG2_TEXT.replace("trials = 3", "trials = 6")
        capped = run_lemma_suite(parse_config_text(base))
        unc = base.replace("num_bins = 32", "num_bins = 65536")
        unc = unc.replace("num_message_bins = 4", "num_message_bins = 1024")
        unc += "allow_super_rate = true\n"
        wild = run_lemma_suite(parse_config_text(unc))
        assert wild.parameters["rate_check"]["super_rate"]
        assert wild.lemma1["pass_fraction"] < capped.lemma1["pass_fraction"]

    def test_report_serializable(self, suite_report):
        payload = json.dumps(suite_report.to_dict(), sort_keys=True)
        assert "lemma1" in payload
