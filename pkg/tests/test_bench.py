import json

import numpy as np
import pytest

import oracles
from mvdis.bench import (
    ExperimentReport,
    critical_wins,
    emit_report,
    mean_ranks,
    run_experiment,
    sign_test,
)
from mvdis.config import RunConfig
from mvdis.data import save_multiview
from mvdis.synth import make_blobs

CFG = RunConfig(p_trees=8, repeats=2, seed=0)


@pytest.fixture(scope="module")
def blobs():
    return make_blobs(n=40, n_views=2, seed=1)


class TestRunExperiment:
    def test_basic_shape_and_mean(self, blobs):
        rep = run_experiment([blobs], ["plain"], CFG)
        accs = rep.accuracies[blobs.name]["plain"]
        assert len(accs) == 2
        assert all(0.0 <= a <= 1.0 for a in accs)
        agg = rep.aggregates()[blobs.name]["plain"]
        assert agg["mean"] == pytest.approx(np.mean(accs))

    def test_constant_dummy_scores_chance(self, blobs):
        def always_zero(train, test_views, config, seed):
            return np.zeros(test_views[0].shape[0], dtype=np.int64)

        rep = run_experiment(
            [blobs], ["dummy"], CFG, extra_methods={"dummy": always_zero}
        )
        for acc in rep.accuracies[blobs.name]["dummy"]:
            assert acc == 0.5  # balanced two-class test halves

    def test_paired_splits_shared_across_methods(self, blobs):
        rep1 = run_experiment([blobs], ["plain", "euclidean"], CFG)
        rep2 = run_experiment([blobs], ["euclidean", "plain"], CFG)
        assert rep1.split_hashes == rep2.split_hashes
        # per-method results do not depend on the method list order
        assert rep1.accuracies[blobs.name]["plain"] == rep2.accuracies[blobs.name]["plain"]

    def test_repeat_run_identical(self, blobs):
        a = run_experiment([blobs], ["plain"], CFG)
        b = run_experiment([blobs], ["plain"], CFG)
        assert a == b

    def test_bad_dataset_reported_not_fatal(self, blobs, tmp_path):
        rep = run_experiment([tmp_path / "missing.json", blobs], ["euclidean"], CFG)
        assert rep.datasets == [blobs.name]
        assert len(rep.errors) == 1
        assert "missing.json" in next(iter(rep.errors))

    def test_unknown_method_rejected(self, blobs):
        with pytest.raises(ValueError, match="nope"):
            run_experiment([blobs], ["nope"], CFG)
        with pytest.raises(ValueError):
            run_experiment([], ["plain"], CFG)
        with pytest.raises(ValueError):
            run_experiment([blobs], [], CFG)

    def test_loads_from_manifest_path(self, blobs, tmp_path):
        mp = save_multiview(blobs, tmp_path / "ds")
        rep = run_experiment([mp], ["euclidean"], CFG)
        assert rep.datasets == [blobs.name]


class TestMeanRanks:
    def test_clean_sweep(self):
        table = [[0.9, 0.5], [0.8, 0.2], [0.7, 0.6]]
        assert mean_ranks(table).tolist() == [1.0, 2.0]

    def test_tie_averaged(self):
        assert mean_ranks([[0.7, 0.7]]).tolist() == [1.5, 1.5]

    def test_matches_oracle_on_random_tables(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            d, m = int(rng.integers(1, 8)), int(rng.integers(2, 7))
            table = rng.choice([0.1, 0.2, 0.3, 0.4], size=(d, m))  # many ties
            got = mean_ranks(table)
            assert np.allclose(got, oracles.mean_ranks(table))
            # per-dataset ranks sum to m(m+1)/2, so means do too
            assert got.sum() == pytest.approx(m * (m + 1) / 2)

    def test_rejects_single_method(self):
        with pytest.raises(ValueError):
            mean_ranks([[0.5]])


class TestSignTest:
    def test_symmetric_never_significant(self):
        for n in (2, 8, 15):
            for alpha in (0.4, 0.1, 0.05):
                assert not sign_test(n // 2, n % 2, n // 2, alpha).significant

    def test_critical_values_match_oracle(self):
        for n in (1, 5, 15, 30, 100):
            for alpha in (0.10, 0.05, 0.01):
                assert critical_wins(n, alpha) == oracles.critical_wins(n, alpha)

    def test_known_criticals_for_fifteen(self):
        assert critical_wins(15, 0.10) == 11
        assert critical_wins(15, 0.05) == 12
        assert critical_wins(15, 0.01) == 13

    def test_monotone_in_wins(self):
        for alpha in (0.10, 0.05, 0.01):
            flags = [sign_test(w, 0, 15 - w, alpha).significant for w in range(16)]
            assert flags == sorted(flags)  # once significant, stays significant

    def test_odd_tie_rounds_toward_losses(self):
        res = sign_test(5, 3, 2, 0.5)
        assert res.wins_adjusted == 6
        assert res.losses_adjusted == 4

    def test_tiny_n_can_be_unreachable(self):
        res = sign_test(3, 0, 0, 0.01)  # even 3/3 wins has tail 0.125
        assert res.critical_wins == 4
        assert not res.significant

    def test_input_validation(self):
        with pytest.raises(ValueError):
            sign_test(1, 0, 1, 0.0)
        with pytest.raises(ValueError):
            sign_test(1, 0, 1, 1.0)
        with pytest.raises(ValueError):
            sign_test(0, 0, 0, 0.05)


class TestEmitReport:
    def small_report(self):
        return ExperimentReport(
            datasets=["d1"],
            methods=["alpha"],
            repeats=2,
            train_frac=0.5,
            seed=3,
            config={"p_trees": 4},
            accuracies={"d1": {"alpha": [0.75, 0.8125]}},
            split_hashes={"d1": ["x", "y"]},
        )

    def test_json_roundtrip_equal(self, tmp_path):
        rep = self.small_report()
        p = emit_report(rep, tmp_path / "r.json", "json")
        back = ExperimentReport.from_dict(json.loads(p.read_text()))
        assert back == rep

    def test_markdown_single_cell(self, tmp_path):
        p = emit_report(self.small_report(), tmp_path / "r.md", "markdown")
        text = p.read_text()
        assert "| d1 | **78.12 ± 3.12** |" in text
        assert "| *Avg rank* | **1.00** |" in text

    def test_csv_rows(self, tmp_path):
        p = emit_report(self.small_report(), tmp_path / "r.csv", "csv")
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "dataset,method,repetition,accuracy"
        assert lines[1] == "d1,alpha,0,0.75"
        assert len(lines) == 3

    def test_empty_methods_error_before_write(self, tmp_path):
        rep = self.small_report()
        rep.methods = []
        out = tmp_path / "never.json"
        with pytest.raises(ValueError):
            emit_report(rep, out, "json")
        assert not out.exists()

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            emit_report(self.small_report(), tmp_path / "r.xml", "xml")

    def test_markdown_bolds_best_per_row(self, tmp_path):
        rep = ExperimentReport(
            datasets=["d"],
            methods=["a", "b"],
            repeats=1,
            train_frac=0.5,
            seed=0,
            config={},
            accuracies={"d": {"a": [0.6], "b": [0.9]}},
            split_hashes={"d": ["h"]},
        )
        text = emit_report(rep, tmp_path / "r.md", "markdown").read_text()
        assert "| d | 60.00 ± 0.00 | **90.00 ± 0.00** |" in text
        assert "| *Avg rank* | 2.00 | **1.00** |" in text
