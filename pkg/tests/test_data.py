import math

import numpy as np
import pytest
from scipy import stats

from fairlift.data import (
    CollegeConfig,
    EmptyFileError,
    MissingColumnError,
    SyntheticConfig,
    ValueParseError,
    generate_college,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    synthetic_potential_probs,
)

# independent evaluation of the logistic function for frozen expectations
SIGMOID_2 = 1.0 / (1.0 + math.exp(-2.0))  # 0.8807970779778823


class TestSyntheticPotentials:
    def test_all_zero_row_is_neutral(self):
        X = np.zeros((1, 12))
        p0, p1 = synthetic_potential_probs(X)
        assert p0[0] == 0.5
        assert p1[0] == 0.5

    def test_x9_alone_drives_treated_arm(self):
        X = np.zeros((1, 12))
        X[0, 8] = 1.0  # x9
        p0, p1 = synthetic_potential_probs(X)
        assert p1[0] == pytest.approx(0.8807970779778823, abs=1e-15)
        assert p0[0] == 0.5
        assert p1[0] - p0[0] == pytest.approx(0.3807970779778823, abs=1e-15)
        assert p1[0] == pytest.approx(SIGMOID_2, abs=1e-15)


class TestGenerateSynthetic:
    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            SyntheticConfig(n=0, c=0.5)
        with pytest.raises(ValueError):
            SyntheticConfig(n=10, c=1.5)
        with pytest.raises(ValueError):
            SyntheticConfig(n=10, c=-0.1)

    def test_schema_layout(self):
        ds = generate_synthetic(SyntheticConfig(n=100, c=0.0, seed=0))
        assert ds.d == 12
        assert ds.schema.sensitive == (True,) * 4 + (False,) * 8
        assert ds.schema.names[:2] == ("x1", "x2")

    def test_consistency_and_randomization(self):
        ds = generate_synthetic(SyntheticConfig(n=50_000, c=0.25, seed=5))
        observed = np.where(ds.T == 1, ds.Y1, ds.Y0)
        assert np.array_equal(observed, ds.Y)
        bound = 3.0 * math.sqrt(0.25 / ds.n)
        assert abs(ds.T.mean() - ds.assignment_prob) <= bound

    def test_uncorrelated_at_c0(self):
        ds = generate_synthetic(SyntheticConfig(n=100_000, c=0.0, seed=7))
        assert abs(np.corrcoef(ds.X[:, 2], ds.X[:, 4])[0, 1]) < 0.05

    def test_correlation_dial_monotone(self):
        prev = -1.0
        for c in (0.0, 0.25, 0.5, 0.75, 1.0):
            ds = generate_synthetic(SyntheticConfig(n=100_000, c=c, seed=11))
            corr = np.corrcoef(ds.X[:, 2], ds.X[:, 4])[0, 1]
            assert corr >= prev
            prev = corr

    @pytest.mark.parametrize("c", [0.0, 0.5, 1.0])
    def test_x4_independent_at_all_c(self, c):
        ds = generate_synthetic(SyntheticConfig(n=100_000, c=c, seed=13))
        for j in range(12):
            if j == 3:
                continue
            assert abs(np.corrcoef(ds.X[:, 3], ds.X[:, j])[0, 1]) < 0.05

    def test_treatment_independent_of_covariates(self):
        ds = generate_synthetic(SyntheticConfig(n=50_000, c=0.5, seed=17))
        for j, kind in enumerate(ds.schema.kinds):
            if kind == "binary":
                table = np.array([
                    [((ds.X[:, j] == v) & (ds.T == t)).sum() for t in (0, 1)]
                    for v in (0, 1)
                ])
                _, p, _, _ = stats.chi2_contingency(table)
            else:
                _, p = stats.ks_2samp(ds.X[ds.T == 0, j], ds.X[ds.T == 1, j])
            assert p > 0.001

    def test_seed_determinism(self):
        a = generate_synthetic(SyntheticConfig(n=1000, c=0.5, seed=3))
        b = generate_synthetic(SyntheticConfig(n=1000, c=0.5, seed=3))
        assert a.checksum() == b.checksum()


class TestGenerateCollege:
    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            CollegeConfig(n=10, minority_fraction=0.0)
        with pytest.raises(ValueError):
            CollegeConfig(n=10, score_noise=0.0)
        with pytest.raises(ValueError):
            CollegeConfig(n=10, budget=0.0)

    def test_zero_prep_gap_gives_identical_scores(self):
        ds = generate_college(CollegeConfig(n=100_000, prep_gap=0.0, seed=1))
        g = ds.groups()
        _, p = stats.ks_2samp(ds.X[g == 0, 1], ds.X[g == 1, 1])
        assert p > 0.001

    def test_never_admit_graduates_equal_sum_y0(self):
        ds = generate_college(CollegeConfig(n=5000, seed=2))
        decisions = np.zeros(ds.n)
        graduates = np.where(decisions == 1, ds.Y1, ds.Y0).sum()
        assert graduates == ds.Y0.sum()

    def test_score_monotone_in_graduation(self):
        ds = generate_college(CollegeConfig(n=100_000, seed=3))
        score = ds.X[:, 1]
        lo, hi = np.quantile(score, [0.1, 0.9])
        assert ds.Y1[score >= hi].mean() > ds.Y1[score <= lo].mean()

    def test_consistency(self):
        ds = generate_college(CollegeConfig(n=2000, seed=4))
        assert np.array_equal(np.where(ds.T == 1, ds.Y1, ds.Y0), ds.Y)


class TestCsv:
    def test_round_trip(self, tmp_path, synth_small):
        ds = synth_small.subset(np.arange(200))
        save_csv(ds, tmp_path / "d.csv", tmp_path / "s.json")
        back = load_csv(tmp_path / "d.csv", tmp_path / "s.json")
        assert back.n == 200
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.T, ds.T)
        assert np.array_equal(back.Y, ds.Y)
        # a second round trip is byte-identical
        save_csv(back, tmp_path / "d2.csv", tmp_path / "s2.json")
        assert (tmp_path / "d.csv").read_bytes() == (tmp_path / "d2.csv").read_bytes()

    def test_three_row_file(self, tmp_path, synth_small):
        ds = synth_small.subset(np.arange(3))
        save_csv(ds, tmp_path / "d.csv", tmp_path / "s.json")
        assert load_csv(tmp_path / "d.csv", tmp_path / "s.json").n == 3

    def test_bad_treatment_names_row(self, tmp_path, synth_small):
        ds = synth_small.subset(np.arange(10))
        save_csv(ds, tmp_path / "d.csv", tmp_path / "s.json")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        cells = lines[7].split(",")
        cells[12] = "2"  # T column
        lines[7] = ",".join(cells)
        (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueParseError) as err:
            load_csv(tmp_path / "d.csv", tmp_path / "s.json")
        assert err.value.row == 7
        assert "row 7" in str(err.value)

    def test_missing_column(self, tmp_path, synth_small):
        ds = synth_small.subset(np.arange(5))
        save_csv(ds, tmp_path / "d.csv", tmp_path / "s.json")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        lines[0] = lines[0].replace("x7", "x7_renamed")
        (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(MissingColumnError) as err:
            load_csv(tmp_path / "d.csv", tmp_path / "s.json")
        assert err.value.column == "x7"

    def test_empty_file(self, tmp_path, synth_small):
        save_csv(synth_small.subset(np.arange(2)), tmp_path / "d.csv", tmp_path / "s.json")
        (tmp_path / "empty.csv").write_text("")
        with pytest.raises(EmptyFileError):
            load_csv(tmp_path / "empty.csv", tmp_path / "s.json")

    def test_unparseable_cell_names_location(self, tmp_path, synth_small):
        ds = synth_small.subset(np.arange(6))
        save_csv(ds, tmp_path / "d.csv", tmp_path / "s.json")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        cells = lines[3].split(",")
        cells[4] = "not-a-number"  # x5, continuous
        lines[3] = ",".join(cells)
        (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueParseError) as err:
            load_csv(tmp_path / "d.csv", tmp_path / "s.json")
        assert err.value.row == 3
        assert err.value.column == "x5"


class TestSplit:
    def test_all_in_train(self, synth_small):
        train, audit, test = split(synth_small, (1.0, 0.0, 0.0), seed=0)
        assert train.n == synth_small.n
        assert audit.n == 0 and test.n == 0
        assert train.checksum() == synth_small.checksum()

    def test_exact_sizes_100(self, synth_small):
        ds = synth_small.subset(np.arange(100))
        train, audit, test = split(ds, (0.8, 0.1, 0.1), seed=0)
        assert (train.n, audit.n, test.n) == (80, 10, 10)

    def test_deterministic(self, synth_small):
        a = split(synth_small, (0.6, 0.2, 0.2), seed=9)
        b = split(synth_small, (0.6, 0.2, 0.2), seed=9)
        for x, y in zip(a, b):
            assert x.checksum() == y.checksum()

    def test_disjoint_exhaustive_stratified(self, synth_small):
        train, audit, test = split(synth_small, (0.6, 0.2, 0.2), seed=4)
        assert train.n + audit.n + test.n == synth_small.n
        total_t = synth_small.T.sum()
        assert train.T.sum() + audit.T.sum() + test.T.sum() == total_t
        overall = synth_small.T.mean()
        for part in (train, audit, test):
            assert abs(part.T.mean() - overall) <= 0.02

    def test_degenerate_fractions(self, synth_small):
        with pytest.raises(ValueError):
            split(synth_small, (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(ValueError):
            split(synth_small, (-0.2, 0.6, 0.6), seed=0)
