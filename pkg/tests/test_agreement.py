import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import alpha_oracle, matrix_to_rows
from privsense.agreement import (
    RatingMatrix,
    alpha_vs_reference,
    krippendorff_alpha,
    pairwise_alpha_suite,
    read_matrix_csv,
)
from privsense.errors import (
    FormatError,
    NoEligibleAnnotators,
    NoOverlap,
    TooFewValues,
    ZeroExpectedDisagreement,
)

METRICS = ("nominal", "ordinal", "interval")


def _matrix(grid):
    grid = np.asarray(grid, dtype=float)
    return RatingMatrix(
        item_ids=[f"i{k}" for k in range(grid.shape[0])],
        rater_ids=[f"r{k}" for k in range(grid.shape[1])],
        values=grid,
    )


class TestFixedPoints:
    @pytest.mark.parametrize("metric", METRICS)
    def test_perfect_agreement(self, metric):
        result = krippendorff_alpha(_matrix([[1, 1], [2, 2]]), metric)
        assert result.alpha == 1.0
        assert result.Do == 0.0

    def test_systematic_swap_nominal(self):
        # frozen from the pair-enumeration oracle
        rows = [[1, 2], [2, 1]]
        expected, do, de, n = alpha_oracle(rows, "nominal")
        assert expected == pytest.approx(-0.5, abs=1e-12)
        result = krippendorff_alpha(_matrix(rows), "nominal")
        assert result.alpha == pytest.approx(-0.5, abs=1e-12)
        assert result.Do == pytest.approx(do, abs=1e-12)
        assert result.De == pytest.approx(de, abs=1e-12)
        assert result.n_pairable == n == 4

    @pytest.mark.parametrize("metric", METRICS)
    def test_all_identical_is_undefined(self, metric):
        with pytest.raises(ZeroExpectedDisagreement):
            krippendorff_alpha(_matrix([[3, 3], [3, 3]]), metric)

    def test_too_few_values(self):
        grid = np.array([[1.0, np.nan], [np.nan, 2.0]])
        with pytest.raises(TooFewValues):
            krippendorff_alpha(_matrix(grid), "nominal")

    def test_published_reference_values(self):
        # classic 3-coder 15-unit worked example with missing cells
        data = {
            "A": "*    *    *    *    *    3    4    1    2    1    1    3    3    *    3",
            "B": "1    *    2    1    3    3    4    3    *    *    *    *    *    *    *",
            "C": "*    *    2    1    3    4    4    *    2    1    1    3    3    *    4",
        }
        grid = np.full((15, 3), np.nan)
        for j, row in enumerate(data.values()):
            for i, tok in enumerate(row.split()):
                if tok != "*":
                    grid[i, j] = float(tok)
        m = _matrix(grid)
        assert krippendorff_alpha(m, "nominal").alpha == pytest.approx(0.691, abs=5e-4)
        assert krippendorff_alpha(m, "interval").alpha == pytest.approx(0.811, abs=5e-4)

    def test_alpha_result_identity(self):
        result = krippendorff_alpha(_matrix([[1, 2], [4, 4], [3, 5]]), "interval")
        assert result.alpha == pytest.approx(1 - result.Do / result.De, abs=1e-12)


class TestOracleEquivalence:
    @pytest.mark.parametrize("metric", METRICS)
    def test_seeded_random_matrices(self, metric):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 60:
            n_items = int(rng.integers(2, 11))
            n_raters = int(rng.integers(2, 6))
            grid = rng.integers(1, 6, size=(n_items, n_raters)).astype(float)
            grid[rng.random((n_items, n_raters)) < 0.3] = np.nan
            rows = matrix_to_rows(grid)
            try:
                expected, do, de, n = alpha_oracle(rows, metric)
            except ValueError:
                continue
            result = krippendorff_alpha(_matrix(grid), metric)
            assert result.alpha == pytest.approx(expected, abs=1e-9)
            assert result.Do == pytest.approx(do, abs=1e-9)
            assert result.De == pytest.approx(de, abs=1e-9)
            checked += 1

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 10**6),
        metric=st.sampled_from(METRICS),
        missing=st.floats(0.0, 0.3),
    )
    def test_property_matches_oracle(self, seed, metric, missing):
        rng = np.random.default_rng(seed)
        n_items = int(rng.integers(2, 11))
        n_raters = int(rng.integers(2, 6))
        grid = rng.integers(1, 6, size=(n_items, n_raters)).astype(float)
        grid[rng.random((n_items, n_raters)) < missing] = np.nan
        try:
            expected, _, _, _ = alpha_oracle(matrix_to_rows(grid), metric)
        except ValueError:
            return
        assert krippendorff_alpha(_matrix(grid), metric).alpha == pytest.approx(
            expected, abs=1e-9
        )


class TestInvariances:
    def _random_grid(self, seed):
        rng = np.random.default_rng(seed)
        grid = rng.integers(1, 6, size=(8, 4)).astype(float)
        grid[rng.random((8, 4)) < 0.2] = np.nan
        return grid

    @pytest.mark.parametrize("metric", METRICS)
    def test_permutation_invariance(self, metric):
        grid = self._random_grid(1)
        rng = np.random.default_rng(2)
        shuffled = grid[rng.permutation(8)][:, rng.permutation(4)]
        a = krippendorff_alpha(_matrix(grid), metric).alpha
        b = krippendorff_alpha(_matrix(shuffled), metric).alpha
        assert a == pytest.approx(b, abs=1e-12)

    def test_interval_affine_invariance(self):
        grid = self._random_grid(3)
        a = krippendorff_alpha(_matrix(grid), "interval").alpha
        b = krippendorff_alpha(_matrix(2.0 * grid + 1.0), "interval").alpha
        assert a == pytest.approx(b, abs=1e-9)

    @pytest.mark.parametrize("metric", METRICS)
    def test_alpha_at_most_one_and_one_iff_no_disagreement(self, metric):
        for seed in range(20):
            grid = self._random_grid(seed)
            try:
                result = krippendorff_alpha(_matrix(grid), metric)
            except (TooFewValues, ZeroExpectedDisagreement):
                continue
            assert result.alpha <= 1.0
            assert (result.alpha == 1.0) == (result.Do == 0.0)

    @pytest.mark.parametrize("metric", METRICS)
    def test_duplicating_items_scales_only_the_chance_correction(self, metric):
        # Appending an exact copy of the matrix doubles every coincidence
        # count, but De carries a 1/(n-1) small-sample correction, so alpha
        # shifts by exactly (1 - a') = (1 - a) * (2n-1)/(2n-2) rather than
        # staying fixed; it converges to invariance as n grows.
        grid = self._random_grid(7)
        base = krippendorff_alpha(_matrix(grid), metric)
        doubled = np.vstack([grid, grid])
        dup = krippendorff_alpha(_matrix(doubled), metric)
        n = base.n_pairable
        assert 1 - dup.alpha == pytest.approx(
            (1 - base.alpha) * (2 * n - 1) / (2 * n - 2), rel=1e-9
        )
        assert dup.Do == pytest.approx(base.Do * (4 if metric == "ordinal" else 1), rel=1e-9)


class TestVsReference:
    def test_identity_gives_one(self):
        model = {"a": 1, "b": 3, "c": 5}
        assert alpha_vs_reference(model, dict(model), "interval").alpha == 1.0

    def test_reversed_extremes_negative(self):
        model = {"a": 1, "b": 5}
        reference = {"a": 5, "b": 1}
        rows = [[1, 5], [5, 1]]
        expected, _, _, _ = alpha_oracle(rows, "interval")
        result = alpha_vs_reference(model, reference, "interval")
        assert result.alpha == pytest.approx(expected, abs=1e-12)
        assert result.alpha < 0

    def test_non_integer_reference_supported(self):
        model = {"a": 1, "b": 2, "c": 4}
        reference = {"a": 1.25, "b": 2.5, "c": 3.75}
        result = alpha_vs_reference(model, reference, "interval")
        oracle, _, _, _ = alpha_oracle([[1, 1.25], [2, 2.5], [4, 3.75]], "interval")
        assert result.alpha == pytest.approx(oracle, abs=1e-9)

    def test_disjoint_items(self):
        with pytest.raises(NoOverlap):
            alpha_vs_reference({"a": 1}, {"b": 1}, "interval")

    def test_single_shared_item(self):
        with pytest.raises(NoOverlap):
            alpha_vs_reference({"a": 1, "b": 2}, {"b": 2, "c": 3}, "interval")


class TestPairwiseSuite:
    def test_identical_annotators(self):
        model = {"a": 1, "b": 3, "c": 5}
        humans = _matrix([[1, 1], [3, 3], [5, 5]])
        humans.item_ids = ["a", "b", "c"]
        suite = pairwise_alpha_suite(model, humans, "ordinal")
        assert suite.mean == 1.0
        assert suite.std == 0.0
        assert set(suite.per_rater) == {"r0", "r1"}

    def test_matches_per_pair_oracle(self):
        rng = np.random.default_rng(9)
        items = [f"t{i}" for i in range(12)]
        model = {item: int(rng.integers(1, 6)) for item in items}
        grid = rng.integers(1, 6, size=(12, 3)).astype(float)
        grid[rng.random((12, 3)) < 0.25] = np.nan
        humans = RatingMatrix(items, ["h0", "h1", "h2"], grid)
        suite = pairwise_alpha_suite(model, humans, "ordinal")
        for j, rater in enumerate(humans.rater_ids):
            rows = [
                [model[item], grid[i, j]]
                for i, item in enumerate(items)
                if grid[i, j] == grid[i, j]
            ]
            expected, _, _, _ = alpha_oracle(rows, "ordinal")
            assert suite.per_rater[rater] == pytest.approx(expected, abs=1e-9)
        values = np.array(list(suite.per_rater.values()))
        assert suite.mean == pytest.approx(values.mean())
        assert suite.std == pytest.approx(values.std())  # population std

    def test_annotator_with_one_item_skipped(self):
        model = {"a": 1, "b": 2, "c": 3}
        grid = np.array([[1.0, 1.0], [2.0, np.nan], [3.0, np.nan]])
        humans = RatingMatrix(["a", "b", "c"], ["full", "sparse"], grid)
        suite = pairwise_alpha_suite(model, humans, "ordinal")
        assert "sparse" in suite.skipped
        assert list(suite.per_rater) == ["full"]

    def test_no_eligible_annotators(self):
        model = {"a": 1}
        humans = RatingMatrix(["a", "b"], ["h"], np.array([[1.0], [2.0]]))
        with pytest.raises(NoEligibleAnnotators):
            pairwise_alpha_suite(model, humans, "ordinal")


class TestMatrixIO:
    def test_round_trip_long_csv(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            "item_id,rater_id,value\nt1,a,1\nt1,b,2\nt2,a,3\n",
            encoding="utf-8",
        )
        m = read_matrix_csv(p)
        assert m.item_ids == ["t1", "t2"]
        assert m.rater_ids == ["a", "b"]
        assert m.values[0, 0] == 1.0
        assert np.isnan(m.values[1, 1])

    def test_duplicate_cell_rejected(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("item_id,rater_id,value\nt1,a,1\nt1,a,2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_matrix_csv(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("foo,bar\n1,2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_matrix_csv(p)
