"""Tests for the design-quality mathematics."""

import math

import numpy as np
import pytest

from swarmdoe.designs import (
    DesignFileError,
    GridScorer,
    ModelSpec,
    SingularDesignError,
    build_model_matrix,
    g_efficiency,
    g_score,
    information_matrix,
    level_values,
    load_design_csv,
    make_grid,
    model_expand,
    normalize_bounds,
    p_count,
    relative_efficiency,
    save_design_csv,
    spv,
    validate_in_bounds,
)

SATURATED_1D = np.array([[-1.0], [0.0], [1.0]])


def random_nonsingular_design(rng, k, n_extra=4):
    """Uniform random design with n between p and p + n_extra, resampled
    in the (measure-zero) event of a singular draw."""
    spec = ModelSpec(k)
    n = spec.p + int(rng.integers(0, n_extra + 1))
    for _ in range(100):
        design = rng.uniform(-1.0, 1.0, (n, k))
        if information_matrix(design, spec).regular:
            return design, spec
    raise AssertionError("could not draw a nonsingular design")


class TestPCount:
    def test_known_counts(self):
        assert p_count(1) == 3
        assert p_count(2) == 6
        assert p_count(3) == 10
        assert p_count(4) == 15
        assert p_count(5) == 21

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            p_count(0)


class TestModelSpec:
    def test_p_property(self):
        assert ModelSpec(3).p == 10

    def test_term_order_three_factors(self):
        assert ModelSpec(3).term_names == (
            "1", "x1", "x2", "x3",
            "x1*x2", "x1*x3", "x2*x3",
            "x1^2", "x2^2", "x3^2",
        )

    def test_interaction_pairs_lexicographic(self):
        assert ModelSpec(4).interaction_pairs == (
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
        )

    def test_only_second_order(self):
        with pytest.raises(ValueError):
            ModelSpec(2, order=1)

    def test_rejects_bad_factor_count(self):
        with pytest.raises(ValueError):
            ModelSpec(0)


class TestModelExpand:
    def test_two_factor_point(self):
        out = model_expand([1.0, -1.0], ModelSpec(2))
        np.testing.assert_array_equal(out, [1.0, 1.0, -1.0, -1.0, 1.0, 1.0])

    def test_three_factor_point(self):
        x = [0.5, -1.0, 2.0]
        out = model_expand(x, ModelSpec(3))
        expected = [1.0, 0.5, -1.0, 2.0, -0.5, 1.0, -2.0, 0.25, 1.0, 4.0]
        np.testing.assert_allclose(out, expected, rtol=0, atol=0)

    def test_zero_point_keeps_only_intercept(self):
        np.testing.assert_array_equal(
            model_expand([0.0], ModelSpec(1)), [1.0, 0.0, 0.0]
        )

    def test_rejects_matrix_input(self):
        with pytest.raises(ValueError):
            model_expand([[0.0]], ModelSpec(1))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            model_expand([0.0, 0.0], ModelSpec(3))


class TestBuildModelMatrix:
    def test_saturated_one_factor(self):
        f = build_model_matrix(SATURATED_1D, ModelSpec(1))
        np.testing.assert_array_equal(
            f, [[1, -1, 1], [1, 0, 0], [1, 1, 1]]
        )

    def test_rows_match_pointwise_expansion(self):
        rng = np.random.default_rng(3)
        design = rng.uniform(-1, 1, (7, 3))
        spec = ModelSpec(3)
        f = build_model_matrix(design, spec)
        for i, row in enumerate(design):
            np.testing.assert_array_equal(f[i], model_expand(row, spec))

    def test_interaction_column_is_elementwise_product(self):
        rng = np.random.default_rng(6)
        design = rng.uniform(-1, 1, (6, 2))
        f = build_model_matrix(design, ModelSpec(2))
        np.testing.assert_array_equal(f[:, 3], design[:, 0] * design[:, 1])

    def test_rejects_vector_input(self):
        with pytest.raises(ValueError):
            build_model_matrix([0.0, 1.0], ModelSpec(2))


class TestInformationMatrix:
    def test_saturated_one_factor_values(self):
        info = information_matrix(SATURATED_1D, ModelSpec(1))
        np.testing.assert_array_equal(
            info.matrix, [[3, 0, 2], [0, 2, 0], [2, 0, 2]]
        )
        assert info.regular

    def test_underdetermined_design_is_singular(self):
        design = np.array([[0.1, 0.2], [0.5, -0.4], [-0.3, 0.9]])
        info = information_matrix(design, ModelSpec(2))
        assert not info.regular

    def test_symmetric_positive_semidefinite(self):
        rng = np.random.default_rng(11)
        design = rng.uniform(-1, 1, (9, 2))
        m = information_matrix(design, ModelSpec(2)).matrix
        np.testing.assert_array_equal(m, m.T)
        assert np.linalg.eigvalsh(m).min() >= -1e-9


class TestSpv:
    def test_interior_point_value(self):
        # Hand-derived for the design {-1, 0, 1}: 3 * f'(x) M^{-1} f(x)
        # at x = 0.5 equals 69/32.
        value = spv([0.5], SATURATED_1D, ModelSpec(1))
        assert value == pytest.approx(2.15625, abs=1e-12)

    def test_saturated_design_nodes_have_spv_n(self):
        # Saturated designs interpolate, so every design point has
        # leverage 1 and spv equal to the run count.
        spec = ModelSpec(1)
        for x in (-1.0, 0.0, 1.0):
            assert spv([x], SATURATED_1D, spec) == pytest.approx(3.0, abs=1e-9)

    def test_row_mean_equals_term_count(self):
        # Leverages sum to p for any least-squares fit.
        rng = np.random.default_rng(5)
        for k in (1, 2, 3):
            design, spec = random_nonsingular_design(rng, k)
            values = [spv(row, design, spec) for row in design]
            assert np.mean(values) == pytest.approx(spec.p, rel=1e-10)
            assert min(values) > 0.0

    def test_singular_design_raises(self):
        design = np.array([[0.0], [0.0], [0.0]])
        with pytest.raises(SingularDesignError):
            spv([0.5], design, ModelSpec(1))


class TestLevelValues:
    def test_five_levels_unit_interval(self):
        np.testing.assert_array_equal(
            level_values(-1.0, 1.0, 5), [-1.0, -0.5, 0.0, 0.5, 1.0]
        )

    def test_endpoints_exact_for_general_bounds(self):
        vals = level_values(0.3, 7.1, 9)
        assert vals[0] == 0.3 and vals[-1] == 7.1

    def test_fine_contains_coarse_bitwise(self):
        coarse = level_values(-1.0, 1.0, 5)
        for n in (9, 13, 17, 21):
            fine = level_values(-1.0, 1.0, n)
            stride = (n - 1) // 4
            np.testing.assert_array_equal(fine[::stride], coarse)

    def test_rejects_single_level(self):
        with pytest.raises(ValueError):
            level_values(-1.0, 1.0, 1)


class TestMakeGrid:
    def test_point_count(self):
        grid = make_grid(ModelSpec(2), 5)
        assert grid.n_points == 25
        assert grid.points.shape == (25, 2)
        assert grid.model_matrix.shape == (25, 6)

    def test_point_counts_higher_dimensions(self):
        assert make_grid(ModelSpec(4), 5).n_points == 625
        assert make_grid(ModelSpec(5), 5).n_points == 3125

    def test_row_major_order_last_factor_fastest(self):
        grid = make_grid(ModelSpec(2), 3)
        expected = [
            [-1, -1], [-1, 0], [-1, 1],
            [0, -1], [0, 0], [0, 1],
            [1, -1], [1, 0], [1, 1],
        ]
        np.testing.assert_array_equal(grid.points, expected)

    def test_respects_bounds(self):
        grid = make_grid(ModelSpec(2), 5, bounds=[(0.0, 2.0), (-3.0, 1.0)])
        np.testing.assert_array_equal(grid.levels[0], [0, 0.5, 1.0, 1.5, 2.0])
        np.testing.assert_array_equal(grid.levels[1], [-3, -2, -1, 0, 1])

    def test_rejects_degenerate_levels(self):
        with pytest.raises(ValueError):
            make_grid(ModelSpec(1), 1)


class TestGScore:
    def test_saturated_one_factor_attains_bound(self):
        spec = ModelSpec(1)
        score = g_score(SATURATED_1D, make_grid(spec, 5), spec)
        assert score.value == pytest.approx(3.0, abs=1e-9)
        assert score.n_spv_evals == 5
        assert score.argmax is not None

    def test_matches_pointwise_maximum(self):
        rng = np.random.default_rng(21)
        design, spec = random_nonsingular_design(rng, 2)
        grid = make_grid(spec, 5)
        score = g_score(design, grid, spec)
        pointwise = np.array([spv(x, design, spec) for x in grid.points])
        assert score.value == pytest.approx(pointwise.max(), rel=1e-12)
        np.testing.assert_array_equal(
            score.argmax, grid.points[int(np.argmax(pointwise))]
        )

    def test_singular_design_scores_infinite(self):
        spec = ModelSpec(2)
        design = np.zeros((4, 2))
        score = g_score(design, make_grid(spec, 5), spec)
        assert math.isinf(score.value)
        assert score.argmax is None
        assert score.n_spv_evals == 0

    def test_never_below_term_count(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            design, spec = random_nonsingular_design(rng, 2)
            score = g_score(design, make_grid(spec, 5), spec)
            assert score.value >= spec.p - 1e-9


class TestEfficiencies:
    def test_bound_gives_100(self):
        assert g_efficiency(3.0, 3) == pytest.approx(100.0)

    def test_infinite_score_gives_zero(self):
        assert g_efficiency(math.inf, 10) == 0.0

    def test_rejects_score_below_bound(self):
        with pytest.raises(ValueError):
            g_efficiency(2.9, 3)

    def test_relative_efficiency_arithmetic(self):
        assert relative_efficiency(71.09, 48.89) == pytest.approx(
            145.408, abs=5e-3
        )
        assert relative_efficiency(73.19, 73.02) == pytest.approx(
            100.233, abs=5e-3
        )
        assert relative_efficiency(50.0, 50.0) == pytest.approx(100.0)

    def test_relative_efficiency_rejects_bad_reference(self):
        with pytest.raises(ValueError):
            relative_efficiency(50.0, 0.0)
        with pytest.raises(ValueError):
            relative_efficiency(-1.0, 50.0)


class TestGridScorer:
    def test_batch_matches_single_design_scoring_bitwise(self):
        rng = np.random.default_rng(42)
        spec = ModelSpec(3)
        grid = make_grid(spec, 5)
        scorer = GridScorer(spec, grid)
        positions = rng.uniform(-1, 1, (40, 12, 3))
        batch = scorer(positions)
        for i in range(40):
            assert batch[i] == g_score(positions[i], grid, spec).value

    def test_singular_rows_score_infinite(self):
        spec = ModelSpec(2)
        scorer = GridScorer(spec, make_grid(spec, 5))
        rng = np.random.default_rng(0)
        positions = rng.uniform(-1, 1, (3, 8, 2))
        positions[1] = 0.0
        scores = scorer(positions)
        assert math.isinf(scores[1])
        assert np.isfinite(scores[[0, 2]]).all()

    def test_rejects_wrong_rank(self):
        spec = ModelSpec(2)
        scorer = GridScorer(spec, make_grid(spec, 5))
        with pytest.raises(ValueError):
            scorer(np.zeros((8, 2)))


class TestDesignCsv:
    def test_roundtrip_is_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        design = rng.uniform(-1, 1, (11, 3))
        path = tmp_path / "design.csv"
        save_design_csv(path, design)
        np.testing.assert_array_equal(load_design_csv(path), design)

    def test_header_names(self, tmp_path):
        path = tmp_path / "d.csv"
        save_design_csv(path, np.zeros((2, 4)))
        header = path.read_text().splitlines()[0]
        assert header == "x1,x2,x3,x4"

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n0,0\n")
        with pytest.raises(DesignFileError, match="header"):
            load_design_csv(path)

    def test_rejects_ragged_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x2\n0,0\n1\n")
        with pytest.raises(DesignFileError, match="row 3"):
            load_design_csv(path)

    def test_rejects_non_numeric_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x2\n0,oops\n")
        with pytest.raises(DesignFileError, match=r"row 2, column x2"):
            load_design_csv(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DesignFileError, match="empty"):
            load_design_csv(path)

    def test_rejects_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1\n")
        with pytest.raises(DesignFileError, match="no design rows"):
            load_design_csv(path)


class TestBounds:
    def test_default_bounds(self):
        lower, upper = normalize_bounds(None, 3)
        np.testing.assert_array_equal(lower, [-1, -1, -1])
        np.testing.assert_array_equal(upper, [1, 1, 1])

    def test_single_pair_broadcasts(self):
        lower, upper = normalize_bounds((0.0, 2.0), 2)
        np.testing.assert_array_equal(lower, [0, 0])
        np.testing.assert_array_equal(upper, [2, 2])

    def test_per_factor_pairs(self):
        lower, upper = normalize_bounds([(-1, 1), (0, 4)], 2)
        np.testing.assert_array_equal(lower, [-1, 0])
        np.testing.assert_array_equal(upper, [1, 4])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            normalize_bounds([(-1, 1)], 2)

    def test_rejects_inverted_interval(self):
        with pytest.raises(ValueError):
            normalize_bounds((1.0, -1.0), 2)

    def test_validate_in_bounds_accepts_interior(self):
        validate_in_bounds(np.array([[0.5, -0.5]]), None)

    def test_validate_in_bounds_names_offender(self):
        design = np.array([[0.0, 0.0], [0.0, 1.5]])
        with pytest.raises(ValueError, match=r"run 2, factor x2"):
            validate_in_bounds(design, None)
