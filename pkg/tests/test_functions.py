"""Builtin reference functions and the brute-force range oracle."""

import numpy as np
import pytest

from ciukit import (
    Instance,
    SchemaError,
    evaluate_range,
    generate_samples,
    get_function,
    oracle_range,
)
from ciukit.functions import BUILTIN_FUNCTIONS


class TestReferenceFunctions:
    def test_linear_formula(self):
        rf = get_function("linear")
        x = np.array([[0.7, 0.8], [0.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(rf.fn(x), [0.77, 0.0, 1.0])

    def test_or_truth_table(self):
        rf = get_function("or")
        x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=object)
        np.testing.assert_array_equal(rf.fn(x), [0, 1, 1, 1])

    def test_xor_truth_table(self):
        rf = get_function("xor")
        x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=object)
        np.testing.assert_array_equal(rf.fn(x), [0, 1, 1, 0])

    def test_unit_sum(self):
        rf = get_function("sum")
        x = np.array([[0, 0], [1, 1]], dtype=object)
        np.testing.assert_array_equal(rf.fn(x), [0, 2])

    def test_rules_plateaus(self):
        rf = get_function("rules")
        x = np.array([[0.1, 0.1], [0.7, 0.1], [0.1, 0.9], [0.7, 0.9]])
        np.testing.assert_allclose(rf.fn(x), [0.2, 0.6, 0.5, 0.7])

    def test_rules_output_range_matches_dense_scan(self):
        rf = get_function("rules")
        grid = np.stack(
            np.meshgrid(np.linspace(0, 1, 201), np.linspace(0, 1, 201)), axis=-1
        ).reshape(-1, 2)
        values = rf.fn(grid)
        assert values.min() == pytest.approx(rf.output_range[0])
        assert values.max() == pytest.approx(rf.output_range[1])

    def test_sombrero_origin_is_one(self):
        rf = get_function("sombrero")
        assert rf.fn(np.array([[0.0, 0.0]]))[0] == 1.0

    def test_sombrero_matches_numpy_sinc(self):
        rf = get_function("sombrero")
        rng = np.random.default_rng(3)
        x = rng.uniform(-10, 10, size=(200, 2))
        r = np.hypot(x[:, 0], x[:, 1])
        np.testing.assert_allclose(rf.fn(x), np.sinc(r / np.pi), atol=1e-12)

    def test_sombrero_output_range_constant(self):
        rf = get_function("sombrero")
        r = np.linspace(1e-9, 15, 2_000_001)
        sinc_min = (np.sin(r) / r).min()
        assert rf.output_range[0] == pytest.approx(sinc_min, abs=1e-9)
        assert rf.output_range[1] == 1.0

    def test_unknown_name(self):
        with pytest.raises(SchemaError, match="unknown builtin"):
            get_function("cubic")

    def test_every_builtin_declares_a_valid_utility(self):
        for rf in BUILTIN_FUNCTIONS.values():
            mapping = rf.utility()
            assert mapping.a != 0


class TestOracleRange:
    def test_linear_slice_closed_form(self):
        rf = get_function("linear")
        lo, hi = oracle_range(rf, Instance((0.7, 0.8)), [0])
        assert lo == pytest.approx(0.56, abs=1e-12)
        assert hi == pytest.approx(0.86, abs=1e-12)

    def test_boolean_slices_exhaustive(self):
        rf = get_function("xor")
        assert oracle_range(rf, Instance((1, 1)), [0]) == (0.0, 1.0)
        rf = get_function("or")
        assert oracle_range(rf, Instance((1, 1)), [0]) == (1.0, 1.0)

    def test_resolution_floor_enforced(self):
        rf = get_function("linear")
        with pytest.raises(SchemaError, match="resolution"):
            oracle_range(rf, Instance((0.5, 0.5)), [0], resolution=100)

    def test_resolution_convergence(self):
        """The dense scan is stable in its 3rd decimal across resolutions."""
        rf = get_function("sombrero")
        c = Instance((-7.5, -1.5))
        coarse = oracle_range(rf, c, [0], resolution=1000)
        fine = oracle_range(rf, c, [0], resolution=100_000)
        assert coarse[0] == pytest.approx(fine[0], abs=1e-3)
        assert coarse[1] == pytest.approx(fine[1], abs=1e-3)


class TestSampledVersusOracle:
    """Sampled ranges sit inside the oracle's and almost fill it."""

    def test_sampled_range_contained_and_nearly_complete(self):
        rf = get_function("sombrero")
        model = rf.model()
        context = Instance((-7.5, -1.5))
        for studied in ([0], [1]):
            lo, hi = oracle_range(rf, context, studied, resolution=100_000)
            width = hi - lo
            coverage = []
            for seed in range(30):
                samples = generate_samples(rf.space, context, studied, 100, seed)
                ymin, ymax, _ = evaluate_range(model, samples)
                # containment up to the oracle's own grid resolution
                assert ymin >= lo - 1e-6
                assert ymax <= hi + 1e-6
                coverage.append((ymax - ymin) / width)
            assert np.mean(coverage) >= 0.99
