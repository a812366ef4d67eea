import numpy as np
import pytest

from gestalt_probe import (
    CentroidModel,
    GestaltParam,
    Item,
    Principle,
    Raster,
    ValidationSet,
    accuracy,
    fit_centroid,
    g_knee,
    g_star_argmax,
    phi,
    run_sweep,
)
from gestalt_probe.engine import SweepPoint, SweepResult
from gestalt_probe.errors import ClassifierError, GestaltError


class FixedClassifier:
    """Returns a canned score vector per item, keyed by image content."""

    def __init__(self, class_count, table):
        self.class_count = class_count
        self.table = table

    def scores(self, img):
        return np.asarray(self.table[img.pixels.tobytes()])


def tiny_set(labels, size=4):
    items = []
    for i, lbl in enumerate(labels):
        px = np.full((size, size), i * 10, dtype=np.uint8)
        items.append(Item(Raster(px), lbl))
    return ValidationSet(tuple(items), class_count=max(labels) + 1 if labels else 1)


class TestAccuracy:
    def test_three_of_four(self):
        vset = tiny_set([0, 1, 2, 1])
        table = {
            it.image.pixels.tobytes(): np.eye(3)[lbl]
            for it, lbl in zip(vset.items, [0, 1, 2, 0])
        }
        clf = FixedClassifier(3, table)
        assert accuracy(clf, vset) == 0.75

    def test_oracle_classifier(self):
        vset = tiny_set([0, 1, 2, 1, 0])

        class Oracle:
            class_count = 3

            def scores(self, img):
                # recover the label from the constant pixel value
                i = int(img.pixels[0, 0]) // 10
                return np.eye(3)[[0, 1, 2, 1, 0][i]]

        assert accuracy(Oracle(), vset) == 1.0

    def test_uniform_scores_tie_break(self):
        vset = tiny_set([1, 2, 1])

        class Uniform:
            class_count = 3

            def scores(self, img):
                return np.full(3, 1 / 3)

        assert accuracy(Uniform(), vset) == 0.0

    def test_permutation_invariant(self, digits100):
        model = fit_centroid(digits100)
        base = accuracy(model, digits100)
        rng = np.random.default_rng(8)
        perm = rng.permutation(len(digits100.items))
        shuffled = ValidationSet(
            tuple(digits100.items[i] for i in perm), digits100.class_count
        )
        assert accuracy(model, shuffled) == base

    def test_classifier_failure_aborts_with_index(self):
        vset = tiny_set([0, 1])

        class Broken:
            class_count = 2

            def scores(self, img):
                raise RuntimeError("boom")

        with pytest.raises(ClassifierError, match="item 0"):
            accuracy(Broken(), vset)


class TestPhi:
    def test_reference_drop(self):
        assert phi(0.99, 0.80) == pytest.approx(0.19)

    def test_zero_when_equal(self):
        for h in (0.0, 0.37, 1.0):
            assert phi(h, h) == 0.0

    def test_sign_convention(self):
        assert phi(0.6, 0.7) == pytest.approx(-0.1)

    def test_antisymmetric(self):
        rng = np.random.default_rng(9)
        for a, b in rng.random((100, 2)):
            assert phi(a, b) == -phi(b, a)


def fake_result(phis, gs=None, principle=Principle.CLOSURE):
    gs = gs if gs is not None else list(range(0, 10 * len(phis), 10))
    points = tuple(
        SweepPoint(GestaltParam(principle, g), 1.0 - p, p, 1.0 - p)
        for g, p in zip(gs, phis)
    )
    return SweepResult(principle, tuple(pt.param for pt in points), 1.0, 1.0, points, 0)


class TestGStar:
    def test_closure_reference_series(self):
        # drops derived from the reference accuracy series 0.99/0.94/0.80/0.54
        res = fake_result([0.0, 0.05, 0.19, 0.45], gs=[0, 10, 30, 40])
        assert g_star_argmax(res).value == 40

    def test_constant_series_first(self):
        res = fake_result([0.1, 0.1, 0.1])
        assert g_star_argmax(res).value == 0

    def test_single_point(self):
        res = fake_result([0.3], gs=[25])
        assert g_star_argmax(res).value == 25

    def test_matches_brute_force_on_random_series(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            phis = rng.uniform(-0.5, 1.0, n).tolist()
            res = fake_result(phis)
            got = g_star_argmax(res).value
            best = max(phis)
            expect = min(g for g, p in zip(range(0, 10 * n, 10), phis) if p == best)
            assert got == expect

    def test_all_failed_rejected(self):
        pt = SweepPoint(
            GestaltParam(Principle.CLOSURE, 10), float("nan"), float("nan"),
            float("nan"), True, "x",
        )
        res = SweepResult(Principle.CLOSURE, (pt.param,), 1.0, 1.0, (pt,), 0)
        with pytest.raises(GestaltError):
            g_star_argmax(res)


class TestGKnee:
    def test_closure_reference_threshold(self):
        res = fake_result([0.0, 0.05, 0.12, 0.19, 0.45], gs=[0, 10, 20, 30, 40])
        assert g_knee(res, 0.2).value == 30

    def test_tau_above_everything(self):
        res = fake_result([0.0, 0.1, 0.15])
        assert g_knee(res, 0.5).value == 20

    def test_first_point_exceeds(self):
        res = fake_result([0.3, 0.1])
        assert g_knee(res, 0.2) is None


class TestCentroidModel:
    def test_single_item_per_class(self):
        vset = tiny_set([0, 1, 2])
        model = fit_centroid(vset)
        for it in vset.items:
            flat = it.image.pixels.ravel() / 255.0
            assert np.allclose(model.centroids[it.label], flat)

    def test_mean_of_two(self):
        a = Item(Raster(np.zeros((2, 2), dtype=np.uint8)), 0)
        b = Item(Raster(np.full((2, 2), 255, dtype=np.uint8)), 0)
        c = Item(Raster(np.full((2, 2), 7, dtype=np.uint8)), 1)
        model = fit_centroid(ValidationSet((a, b, c), 2))
        assert np.allclose(model.centroids[0], 0.5)

    def test_missing_class_named(self):
        vset = ValidationSet(tiny_set([0, 1, 1]).items, class_count=3)
        with pytest.raises(GestaltError, match="2"):
            fit_centroid(vset)

    def test_scores_sum_to_one(self, digits100):
        model = fit_centroid(digits100)
        for it in digits100.items[:20]:
            s = model.scores(it.image)
            assert abs(float(s.sum()) - 1.0) <= 1e-6

    def test_equidistant_tie(self):
        vset = tiny_set([0, 1])
        model = fit_centroid(vset)
        mid = Raster(np.full((4, 4), 5, dtype=np.uint8))
        s = model.scores(mid)
        assert s[0] == pytest.approx(s[1])
        assert int(np.argmax(s)) == 0

    def test_high_temperature_uniform_limit(self, digits100):
        model = fit_centroid(digits100, temperature=1e9)
        s = model.scores(digits100.items[0].image)
        assert np.allclose(s, 0.1, atol=1e-6)

    def test_dimension_mismatch(self):
        model = fit_centroid(tiny_set([0, 1]))
        with pytest.raises(GestaltError):
            model.scores(Raster(np.zeros((3, 3), dtype=np.uint8)))

    def test_argmax_invariant_under_distance_shift(self):
        # adding a constant to all distances only rescales the softmax
        m = CentroidModel(np.array([[0.0, 0.0], [1.0, 1.0]]), 1.0)
        img = Raster(np.array([[40, 40]], dtype=np.uint8))
        base = np.argmax(m.scores(img))
        shifted = CentroidModel(m.centroids, 1.0)
        d = np.linalg.norm(m.centroids - img.pixels.ravel() / 255.0, axis=1)
        z = -(d + 5.0)
        z -= z.max()
        assert np.argmax(np.exp(z)) == base


class TestRunSweep:
    def test_identity_grid_single_point(self, digits100):
        model = fit_centroid(digits100)
        grid = [GestaltParam(Principle.CLOSURE, 0)]
        res = run_sweep(model, digits100, Principle.CLOSURE, grid, seed=3)
        assert res.points[0].phi == 0.0

    def test_closure_monotone_decline(self, digits200):
        from scipy.stats import spearmanr

        model = fit_centroid(digits200)
        grid = [GestaltParam(Principle.CLOSURE, v) for v in range(0, 91, 10)]
        res = run_sweep(model, digits200, Principle.CLOSURE, grid, seed=7)
        hs = [pt.h for pt in res.points]
        rho = spearmanr([pt.param.value for pt in res.points], hs).statistic
        assert rho <= -0.8

    def test_symmetry_peaks(self, symmetric20):
        model = fit_centroid(symmetric20)
        grid = [GestaltParam(Principle.SYMMETRY, v) for v in (0, 90, 180, 270, 360)]
        res = run_sweep(model, symmetric20, Principle.SYMMETRY, grid, seed=1)
        by_g = {pt.param.value: pt.h for pt in res.points}
        assert abs(by_g[0] - by_g[360]) <= 1e-9
        assert by_g[0] >= by_g[90]
        assert by_g[180] >= by_g[90]

    def test_deterministic_repeat(self, digits100):
        model = fit_centroid(digits100)
        grid = [GestaltParam(Principle.CLOSURE, v) for v in (0, 30, 60)]
        a = run_sweep(model, digits100, Principle.CLOSURE, grid, seed=42)
        b = run_sweep(model, digits100, Principle.CLOSURE, grid, seed=42)
        assert a == b

    def test_grid_principle_mismatch(self, digits100):
        model = fit_centroid(digits100)
        with pytest.raises(GestaltError):
            run_sweep(
                model, digits100, Principle.CLOSURE,
                [GestaltParam(Principle.SYMMETRY, 5)], seed=0,
            )

    def test_similarity_needs_masks(self, digits100):
        model = fit_centroid(digits100)
        with pytest.raises(GestaltError, match="mask"):
            run_sweep(
                model, digits100, Principle.SIMILARITY,
                [GestaltParam(Principle.SIMILARITY, 90)], seed=0,
            )

    def test_figure_ground_sweep(self, scenes10):
        model = fit_centroid(scenes10)
        grid = [GestaltParam(Principle.FIGURE_GROUND, n) for n in range(1, 11)]
        res = run_sweep(model, scenes10, Principle.FIGURE_GROUND, grid, seed=2)
        assert res.points[-1].phi == 0.0  # keep_n = all classes is identity
        assert len(res.points) == 10
