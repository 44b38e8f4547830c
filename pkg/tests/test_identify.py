import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netresp.identify import (
    congruence,
    subscale_target,
    svd_identify,
    target_rotate,
    variance_explained,
)


def simple_pattern(rng=None, noise=0.0):
    """16 x 3 loading matrix with three clean subscales of 5, 7 and 4 items."""
    labels = np.repeat([0, 1, 2], [5, 7, 4])
    loadings = np.zeros((16, 3))
    highs = np.array(
        [0.9, 0.8, 0.85, 0.75, 0.95, 0.8, 0.9, 0.7, 0.85, 0.75, 0.9, 0.8, 0.85, 0.9, 0.8, 0.75]
    )
    loadings[np.arange(16), labels] = highs
    if noise and rng is not None:
        loadings = loadings + noise * rng.standard_normal(loadings.shape)
    return loadings, labels


class TestSvdIdentify:
    def test_rank_one_exact(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(9)
        v = rng.standard_normal(7)
        product = np.outer(u, v)
        est = svd_identify(product, 1)
        assert np.max(np.abs(est.reconstruction() - product)) < 1e-12

    def test_reconstruction_matches_truncated_svd(self):
        rng = np.random.default_rng(1)
        mat = rng.standard_normal((12, 9))
        for rank in (1, 3, 5):
            est = svd_identify(mat, rank)
            u, s, vt = np.linalg.svd(mat)
            oracle = (u[:, :rank] * s[:rank]) @ vt[:rank]
            assert np.max(np.abs(est.reconstruction() - oracle)) < 1e-9
            assert np.allclose(est.singular_values, s[:rank])

    def test_invariant_to_nonsingular_mixing(self):
        rng = np.random.default_rng(2)
        u = rng.standard_normal((10, 3))
        v = rng.standard_normal((10, 3))
        o = rng.standard_normal((3, 3)) + 2.5 * np.eye(3)
        a = svd_identify(u @ v.T, 3)
        b = svd_identify((u @ o) @ (v @ np.linalg.inv(o).T).T, 3)
        assert np.max(np.abs(a.reconstruction() - b.reconstruction())) < 1e-8
        assert np.allclose(a.singular_values, b.singular_values, atol=1e-8)
        assert np.max(np.abs(a.left - b.left)) < 1e-7

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            svd_identify(np.zeros((4, 4)), 1)

    def test_rank_gap_warning(self):
        with pytest.warns(RuntimeWarning):
            svd_identify(np.eye(3), 1)

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        mat = rng.standard_normal((8, 6))
        est = svd_identify(mat, 2)
        for j in range(2):
            assert est.left[np.argmax(np.abs(est.left[:, j])), j] > 0

    def test_scaled_split(self):
        rng = np.random.default_rng(4)
        mat = rng.standard_normal((8, 8))
        est = svd_identify(mat, 2)
        # symmetric split: left and right columns carry equal norms
        assert np.allclose(
            np.linalg.norm(est.left, axis=0), np.linalg.norm(est.right, axis=0)
        )


class TestTargetRotate:
    def test_already_matching_pattern(self):
        loadings, labels = simple_pattern()
        target = subscale_target(labels)
        res = target_rotate(loadings, target)
        assert res.criterion < 1e-20
        assert np.max(np.abs(np.abs(res.rotation_matrix) - np.eye(3))) < 1e-8
        assert np.max(np.abs(res.rotated_loadings - loadings)) < 1e-8

    def test_unmixes_random_nonsingular_transform(self):
        rng = np.random.default_rng(5)
        clean, labels = simple_pattern()
        target = subscale_target(labels)
        for _ in range(5):
            mix = np.eye(3) + 0.45 * rng.standard_normal((3, 3))
            mix /= np.linalg.norm(mix, axis=0, keepdims=True)
            res = target_rotate(clean @ mix, target)
            assert np.max(np.abs(res.rotated_loadings - clean)) < 1e-6
            assert res.criterion < 1e-12

    def test_rotation_inverse_unit_columns(self):
        rng = np.random.default_rng(6)
        clean, labels = simple_pattern(rng, noise=0.05)
        res = target_rotate(clean, subscale_target(labels))
        inv = np.linalg.inv(res.rotation_matrix)
        assert np.allclose(np.linalg.norm(inv, axis=0), 1.0, atol=1e-8)

    def test_criterion_not_worse_than_identity(self):
        rng = np.random.default_rng(7)
        loadings, labels = simple_pattern(rng, noise=0.25)
        target = subscale_target(labels)
        res = target_rotate(loadings, target)
        identity_criterion = float((loadings[target == 0] ** 2).sum())
        assert res.criterion <= identity_criterion + 1e-12

    def test_criterion_path_monotone(self):
        rng = np.random.default_rng(8)
        loadings, labels = simple_pattern(rng, noise=0.2)
        mix = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
        res = target_rotate(loadings @ mix, subscale_target(labels))
        assert np.all(np.diff(res.criterion_path) <= 1e-12)

    def test_noisy_pattern_rows_dominated_by_own_subscale(self):
        rng = np.random.default_rng(9)
        clean, labels = simple_pattern(rng, noise=0.06)
        mix = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
        res = target_rotate(clean @ mix, subscale_target(labels))
        assert np.array_equal(np.argmax(np.abs(res.rotated_loadings), axis=1), labels)

    def test_orthogonal_variant(self):
        rng = np.random.default_rng(10)
        clean, labels = simple_pattern()
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        res = target_rotate(clean @ q, subscale_target(labels), orthogonal=True)
        assert np.allclose(res.rotation_matrix @ res.rotation_matrix.T, np.eye(3), atol=1e-8)
        assert res.criterion < 1e-10

    def test_needs_two_factors(self):
        with pytest.raises(ValueError):
            target_rotate(np.ones((4, 1)), np.ones((4, 1)))


class TestCongruence:
    def test_self_congruence_unit_diagonal(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((10, 3))
        c = congruence(a, a)
        assert np.allclose(np.diag(c), 1.0, atol=1e-12)

    def test_orthogonal_columns(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        c = congruence(a[:, :1], a[:, 1:])
        assert c[0, 0] == 0.0

    def test_perturbed_copy_regime(self):
        rng = np.random.default_rng(12)
        base = rng.standard_normal((16, 3))
        base /= np.linalg.norm(base, axis=0, keepdims=True)
        noisy = base + 0.05 * rng.standard_normal(base.shape)
        c = congruence(base, noisy)
        assert np.all(np.diag(c) > 0.94)

    def test_zero_column_rejected(self):
        with pytest.raises(ValueError):
            congruence(np.zeros((4, 2)), np.ones((4, 2)))

    @given(st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=25, deadline=None)
    def test_positive_rescale_invariance_and_bounds(self, s1, s2):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((8, 2))
        b = rng.standard_normal((8, 3))
        base = congruence(a, b)
        scaled = congruence(a * s1, b * s2)
        assert np.allclose(base, scaled, atol=1e-10)
        assert np.all(np.abs(base) <= 1.0 + 1e-12)


class TestVarianceExplained:
    def test_rank_one(self):
        rng = np.random.default_rng(14)
        product = np.outer(rng.standard_normal(6), rng.standard_normal(5))
        props = variance_explained(product, 4)
        assert props[0] == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(props[1:], 0.0, atol=1e-12)

    def test_known_singular_values(self):
        # singular values (2, 1, 1) give proportions (4/6, 1/6, 1/6)
        u, _ = np.linalg.qr(np.random.default_rng(15).standard_normal((5, 3)))
        v, _ = np.linalg.qr(np.random.default_rng(16).standard_normal((4, 3)))
        product = u @ np.diag([2.0, 1.0, 1.0]) @ v.T
        props = variance_explained(product, 3)
        assert np.allclose(props, [4 / 6, 1 / 6, 1 / 6], atol=1e-10)

    def test_sums(self):
        rng = np.random.default_rng(17)
        mat = rng.standard_normal((7, 5))
        assert variance_explained(mat, 3).sum() <= 1.0 + 1e-12
        assert variance_explained(mat, 5).sum() == pytest.approx(1.0, abs=1e-10)

    def test_zero_matrix(self):
        with pytest.raises(ValueError):
            variance_explained(np.zeros((3, 3)), 2)
