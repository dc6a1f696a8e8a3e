import numpy as np
import pytest

from preimage.dataset import PointCloud, local_fill_distance
from preimage.embedding import Embedding, embedding_from_kernel, laplacian_eigenmaps
from preimage.kernels import gaussian, kernel_matrix, sparsify
from preimage.nystrom import (
    ZeroDegreeError,
    discontinuity_scan,
    nystrom_extend,
    nystrom_via_rbf,
    scan_to_csv,
)


def small_setup(rng, n=30, dim=3, d=3, eps=None):
    cloud = PointCloud(rng.uniform(0.0, 1.0, size=(n, dim)))
    spec = gaussian(eps if eps is not None else 1.0 / local_fill_distance(cloud))
    emb = laplacian_eigenmaps(cloud, spec, d=d)
    return cloud, spec, emb


class TestExtend:
    def test_reproduces_training_values(self, rng):
        cloud, spec, emb = small_setup(rng)
        for l in range(4):
            for i in (0, 7, 29):
                res = nystrom_extend(emb, cloud, spec, cloud.points[i], l)
                assert abs(res.value - emb.eigvecs[i, l]) < 1e-8
                assert res.degree_at_query == pytest.approx(emb.degrees[i])
                assert res.path == "nystrom_direct"

    def test_two_point_hand_formula(self):
        # two nodes at distance r: quadrature terms written out by hand
        r, eps = 0.8, 1.1
        cloud = PointCloud([[0.0], [r]])
        spec = gaussian(eps)
        emb = laplacian_eigenmaps(cloud, spec, d=1)
        b = np.exp(-(eps * r) ** 2)
        lam1 = (1.0 - b) / (1.0 + b)
        query = np.array([0.25 * r])
        k1 = np.exp(-(eps * 0.25 * r) ** 2)
        k2 = np.exp(-(eps * 0.75 * r) ** 2)
        dq = k1 + k2
        s = 1.0 / np.sqrt(2.0)
        hand = (k1 * s - k2 * s) / np.sqrt(dq * (1.0 + b)) / lam1
        got = nystrom_extend(emb, cloud, spec, query, 1)
        assert got.value == pytest.approx(hand, rel=1e-12)
        # midway the antisymmetric eigenvector must extend to zero
        mid = nystrom_extend(emb, cloud, spec, np.array([0.5 * r]), 1)
        assert abs(mid.value) < 1e-12

    def test_trivial_eigenvector_extension_keeps_sign(self, rng):
        cloud, spec, emb = small_setup(rng)
        sign = np.sign(emb.eigvecs[0, 0])
        for _ in range(20):
            q = rng.uniform(-0.2, 1.2, size=3)
            assert np.sign(nystrom_extend(emb, cloud, spec, q, 0).value) == sign

    def test_zero_eigenvalue_rejected(self, rng):
        cloud, spec, emb = small_setup(rng, d=2)
        broken = Embedding(
            coords=emb.coords,
            eigvals=np.array([1.0, 0.5, 0.0]),
            eigvecs=emb.eigvecs,
            degrees=emb.degrees,
            spec=spec,
            source=cloud,
        )
        with pytest.raises(ValueError, match="zero"):
            nystrom_extend(broken, cloud, spec, np.zeros(3), 2)

    def test_zero_degree_at_faraway_query(self, rng):
        cloud, spec, emb = small_setup(rng, eps=40.0)
        with pytest.raises(ZeroDegreeError, match="zero degree"):
            nystrom_extend(emb, cloud, spec, np.full(3, 1e6), 1)

    def test_defaults_from_embedding(self, rng):
        cloud, spec, emb = small_setup(rng)
        q = rng.uniform(size=3)
        a = nystrom_extend(emb, None, None, q, 1)
        b = nystrom_extend(emb, cloud, spec, q, 1)
        assert a.value == b.value


class TestRbfForm:
    def test_agrees_with_direct_on_random_draws(self):
        for draw in range(20):
            rng = np.random.default_rng(500 + draw)
            cloud = PointCloud(rng.uniform(size=(40, 3)))
            spec = gaussian(1.0 / local_fill_distance(cloud))
            emb = laplacian_eigenmaps(cloud, spec, d=4)
            l = int(rng.integers(0, 5))
            q = rng.uniform(0.1, 0.9, size=3)
            a = nystrom_extend(emb, cloud, spec, q, l)
            b = nystrom_via_rbf(emb, cloud, spec, q, l)
            assert abs(a.value - b.value) <= 1e-8 * max(abs(a.value), abs(b.value))
            assert a.degree_at_query == pytest.approx(b.degree_at_query)
            assert b.path == "rbf_form"

    def test_reproduces_training_values(self, rng):
        cloud, spec, emb = small_setup(rng)
        for l in (0, 2):
            res = nystrom_via_rbf(emb, cloud, spec, cloud.points[4], l)
            assert abs(res.value - emb.eigvecs[4, l]) < 1e-8


class TestDiscontinuityScan:
    def segment(self):
        return (np.array([0.05, 0.05]), np.array([0.95, 0.95]))

    def test_zero_threshold_matches_full(self, rng):
        cloud, spec, emb = small_setup(rng, n=40, dim=2, d=2)
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 50, threshold=0.0)
        assert np.array_equal(profile.values_full, profile.values_sparse)
        assert profile.delta_max_full == profile.delta_max_sparse
        assert not profile.failures

    def test_two_steps(self, rng):
        cloud, spec, emb = small_setup(rng, n=40, dim=2, d=2)
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 2, threshold=0.0)
        assert profile.ts.tolist() == [0.0, 1.0]
        assert profile.delta_max_full == pytest.approx(abs(profile.values_full[1] - profile.values_full[0]))

    def test_steps_validation(self, rng):
        cloud, spec, emb = small_setup(rng, n=20, dim=2, d=2)
        with pytest.raises(ValueError, match="steps"):
            discontinuity_scan(emb, cloud, spec, self.segment(), 1, threshold=0.0)
        with pytest.raises(ValueError, match="exactly one"):
            discontinuity_scan(emb, cloud, spec, self.segment(), 5)

    def test_thresholded_profile_jumps(self):
        rng = np.random.default_rng(7)
        cloud = PointCloud(rng.uniform(size=(120, 2)))
        spec = gaussian(0.5 / local_fill_distance(cloud))
        kmat = sparsify(kernel_matrix(spec, cloud), threshold=0.4)
        emb = embedding_from_kernel(kmat, 2, spec=spec, source=cloud)
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 400, threshold=0.4)
        assert profile.delta_max_sparse > 3.0 * profile.delta_max_full
        assert not profile.diagnostic_only

    def test_knn_truncation_flagged_diagnostic(self, rng):
        cloud, spec, emb = small_setup(rng, n=40, dim=2, d=2)
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 30, knn=5)
        assert profile.diagnostic_only

    def test_zero_degree_recorded_not_fatal(self, rng):
        cloud, spec, emb = small_setup(rng, n=40, dim=2, d=2)
        # a threshold above the kernel maximum empties every query vector
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 10, threshold=1.5)
        assert len(profile.failures) == 10
        assert np.all(np.isnan(profile.values_sparse))
        assert np.isnan(profile.delta_max_sparse)
        assert np.all(np.isfinite(profile.values_full))

    def test_csv_schema(self, rng, tmp_path):
        cloud, spec, emb = small_setup(rng, n=30, dim=2, d=2)
        profile = discontinuity_scan(emb, cloud, spec, self.segment(), 5, threshold=0.1)
        path = tmp_path / "scan.csv"
        scan_to_csv(profile, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,t,value_full,value_sparse"
        assert len(lines) == 6

    def test_full_profile_refines_with_steps(self, rng):
        cloud, spec, emb = small_setup(rng, n=50, dim=2, d=2)
        coarse = discontinuity_scan(emb, cloud, spec, self.segment(), 200, threshold=0.0)
        fine = discontinuity_scan(emb, cloud, spec, self.segment(), 400, threshold=0.0)
        assert fine.delta_max_full <= coarse.delta_max_full / 1.5
