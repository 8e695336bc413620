"""fBM environments: covariance, both generators, interpolation and CSV I/O."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scaling_lab.fbm_env import (CHOLESKY_MAX_POINTS, FbmError, FbmPath, GridSpec, eval_path, fbm_covariance,
                                 fbm_covariance_matrix, fgn_autocovariance, load_path_csv,
                                 sample_fbm_cholesky, sample_fbm_cholesky_batch, sample_fbm_circulant,
                                 sample_fbm_circulant_batch, save_path_csv)

hursts = st.floats(0.02, 0.98)
coords = st.floats(-50, 50, allow_nan=False)


def cov_z_scores(samples, C):
    """|sample covariance - C| / standard error, for centred Gaussian samples."""
    N = samples.shape[0]
    S = samples.T @ samples / N
    se = np.sqrt((np.outer(np.diag(C), np.diag(C)) + C**2) / N)
    mask = se > 0
    return np.abs(S - C)[mask] / se[mask]


class TestCovariance:
    @given(hursts)
    def test_unit_diagonal(self, H):
        assert fbm_covariance(1.0, 1.0, H) == pytest.approx(1.0)

    @given(coords, hursts)
    def test_zero_anchor(self, x, H):
        assert fbm_covariance(x, 0.0, H) == 0.0

    def test_opposite_sides_of_brownian_motion(self):
        assert fbm_covariance(1.0, -1.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    @given(coords, coords, hursts)
    def test_symmetric_and_diagonal(self, x, y, H):
        assert fbm_covariance(x, y, H) == fbm_covariance(y, x, H)
        assert fbm_covariance(x, x, H) == pytest.approx(abs(x) ** (2 * H), rel=1e-12, abs=1e-300)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=6, unique=True), hursts)
    def test_matrix_is_psd(self, pts, H):
        C = fbm_covariance_matrix(pts, H)
        scale = max(1.0, np.abs(C).max())
        assert np.linalg.eigvalsh(C).min() > -1e-9 * scale


class TestGrid:
    def test_zero_must_be_node(self):
        with pytest.raises(ValueError):
            GridSpec(-1.0, 2.0, 5)

    def test_symmetric_bumps_even_count(self):
        g = GridSpec.symmetric(9.0, 200_000)
        assert g.num_points == 200_001
        assert g.nodes()[g.zero_index] == 0.0

    def test_snapped_has_zero_node(self):
        g = GridSpec.snapped(-1.0, 2.0, 5)
        assert g.num_points >= 5
        assert abs(g.nodes()[g.zero_index]) < 1e-12

    @pytest.mark.parametrize("bad", [(1.0, 2.0, 5), (-1.0, 1.0, 2), (-1.0, -0.5, 5)])
    def test_rejects_degenerate(self, bad):
        with pytest.raises(ValueError):
            GridSpec(*bad)


class TestCholesky:
    def test_three_node_brownian_sides_independent(self):
        g = GridSpec(-1.0, 1.0, 3)
        paths = sample_fbm_cholesky_batch(g, 0.5, 100_000, seed=4)
        assert np.all(paths[:, 1] == 0.0)
        C = np.cov(paths[:, [0, 2]].T)
        print("covariance of the two sides", C)
        assert np.allclose(np.diag(C), 1.0, atol=0.02)
        assert abs(C[0, 1]) < 4 / math.sqrt(100_000)

    def test_covariance_matches_formula(self):
        g = GridSpec(-1.0, 1.0, 5)  # nodes -1, -0.5, 0, 0.5, 1
        H = 0.75
        paths = sample_fbm_cholesky_batch(g, H, 100_000, seed=5)
        z = cov_z_scores(paths, fbm_covariance_matrix(g.nodes(), H))
        print("max |z|", z.max())
        assert z.max() < 4.0

    def test_deterministic(self):
        g = GridSpec(-2.0, 3.0, 11)
        a = sample_fbm_cholesky(g, 0.3, seed=9)
        b = sample_fbm_cholesky(g, 0.3, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            sample_fbm_cholesky(GridSpec(-1.0, 1.0, CHOLESKY_MAX_POINTS + 3), 0.5, seed=0)


class TestCirculant:
    def test_brownian_increments_uncorrelated(self):
        g = GridSpec(-500.0, 500.0, 1_000_001)
        p = sample_fbm_circulant(g, 0.5, seed=3)
        inc = np.diff(p.values)
        print("increment variance", inc.var(), "spacing", g.spacing)
        assert inc.var() == pytest.approx(g.spacing, rel=0.01)
        r1 = np.corrcoef(inc[:-1], inc[1:])[0, 1]
        assert abs(r1) < 3 / math.sqrt(inc.size)

    def test_lag_one_correlation_persistent(self):
        H = 0.75
        g = GridSpec(-1000.0, 1000.0, 2_000_001)
        inc = np.diff(sample_fbm_circulant(g, H, seed=8).values)
        r1 = np.corrcoef(inc[:-1], inc[1:])[0, 1]
        expect = 2 ** (2 * H - 1) - 1
        # long-range dependence inflates the standard error well above 1/sqrt(N)
        print("lag-1 correlation", r1, "expected", expect)
        assert r1 == pytest.approx(expect, abs=0.01)

    @pytest.mark.parametrize("H", [0.2, 0.5, 0.85])
    def test_two_node_covariance(self, H):
        g = GridSpec(-2.0, 3.0, 6)
        paths = sample_fbm_circulant_batch(g, H, 100_000, seed=21)
        a, b = paths[:, 0], paths[:, 5]
        expect = 0.5 * (2 ** (2 * H) + 3 ** (2 * H) - 5 ** (2 * H))
        prod = a * b
        se = prod.std() / math.sqrt(prod.size)
        assert abs(prod.mean() - expect) < 3 * se + 1e-12

    @pytest.mark.parametrize("H", [0.1, 0.5, 0.9])
    def test_matches_cholesky_in_law(self, H):
        g = GridSpec(-1.5, 2.5, 9)
        C = fbm_covariance_matrix(g.nodes(), H)
        zc = cov_z_scores(sample_fbm_circulant_batch(g, H, 100_000, seed=1), C)
        zk = cov_z_scores(sample_fbm_cholesky_batch(g, H, 100_000, seed=2), C)
        print(H, "circulant max |z|", zc.max(), "cholesky max |z|", zk.max())
        assert zc.max() < 4.0 and zk.max() < 4.0

    def test_zero_node_exact(self):
        g = GridSpec.symmetric(9.0, 20_001)
        for H in (0.2, 0.5, 0.8):
            assert sample_fbm_circulant(g, H, seed=1).values[g.zero_index] == 0.0

    def test_deterministic_and_seed_sensitive(self):
        g = GridSpec(-9.0, 9.0, 1001)
        a = sample_fbm_circulant(g, 0.4, seed=7)
        b = sample_fbm_circulant(g, 0.4, seed=7)
        c = sample_fbm_circulant(g, 0.4, seed=8)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_large_grid_is_fast(self):
        import time

        t0 = time.perf_counter()
        p = sample_fbm_circulant(GridSpec(-9.0, 9.0, 200_001), 0.5, seed=1)
        dt = time.perf_counter() - t0
        print(f"200001-node path in {dt:.2f} s")
        assert dt < 20 and np.all(np.isfinite(p.values))

    @pytest.mark.parametrize("H", [0.3, 0.7])
    def test_holder_roughness_slope(self, H):
        g = GridSpec(-2.0, 2.0, 4001)
        paths = sample_fbm_circulant_batch(g, H, 400, seed=6)
        lags = np.unique(np.geomspace(1, 100, 12).astype(int))
        msd = [np.mean((paths[:, k:] - paths[:, :-k]) ** 2) for k in lags]
        slope = np.polyfit(np.log(lags * g.spacing), np.log(msd), 1)[0]
        print(H, "slope", slope)
        assert slope == pytest.approx(2 * H, abs=0.05)

    def test_fgn_autocovariance_unit_lag_zero(self):
        assert fgn_autocovariance([0, 1], 0.5).tolist() == pytest.approx([1.0, 0.0])


class TestEvaluation:
    @pytest.fixture
    def toy(self):
        g = GridSpec(-1.0, 2.0, 4)  # nodes -1, 0, 1, 2
        return FbmPath(0.5, g, np.array([-0.5, 0.0, 1.0, 3.0]), seed=0)

    def test_nodes_and_midpoints(self, toy):
        assert eval_path(toy, 1.0) == 1.0
        assert eval_path(toy, 1.5) == pytest.approx(2.0)
        assert eval_path(toy, 0.0) == 0.0
        assert eval_path(toy, -0.5) == pytest.approx(-0.25)

    def test_out_of_range(self, toy):
        with pytest.raises(ValueError):
            eval_path(toy, 2.5)
        with pytest.raises(ValueError):
            eval_path(toy, np.array([0.0, np.nan]))

    def test_rejects_nonzero_anchor(self):
        with pytest.raises(ValueError):
            FbmPath(0.5, GridSpec(-1.0, 1.0, 3), np.array([1.0, 0.1, 2.0]), seed=0)

    def test_values_read_only(self, toy):
        with pytest.raises(ValueError):
            toy.values[0] = 5.0

    @given(st.floats(-9, 9))
    def test_uniform_index_interp_matches_numpy(self, x):
        p = sample_fbm_circulant(GridSpec(-9.0, 9.0, 1801), 0.3, seed=2)
        assert eval_path(p, x) == pytest.approx(np.interp(x, p.nodes, p.values), abs=1e-12)


def test_csv_round_trip(tmp_path):
    p = sample_fbm_circulant(GridSpec(-3.0, 3.0, 301), 0.35, seed=17)
    f = tmp_path / "path.csv"
    save_path_csv(p, f)
    first = f.read_text().splitlines()[0]
    assert first.startswith("# hurst=0.35 seed=17")
    q = load_path_csv(f)
    assert q.hurst == p.hurst and q.seed == p.seed and q.grid == p.grid
    assert np.array_equal(q.values, p.values)


def test_csv_rejects_garbage(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,value\n0,1\n")
    with pytest.raises(ValueError):
        load_path_csv(f)


def test_hurst_validation():
    with pytest.raises(ValueError):
        sample_fbm_circulant(GridSpec(-1.0, 1.0, 3), 1.2, seed=0)
    with pytest.raises(ValueError):
        sample_fbm_circulant(GridSpec(-1.0, 1.0, 3), 0.0, seed=0)


def test_fbm_error_is_runtime_error():
    assert issubclass(FbmError, RuntimeError)
