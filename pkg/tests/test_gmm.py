import math

import numpy as np
import pytest

from scenesift.errors import (
    DataError,
    DimensionError,
    InsufficientDataError,
    ParameterError,
)
from scenesift.gmm import (
    GmmConfig,
    GmmState,
    init,
    log_density,
    marginalize,
    parse_state,
    serialize_state,
    update,
)

# ---------------------------------------------------------------------------
# Independent oracles. These deliberately avoid the library's code paths.

def oracle_density_longdouble(weights, means, covs_full, x):
    """Brute-force mixture density in 80-bit floats: sum_k w_k N(x; mu, Sigma)."""
    x = np.asarray(x, dtype=np.longdouble)
    total = np.longdouble(0.0)
    for w, mu, cov in zip(weights, means, covs_full):
        mu = np.asarray(mu, dtype=np.longdouble)
        cov = np.asarray(cov, dtype=np.longdouble)
        d = len(mu)
        det = np.linalg.det(cov.astype(np.float64))
        inv = np.linalg.inv(cov.astype(np.float64)).astype(np.longdouble)
        diff = x - mu
        quad = diff @ inv @ diff
        norm = np.longdouble(1.0) / np.sqrt((2 * np.longdouble(np.pi)) ** d * np.longdouble(det))
        total += np.longdouble(w) * norm * np.exp(-quad / 2)
    return total


def oracle_marginal_by_quadrature(state_2d, x0, n_grid=6001):
    """Trapezoid integration of the 2-D joint over the dropped dimension.

    The joint density is recomputed here from the raw parameters (explicit
    2x2 Gaussian formula), independent of log_density.
    """
    mus = state_2d.means
    if state_2d.config.covariance == "diagonal":
        covs = np.array([np.diag(c) for c in state_2d.covariances])
    else:
        covs = state_2d.covariances
    sig_max = math.sqrt(max(c[1, 1] for c in covs))
    lo = min(m[1] for m in mus) - 8 * sig_max
    hi = max(m[1] for m in mus) + 8 * sig_max
    ys = np.linspace(lo, hi, n_grid)

    joint = np.zeros_like(ys)
    for w, mu, cov in zip(state_2d.weights, mus, covs):
        a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
        det = a * c - b * b
        dx = x0 - mu[0]
        dy = ys - mu[1]
        quad = (c * dx * dx - 2 * b * dx * dy + a * dy * dy) / det
        joint += w * np.exp(-quad / 2) / (2 * math.pi * math.sqrt(det))
    return float(np.trapezoid(joint, ys))


def random_state(rng, k, d, covariance="full", seed=0):
    """Assemble a valid GmmState directly from random parameters."""
    weights = rng.uniform(0.2, 1.0, size=k)
    weights /= weights.sum()
    means = rng.uniform(-2.0, 2.0, size=(k, d))
    if covariance == "diagonal":
        covs = rng.uniform(0.3, 2.0, size=(k, d))
    else:
        covs = np.empty((k, d, d))
        for j in range(k):
            a = rng.standard_normal((d, d))
            covs[j] = a @ a.T / d + 0.3 * np.eye(d)
    config = GmmConfig(k=k, covariance=covariance, seed=seed)
    return GmmState(weights=weights, means=means, covariances=covs,
                    frames_seen=0, config=config, dim_index=np.arange(d))


def diag_to_full(state):
    if state.config.covariance == "full":
        return state.covariances
    return np.array([np.diag(c) for c in state.covariances])


# ---------------------------------------------------------------------------

class TestInit:
    def test_single_component_matches_sample_stats(self):
        rng = np.random.default_rng(0)
        warmup = rng.standard_normal((500, 2))
        state = init(GmmConfig(k=1, seed=1), warmup)
        assert state.weights[0] == 1.0
        # the one mean is a farthest-point pick; the covariance is the sample's
        np.testing.assert_allclose(state.covariances[0], warmup.var(axis=0) + 1e-6)

    def test_two_repeated_points_become_the_means(self):
        a, b = np.array([0.0, 0.0]), np.array([5.0, 5.0])
        warmup = np.stack([a] * 10 + [b] * 10)
        state = init(GmmConfig(k=2, seed=3), warmup)
        got = sorted(map(tuple, state.means))
        assert got == [tuple(a), tuple(b)]

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(5)
        warmup = rng.standard_normal((50, 3))
        cfg = GmmConfig(k=3, seed=42)
        s1, s2 = init(cfg, warmup), init(cfg, warmup)
        assert serialize_state(s1) == serialize_state(s2)

    def test_insufficient_warmup(self):
        with pytest.raises(InsufficientDataError):
            init(GmmConfig(k=3), np.zeros((2, 2)))

    def test_non_finite_warmup(self):
        warmup = np.zeros((5, 2))
        warmup[1, 0] = np.inf
        with pytest.raises(DataError):
            init(GmmConfig(k=1), warmup)

    def test_uniform_weights(self):
        state = init(GmmConfig(k=4, seed=0), np.random.default_rng(0).standard_normal((20, 2)))
        np.testing.assert_allclose(state.weights, 0.25)


class TestLogDensity:
    def test_standard_normal_at_mode(self):
        state = GmmState(weights=np.array([1.0]), means=np.zeros((1, 1)),
                         covariances=np.ones((1, 1)), frames_seen=0,
                         config=GmmConfig(k=1), dim_index=np.arange(1))
        assert log_density(state, np.zeros(1)) == pytest.approx(
            math.log(1.0 / math.sqrt(2 * math.pi)), abs=1e-12)

    def test_mixture_of_identical_components(self):
        rng = np.random.default_rng(1)
        single = random_state(rng, 1, 2, "diagonal")
        doubled = GmmState(
            weights=np.array([0.5, 0.5]),
            means=np.tile(single.means, (2, 1)),
            covariances=np.tile(single.covariances, (2, 1)),
            frames_seen=0, config=GmmConfig(k=2, covariance="diagonal"),
            dim_index=np.arange(2))
        for _ in range(10):
            x = rng.standard_normal(2)
            assert log_density(doubled, x) == pytest.approx(log_density(single, x), abs=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("covariance", ["diagonal", "full"])
    def test_matches_longdouble_oracle(self, seed, covariance):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        state = random_state(rng, k, d, covariance)
        x = rng.uniform(-3, 3, size=d)
        expected = float(np.log(oracle_density_longdouble(
            state.weights, state.means, diag_to_full(state), x)))
        got = log_density(state, x)
        assert got == pytest.approx(expected, rel=1e-10)

    def test_component_permutation_invariance(self):
        rng = np.random.default_rng(9)
        state = random_state(rng, 3, 2, "full")
        perm = [2, 0, 1]
        permuted = GmmState(weights=state.weights[perm], means=state.means[perm],
                            covariances=state.covariances[perm], frames_seen=0,
                            config=state.config, dim_index=state.dim_index)
        for _ in range(5):
            x = rng.standard_normal(2)
            assert log_density(state, x) == pytest.approx(log_density(permuted, x), abs=1e-12)

    def test_dimension_mismatch(self):
        state = random_state(np.random.default_rng(0), 2, 3, "diagonal")
        with pytest.raises(DimensionError):
            log_density(state, np.zeros(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_density_integrates_to_one_on_grid(self, seed):
        rng = np.random.default_rng(seed)
        state = random_state(rng, int(rng.integers(1, 4)), 1, "diagonal")
        lo = state.means.min() - 10
        hi = state.means.max() + 10
        xs = np.linspace(lo, hi, 20001)
        dens = np.exp([log_density(state, np.array([x])) for x in xs])
        assert abs(np.trapezoid(dens, xs) - 1.0) < 1e-2


class TestUpdate:
    def test_weights_stay_on_simplex(self):
        rng = np.random.default_rng(2)
        state = init(GmmConfig(k=3, seed=0), rng.standard_normal((30, 2)))
        for _ in range(200):
            state = update(state, rng.standard_normal(2) * 3)
            assert abs(state.weights.sum() - 1.0) < 1e-9
            assert np.all(state.weights >= 0)

    def test_feeding_a_component_mean_grows_its_weight(self):
        a, b = np.array([0.0, 0.0]), np.array([8.0, 8.0])
        warmup = np.stack([a] * 15 + [b] * 15)
        state = init(GmmConfig(k=2, seed=1, discount_r=0.01), warmup)
        target = int(np.argmin(np.linalg.norm(state.means - a, axis=1)))
        last = state.weights[target]
        for _ in range(400):
            state = update(state, a)
            assert state.weights[target] >= last - 1e-12
            last = state.weights[target]
        assert last > 0.9

    def test_covariance_positive_under_many_updates(self):
        # 1e5 random updates; simplex and positivity checked periodically to
        # keep the loop fast, plus at the end
        rng = np.random.default_rng(3)
        state = init(GmmConfig(k=2, seed=0, discount_r=0.02), rng.standard_normal((20, 2)))
        for i in range(100_000):
            state = update(state, rng.standard_normal(2) * 2)
            if i % 500 == 0:
                assert np.all(state.covariances > 0)
                assert abs(state.weights.sum() - 1.0) < 1e-9
        assert np.all(state.covariances > 0)
        assert abs(state.weights.sum() - 1.0) < 1e-9

    def test_full_covariance_stays_positive_definite(self):
        rng = np.random.default_rng(4)
        cfg = GmmConfig(k=2, seed=0, covariance="full", discount_r=0.02)
        state = init(cfg, rng.standard_normal((20, 3)))
        for _ in range(500):
            state = update(state, rng.standard_normal(3) * 2)
        for cov in state.covariances:
            np.linalg.cholesky(cov)  # raises if not PD

    def test_non_finite_input_rejected_state_unchanged(self):
        rng = np.random.default_rng(5)
        state = init(GmmConfig(k=1, seed=0), rng.standard_normal((5, 2)))
        before = serialize_state(state)
        with pytest.raises(DataError):
            update(state, np.array([1.0, np.nan]))
        assert serialize_state(state) == before

    def test_discount_override_validated(self):
        rng = np.random.default_rng(6)
        state = init(GmmConfig(k=1, seed=0), rng.standard_normal((5, 1)))
        with pytest.raises(ParameterError):
            update(state, np.zeros(1), discount=1.5)

    def test_update_returns_new_state(self):
        rng = np.random.default_rng(7)
        state = init(GmmConfig(k=2, seed=0), rng.standard_normal((10, 2)))
        before = serialize_state(state)
        out = update(state, rng.standard_normal(2))
        assert out is not state
        assert out.frames_seen == state.frames_seen + 1
        assert serialize_state(state) == before


class TestMarginalize:
    def test_identity_marginalization(self):
        rng = np.random.default_rng(0)
        state = random_state(rng, 2, 3, "full")
        out = marginalize(state, range(3))
        np.testing.assert_array_equal(out.weights, state.weights)
        np.testing.assert_array_equal(out.means, state.means)
        np.testing.assert_array_equal(out.covariances, state.covariances)

    def test_independent_dims_factorize(self):
        state = GmmState(weights=np.array([1.0]),
                         means=np.array([[1.0, -2.0]]),
                         covariances=np.array([[0.5, 3.0]]),
                         frames_seen=0,
                         config=GmmConfig(k=1, covariance="diagonal"),
                         dim_index=np.arange(2))
        out = marginalize(state, [0])
        assert out.means.tolist() == [[1.0]]
        assert out.covariances.tolist() == [[0.5]]
        x = np.array([0.3])
        expected = math.log(math.exp(-(0.3 - 1.0) ** 2 / (2 * 0.5)) / math.sqrt(2 * math.pi * 0.5))
        assert log_density(out, x) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("covariance", ["diagonal", "full"])
    def test_against_quadrature_oracle(self, seed, covariance):
        rng = np.random.default_rng(100 + seed)
        state = random_state(rng, int(rng.integers(1, 4)), 2, covariance)
        sub = marginalize(state, [0])
        for x0 in rng.uniform(-2.5, 2.5, size=3):
            expected = math.log(oracle_marginal_by_quadrature(state, float(x0)))
            got = log_density(sub, np.array([x0]))
            assert got == pytest.approx(expected, rel=1e-3)

    def test_original_untouched(self):
        rng = np.random.default_rng(1)
        state = random_state(rng, 2, 3, "diagonal")
        snapshot = serialize_state(state)
        out = marginalize(state, [1])
        out.means[:] = 0.0
        assert serialize_state(state) == snapshot

    def test_empty_keep_rejected(self):
        state = random_state(np.random.default_rng(2), 1, 2, "diagonal")
        with pytest.raises(ParameterError):
            marginalize(state, [])

    def test_out_of_range_rejected(self):
        state = random_state(np.random.default_rng(3), 1, 2, "diagonal")
        with pytest.raises(ParameterError):
            marginalize(state, [0, 5])

    def test_dim_index_tracks_original_space(self):
        state = random_state(np.random.default_rng(4), 1, 4, "diagonal")
        out = marginalize(state, [1, 3])
        assert out.dim_index.tolist() == [1, 3]
        again = marginalize(out, [3])
        assert again.dim_index.tolist() == [3]


class TestSerialization:
    @pytest.mark.parametrize("covariance", ["diagonal", "full"])
    def test_round_trip_bit_exact(self, covariance):
        rng = np.random.default_rng(11)
        cfg = GmmConfig(k=2, seed=7, covariance=covariance)
        state = init(cfg, rng.standard_normal((25, 3)))
        state = update(state, rng.standard_normal(3))
        text = serialize_state(state)
        again = parse_state(text)
        assert serialize_state(again) == text
        assert np.array_equal(again.weights, state.weights)
        assert np.array_equal(again.means, state.means)
        assert np.array_equal(again.covariances, state.covariances)
        assert again.config == state.config
