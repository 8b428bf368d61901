"""Direction-score tests: embeddings, surrogates, generators, significance.

Frozen constants were produced by this package at the recorded seeds and
pinned; the generator tests compare bitwise against the scalar transcriptions
in naive.py, which is only possible because the generators avoid vectorised
power/exp ufuncs (those round a few inputs differently, and chaotic maps
amplify one ulp into a different trajectory).
"""

import numpy as np
import pytest

import naive
from condiv.causal import (
    HENON_EMBEDDING,
    NLVAR3_EMBEDDING,
    CausalResult,
    EmbeddingSpec,
    causal_score,
    causal_test,
    delay_embed,
    henon_generate,
    nlvar3_generate,
    surrogate_pair,
)
from condiv.timeseries import hankel_embed


class TestEmbeddingSpec:
    def test_defaults_and_fields(self):
        spec = EmbeddingSpec(2, 3, 4)
        assert (spec.delay, spec.dim_x, spec.dim_y) == (2, 3, 4)

    def test_swapped_exchanges_roles(self):
        spec = EmbeddingSpec(2, 3, 4)
        assert spec.swapped() == EmbeddingSpec(2, 4, 3)

    @pytest.mark.parametrize("kwargs", [
        {"delay": 0}, {"dim_x": 0}, {"dim_y": -1}, {"delay": 1.5},
    ])
    def test_rejects_non_positive_or_fractional(self, kwargs):
        with pytest.raises(ValueError):
            EmbeddingSpec(**kwargs)

    def test_benchmark_embeddings(self):
        assert HENON_EMBEDDING == EmbeddingSpec(1, 2, 2)
        assert NLVAR3_EMBEDDING == EmbeddingSpec(1, 1, 1)


class TestCausalResult:
    def test_rejects_unknown_direction(self):
        with pytest.raises(ValueError):
            CausalResult(score=0.1, p_value=0.5, direction="both")

    def test_rejects_out_of_range_p(self):
        with pytest.raises(ValueError):
            CausalResult(score=0.1, p_value=0.0, direction="none")


class TestDelayEmbed:
    def test_hand_case(self):
        past, future = delay_embed([1, 2, 3, 4], 2, 1)
        assert past.tolist() == [[2.0, 1.0], [3.0, 2.0]]
        assert future.tolist() == [3.0, 4.0]

    def test_matches_naive_transcription(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            dim = int(rng.integers(1, 5))
            delay = int(rng.integers(1, 4))
            length = int(rng.integers((dim - 1) * delay + 2, 40))
            v = rng.standard_normal(length)
            past, future = delay_embed(v, dim, delay)
            past_n, future_n = naive.delay_embed_naive(v, dim, delay)
            assert np.array_equal(past, past_n)
            assert np.array_equal(future, future_n)
            assert past.shape == (length - (dim - 1) * delay - 1, dim)

    def test_dim_one_matches_window_embedding(self):
        v = np.random.default_rng(3).standard_normal(20)
        past, future = delay_embed(v, 1, 1)
        pair = hankel_embed(v, order=1)
        assert np.array_equal(past, pair.inputs)
        assert np.array_equal(future, pair.targets.ravel())

    def test_accepts_column_vector(self):
        past, future = delay_embed(np.arange(6.0)[:, None], 2, 1)
        assert past.shape == (4, 2)

    def test_too_short_series(self):
        with pytest.raises(ValueError, match="too short"):
            delay_embed([1.0, 2.0, 3.0], dim=2, delay=2)

    @pytest.mark.parametrize("dim,delay", [(0, 1), (2, 0), (1.5, 1)])
    def test_invalid_parameters(self, dim, delay):
        with pytest.raises(ValueError):
            delay_embed(np.arange(10.0), dim, delay)

    def test_rejects_multivariate(self):
        with pytest.raises(ValueError, match="univariate"):
            delay_embed(np.zeros((10, 2)), 1, 1)


class TestCausalScore:
    def test_frozen_driven_pair(self):
        # causal_score(*henon_generate(2, 0.3, 300, seed=42)[:2], HENON_EMBEDDING)
        xs = henon_generate(chain_length=2, coupling=0.3, n=300, seed=42)
        s = causal_score(xs[0], xs[1], HENON_EMBEDDING)
        assert s == pytest.approx(0.6228820800943777, rel=1e-12)

    def test_frozen_autoregression_pair(self):
        # causal_score(*nlvar3_generate(300, seed=42)[:2], NLVAR3_EMBEDDING)
        g = nlvar3_generate(n=300, seed=42)
        s = causal_score(g[0], g[1], NLVAR3_EMBEDDING)
        assert s == pytest.approx(0.3022240265708409, rel=1e-12)

    def test_exact_antisymmetry_resolved_widths(self):
        rng = np.random.default_rng(5)
        for spec in [EmbeddingSpec(1, 1, 1), EmbeddingSpec(1, 2, 3),
                     EmbeddingSpec(2, 2, 1)]:
            x = rng.standard_normal(80)
            y = rng.standard_normal(80)
            forward = causal_score(x, y, spec)
            backward = causal_score(y, x, spec.swapped())
            assert forward + backward == 0.0

    def test_exact_antisymmetry_fixed_widths(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(60)
        y = rng.standard_normal(60)
        spec = EmbeddingSpec(1, 2, 2)
        forward = causal_score(x, y, spec, widths=(0.7, 0.4))
        backward = causal_score(y, x, spec, widths=(0.7, 0.4))
        assert forward + backward == 0.0

    def test_known_driver_scores_positive(self):
        # y copies x with one step of lag, so x's past pins y's next value.
        rng = np.random.default_rng(0)
        x = rng.standard_normal(600)
        y = np.empty(600)
        y[0] = 0.0
        y[1:] = x[:-1]
        assert causal_score(x, y, EmbeddingSpec(1, 1, 1)) > 0.2

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            causal_score(np.zeros(10) + np.arange(10), np.arange(12.0),
                         EmbeddingSpec(1, 1, 1))


class TestSurrogatePair:
    def _series(self):
        rng = np.random.default_rng(9)
        return rng.standard_normal(200), rng.standard_normal(200)

    @staticmethod
    def _find_offset(window, source):
        hits = [
            i
            for i in range(source.shape[0] - window.shape[0] + 1)
            if np.array_equal(window, source[i : i + window.shape[0]])
        ]
        assert len(hits) == 1
        return hits[0]

    def test_windows_are_contiguous_and_separated(self):
        x, y = self._series()
        for seed in range(8):
            xs, ys = surrogate_pair(x, y, window=64, min_offset=32, seed=seed)
            assert xs.shape == ys.shape == (64,)
            i = self._find_offset(xs, x)
            j = self._find_offset(ys, y)
            assert abs(i - j) >= 32

    def test_seed_reproducibility(self):
        x, y = self._series()
        a = surrogate_pair(x, y, window=64, min_offset=32, seed=4)
        b = surrogate_pair(x, y, window=64, min_offset=32, seed=4)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_source_too_short(self):
        x, y = self._series()
        with pytest.raises(ValueError, match="too short"):
            surrogate_pair(x, y, window=180, min_offset=32, seed=0)

    def test_min_offset_must_be_positive(self):
        x, y = self._series()
        with pytest.raises(ValueError, match="min_offset"):
            surrogate_pair(x, y, window=64, min_offset=0, seed=0)


class TestCausalTest:
    def test_protocol_reconstruction_from_public_api(self):
        """The optimized test equals surrogate_pair + causal_score verbatim."""
        xs = henon_generate(chain_length=2, coupling=0.3, n=400, seed=8)
        x, y = xs[0], xs[1]
        widths = (0.4, 0.35)
        window, offset, n_surr = 256, 64, 19
        res = causal_test(x, y, HENON_EMBEDDING, widths=widths,
                          n_surrogates=n_surr, alpha=0.3, seed=21,
                          window=window, min_offset=offset)
        observed = causal_score(x[:window], y[:window], HENON_EMBEDDING, widths)
        assert res.score == observed
        exceed = 0
        for child in np.random.SeedSequence(21).spawn(n_surr):
            xs_s, ys_s = surrogate_pair(x, y, window=window,
                                        min_offset=offset, seed=child)
            s = causal_score(xs_s, ys_s, HENON_EMBEDDING, widths)
            if abs(s) >= abs(observed):
                exceed += 1
        assert res.p_value == (1 + exceed) / (1 + n_surr)

    def test_detects_chain_drive_small_scale(self):
        hits = 0
        for seed in range(3):
            xs = henon_generate(chain_length=2, coupling=0.3, n=768, seed=seed)
            res = causal_test(xs[0], xs[1], HENON_EMBEDDING, n_surrogates=39,
                              seed=seed, window=512, min_offset=128)
            hits += res.direction == "x_causes_y"
        assert hits == 3

    def test_decoupled_chain_gives_none(self):
        for seed in range(3):
            xs = henon_generate(chain_length=2, coupling=0.0, n=768, seed=seed)
            res = causal_test(xs[0], xs[1], HENON_EMBEDDING, n_surrogates=39,
                              seed=seed, window=512, min_offset=128)
            assert res.direction == "none"

    def test_zeroed_couplings_remove_detections(self):
        for seed in range(2):
            xs = nlvar3_generate(n=768, seed=seed, couplings=(0.0, 0.3, 0.0))
            for pair in [(0, 1), (0, 2)]:
                res = causal_test(xs[pair[0]], xs[pair[1]], NLVAR3_EMBEDDING,
                                  n_surrogates=39, seed=(seed,) + pair,
                                  window=512, min_offset=128)
                assert res.direction == "none"

    def test_null_calibration(self):
        """Independent noise pairs must stay near the nominal level."""
        flagged = 0
        for trial in range(40):
            rng = np.random.default_rng((77, trial))
            x = rng.standard_normal(360)
            y = rng.standard_normal(360)
            res = causal_test(x, y, EmbeddingSpec(1, 1, 1), n_surrogates=39,
                              seed=(77, trial), window=240, min_offset=60)
            flagged += res.direction != "none"
        assert flagged / 40 <= 0.05 + 0.05

    def test_direction_consistent_with_score_and_p(self):
        for trial in range(6):
            rng = np.random.default_rng((13, trial))
            x = rng.standard_normal(300)
            y = rng.standard_normal(300)
            res = causal_test(x, y, EmbeddingSpec(1, 1, 1), n_surrogates=19,
                              alpha=0.2, seed=trial, window=200, min_offset=50)
            assert 1.0 / 20 <= res.p_value <= 1.0
            if res.p_value >= 0.2:
                assert res.direction == "none"
            else:
                expected = "x_causes_y" if res.score > 0 else "y_causes_x"
                assert res.direction == expected

    def test_seed_reproducibility(self):
        xs = henon_generate(chain_length=2, n=400, seed=2)
        kwargs = dict(n_surrogates=19, seed=11, window=256, min_offset=64)
        a = causal_test(xs[0], xs[1], HENON_EMBEDDING, **kwargs)
        b = causal_test(xs[0], xs[1], HENON_EMBEDDING, **kwargs)
        assert a == b

    def test_validation_errors(self):
        x = np.arange(100.0)
        y = np.arange(100.0) * 2
        spec = EmbeddingSpec(1, 1, 1)
        with pytest.raises(ValueError, match="too short"):
            causal_test(x, y, spec, window=90, min_offset=20)
        with pytest.raises(ValueError, match="n_surrogates"):
            causal_test(x, y, spec, n_surrogates=0, window=60, min_offset=20)
        with pytest.raises(ValueError, match="alpha"):
            causal_test(x, y, spec, alpha=1.0, window=60, min_offset=20)


class TestHenonGenerate:
    def test_matches_scalar_recursion_bitwise(self):
        out = henon_generate(chain_length=5, coupling=0.3, n=20, seed=7,
                             burn_in=0)
        ref = naive.henon_naive(5, 0.3, 20, 7, 0)
        assert all(np.array_equal(a, b) for a, b in zip(out, ref))

    def test_matches_through_default_burn_in(self):
        out = henon_generate(chain_length=3, n=50, seed=3)
        ref = naive.henon_naive(3, 0.3, 50, 3, 1000)
        assert all(np.array_equal(a, b) for a, b in zip(out, ref))

    def test_first_series_hand_step_from_zeros(self):
        out = henon_generate(chain_length=2, n=3, seed=0, burn_in=0,
                             init=np.zeros((2, 2)))
        assert out[0].tolist() == [0.0, 0.0, 1.4]

    def test_output_shape_and_boundedness(self):
        out = henon_generate(chain_length=4, n=256, seed=1)
        assert len(out) == 4
        assert all(s.shape == (256,) for s in out)
        assert max(float(np.max(np.abs(s))) for s in out) < 10.0

    def test_seeds_give_distinct_realizations(self):
        a = henon_generate(chain_length=2, n=64, seed=0)
        b = henon_generate(chain_length=2, n=64, seed=1)
        assert not np.array_equal(a[0], b[0])

    def test_divergent_start_recovers_by_restarting(self):
        out = henon_generate(chain_length=2, n=32, seed=5, burn_in=10,
                             init=np.full((2, 2), 2.0))
        assert float(np.max(np.abs(out[0]))) < 10.0

    def test_unstable_map_raises_after_restarts(self):
        with pytest.raises(RuntimeError, match="diverged"):
            henon_generate(chain_length=2, coupling=200.0, n=12, seed=0,
                           burn_in=0)

    def test_validation(self):
        with pytest.raises(ValueError, match="chain_length"):
            henon_generate(chain_length=1)
        with pytest.raises(ValueError, match="init"):
            henon_generate(chain_length=3, n=8, seed=0, init=np.zeros((2, 2)))


class TestNlvar3Generate:
    def test_matches_scalar_recursion_bitwise(self):
        out = nlvar3_generate(n=40, seed=11, burn_in=30)
        ref = naive.nlvar3_naive(40, 11, 30)
        assert all(np.array_equal(a, b) for a, b in zip(out, ref))

    def test_matches_through_default_burn_in(self):
        out = nlvar3_generate(n=50, seed=2)
        ref = naive.nlvar3_naive(50, 2, 1000)
        assert all(np.array_equal(a, b) for a, b in zip(out, ref))

    def test_first_step_is_pure_noise_from_zero_state(self):
        # With x = 0 the self-map and every drive term vanish.
        out = nlvar3_generate(n=2, seed=9, burn_in=0)
        w = np.random.default_rng(9).standard_normal((1, 3))
        assert out[0][1] == 0.01 * w[0, 0]
        assert out[1][1] == 0.01 * w[0, 1]
        assert out[2][1] == 0.01 * w[0, 2]

    def test_output_shape_and_boundedness(self):
        out = nlvar3_generate(n=300, seed=4)
        assert len(out) == 3
        assert all(s.shape == (300,) for s in out)
        assert max(float(np.max(np.abs(s))) for s in out) < 3.0

    def test_reproducible_per_seed(self):
        a = nlvar3_generate(n=30, seed=6)
        b = nlvar3_generate(n=30, seed=6)
        assert all(np.array_equal(u, v) for u, v in zip(a, b))

    def test_validation(self):
        with pytest.raises(ValueError, match="n must be positive"):
            nlvar3_generate(n=0)
