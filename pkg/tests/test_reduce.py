import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pflatent.errors import DimensionMismatch, RankDeficientWarning, ZeroSpreadWarning
from pflatent.reduce import (AEModel, PCAStage, ae_forward, ae_gradients, ae_loss, ae_train,
                             compose_pipeline, fit_scaler, flatten_frame, flatten_frames,
                             format_ratio, init_ae, pca_fit, pca_inverse, pca_transform,
                             symmetric_dims, unflatten_frames)
from pflatent.reduce.autoencoder import hidden_widths
from pflatent.spectral import Field2D, GridSpec
from pflatent.training import TrainConfig

from oracles import (central_differences, covariance, dense_loops, jacobi_eigh,
                     max_relative_error)


class TestFlatten:
    def test_default_width(self):
        assert flatten_frame(np.zeros((128, 128)), channels=3).shape == (49152,)

    def test_row_major(self):
        f = Field2D(GridSpec(2, 2), np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(flatten_frame(f), [1, 2, 3, 4])

    def test_rgb_interleaved(self):
        np.testing.assert_array_equal(flatten_frame(np.array([[1.0, 2.0]]), 3),
                                      [1, 1, 1, 2, 2, 2])

    @pytest.mark.parametrize("channels", [1, 3])
    def test_round_trip_exact(self, channels):
        x = np.random.default_rng(0).random((3, 5, 4, 6))
        rows = flatten_frames(x, channels)
        assert rows.shape == (15, 24 * channels)
        back = unflatten_frames(rows, (4, 6), channels).reshape(x.shape)
        assert np.array_equal(back, x)

    def test_rgb_inverse_averages(self):
        back = unflatten_frames(np.array([[0.0, 0.3, 0.9]]), (1, 1), 3)
        assert back[0, 0, 0] == pytest.approx(0.4)

    def test_bad_channels(self):
        with pytest.raises(ValueError):
            flatten_frame(np.zeros((2, 2)), 2)


class TestScaler:
    def test_minmax_endpoints(self):
        s = fit_scaler(np.array([[1.0], [2.0], [3.0]]), "minmax")
        np.testing.assert_allclose(s.apply([[1.0], [2.0], [3.0]]).ravel(), [0, 0.5, 1])

    def test_zscore_values(self):
        s = fit_scaler(np.array([[1.0], [2.0], [3.0]]), "zscore")
        # sigma = sqrt(2/3)
        np.testing.assert_allclose(s.apply([[1.0], [2.0], [3.0]]).ravel(),
                                   [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)

    def test_constant_feature_flagged(self):
        x = np.array([[5.0, 1.0], [5.0, 2.0]])
        with pytest.warns(ZeroSpreadWarning):
            s = fit_scaler(x, "zscore")
        assert s.zero_spread.tolist() == [True, False]
        np.testing.assert_array_equal(s.apply(x)[:, 0], [5.0, 5.0])

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 5)),
                  elements=st.floats(-1e3, 1e3)), st.sampled_from(["minmax", "zscore"]))
    def test_properties(self, x, kind):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroSpreadWarning)
            s = fit_scaler(x, kind)
        y = s.apply(x)
        np.testing.assert_allclose(s.invert(y), x, atol=1e-10 * (1 + np.abs(x).max()))
        live = ~s.zero_spread & (s.scale > 1e-6 * (1 + np.abs(x).max(axis=0)))
        if kind == "minmax":
            assert np.all(y[:, live] >= -1e-12) and np.all(y[:, live] <= 1 + 1e-12)
        else:
            assert np.all(np.abs(y[:, live].mean(axis=0)) < 1e-10)
            assert np.all(np.abs(y[:, live].std(axis=0) - 1) < 1e-8)


class TestPCA:
    def test_line_through_origin(self):
        t = np.linspace(-1, 1, 11)[:, None]
        m = pca_fit(np.hstack([t, 2 * t]), 1)
        assert m.explained_variance_ratio[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("n,m", [(20, 8), (50, 10)])
    def test_matches_jacobi(self, n, m):
        z = np.random.default_rng(n).normal(size=(n, m)) @ np.diag(np.arange(1, m + 1))
        model = pca_fit(z, m)
        lam, vecs = jacobi_eigh(covariance(z))
        np.testing.assert_allclose(model.eigenvalues, lam, atol=1e-8 * lam[0])
        for got, ref in zip(model.components, vecs):
            sign = np.sign(got @ ref)
            np.testing.assert_allclose(got, sign * ref, atol=1e-8)

    def test_orthonormal_and_ratios(self):
        z = np.random.default_rng(3).normal(size=(30, 6))
        m = pca_fit(z, 6)
        np.testing.assert_allclose(m.components @ m.components.T, np.eye(6), atol=1e-8)
        r = m.explained_variance_ratio
        assert np.all(np.diff(r) <= 0) and r.sum() == pytest.approx(1.0, abs=1e-8)

    def test_transform_of_mean_is_zero(self):
        z = np.random.default_rng(4).normal(size=(12, 5))
        m = pca_fit(z, 3)
        np.testing.assert_allclose(pca_transform(m, z.mean(axis=0)), 0, atol=1e-12)

    def test_full_rank_round_trip(self):
        z = np.random.default_rng(5).normal(size=(10, 6))
        m = pca_fit(z, 6)
        assert np.abs(pca_inverse(m, pca_transform(m, z)) - z).max() < 1e-8

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_truncated_error_is_discarded_variance(self, k):
        z = np.random.default_rng(6).normal(size=(25, 6)) * [3, 2, 1.5, 1, 0.5, 0.2]
        n, m = z.shape
        full = pca_fit(z, 6)
        model = pca_fit(z, k)
        resid = z - pca_inverse(model, pca_transform(model, z))
        direct = np.mean(resid**2)
        predicted = full.eigenvalues[k:].sum() * (n - 1) / n / m
        assert direct == pytest.approx(predicted, abs=1e-8)

    def test_error_non_increasing_in_k(self):
        z = np.random.default_rng(7).normal(size=(40, 8))
        errs = []
        for k in range(1, 9):
            m = pca_fit(z, k)
            errs.append(np.mean((z - pca_inverse(m, pca_transform(m, z))) ** 2))
        assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))

    def test_rank_deficient_warning(self):
        t = np.random.default_rng(8).normal(size=(10, 1))
        with pytest.warns(RankDeficientWarning):
            pca_fit(np.hstack([t, t, t]), 2)

    def test_bad_component_count(self):
        with pytest.raises(ValueError):
            pca_fit(np.zeros((5, 3)), 4)

    def test_dimension_mismatch(self):
        m = pca_fit(np.random.default_rng(9).normal(size=(10, 4)), 2)
        with pytest.raises(DimensionMismatch):
            pca_transform(m, np.zeros(5))
        with pytest.raises(DimensionMismatch):
            pca_inverse(m, np.zeros(3))


class TestAutoencoderForward:
    def test_zero_model(self):
        m = init_ae([5, 2, 5], 1, "relu", "identity")
        for p in m.params:
            p[...] = 0
        h, xr = ae_forward(m, np.ones(5))
        assert np.all(h == 0) and np.all(xr == 0)

    def test_identity_network(self):
        m = init_ae([4, 4, 4], 1, "identity", "identity")
        m.weights[0][...] = np.eye(4)
        m.weights[1][...] = np.eye(4)
        x = np.array([0.3, -1.0, 2.0, 5.0])
        np.testing.assert_array_equal(ae_forward(m, x)[1], x)

    def test_matches_loop_evaluation(self):
        m = init_ae([6, 4, 3, 4, 6], 2, "tanh", "sigmoid", seed=3)
        rng = np.random.default_rng(1)
        for b in m.biases:
            b[...] = rng.normal(size=b.shape)
        x = rng.random(6)
        a = x
        for w, b, act in zip(m.weights, m.biases, m.activations):
            a = dense_loops(a, w, b, act)
            if len(a) == 3:
                code = a
        h, xr = ae_forward(m, x)
        np.testing.assert_allclose(h, code, atol=1e-12)
        np.testing.assert_allclose(xr, a, atol=1e-12)

    def test_dimension_mismatch(self):
        m = init_ae([6, 3, 6], 1)
        with pytest.raises(DimensionMismatch):
            ae_forward(m, np.zeros(5))

    def test_rejects_asymmetric_output(self):
        with pytest.raises(DimensionMismatch):
            AEModel([np.zeros((4, 2)), np.zeros((2, 3))], [np.zeros(2), np.zeros(3)],
                    ["relu", "sigmoid"], 1)

    def test_hidden_widths_geometric(self):
        assert hidden_widths(750, 250, 0) == []
        w = hidden_widths(800, 200, 1)
        assert w == [400]
        dims, ci = symmetric_dims(800, 200, 1)
        assert dims == [800, 400, 200, 400, 800] and ci == 2


class TestAutoencoderGradients:
    @pytest.mark.parametrize("dims,ci,act", [
        ([6, 3, 6], 1, "tanh"), ([6, 3, 6], 1, "relu"),
        ([10, 7, 4, 7, 10], 2, "tanh"), ([10, 7, 4, 7, 10], 2, "sigmoid"),
    ])
    def test_finite_differences(self, dims, ci, act):
        m = init_ae(dims, ci, act, "sigmoid", seed=2)
        rng = np.random.default_rng(4)
        for b in m.biases:
            b += rng.normal(0, 0.1, b.shape)
        x = rng.random((5, dims[0]))
        _, grads = ae_gradients(m, x)
        numeric = central_differences(m.params, lambda: ae_loss(m, x))
        assert max_relative_error(grads, numeric) < 1e-5

    def test_perfect_reconstruction_zero_gradient(self):
        m = init_ae([4, 4, 4], 1, "identity", "identity")
        m.weights[0][...] = np.eye(4)
        m.weights[1][...] = np.eye(4)
        _, grads = ae_gradients(m, np.random.default_rng(0).normal(size=(3, 4)))
        assert max(np.abs(g).max() for g in grads) < 1e-12

    def test_duplicated_sample_mean_invariance(self):
        m = init_ae([6, 3, 6], 1, "tanh", "sigmoid", seed=1)
        x = np.random.default_rng(2).random((1, 6))
        _, g1 = ae_gradients(m, x)
        _, g2 = ae_gradients(m, np.vstack([x, x]))
        for a, b in zip(g1, g2):
            np.testing.assert_allclose(a, b, atol=1e-12)


class TestAutoencoderTraining:
    def test_memorizes_repeated_vector(self):
        x = np.tile(np.random.default_rng(0).random(8), (64, 1))
        m = init_ae([8, 1, 8], 1, "identity", "identity", seed=0)
        cfg = TrainConfig(learning_rate=1e-2, batch_size=16, max_epochs=400, patience=50,
                          min_delta=0.0)
        m, hist = ae_train(x, m, cfg)
        assert ae_loss(m, x) < 1e-6

    def test_linear_ae_near_pca(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(200, 6)) * [3, 2, 1, 0.3, 0.2, 0.1]
        pca = pca_fit(x, 2)
        pca_mse = np.mean((x - pca_inverse(pca, pca_transform(pca, x))) ** 2)
        m = init_ae([6, 2, 6], 1, "identity", "identity", seed=1)
        cfg = TrainConfig(learning_rate=1e-2, batch_size=20, max_epochs=600, patience=60,
                          min_delta=0.0)
        m, _ = ae_train(x, m, cfg)
        ae_mse = ae_loss(m, x)
        assert pca_mse - 1e-8 <= ae_mse <= 1.10 * pca_mse

    def test_reproducible(self):
        x = np.random.default_rng(2).random((40, 5))
        cfg = TrainConfig(batch_size=8, max_epochs=5)
        a, ha = ae_train(x, init_ae([5, 2, 5], 1, seed=3), cfg)
        b, hb = ae_train(x, init_ae([5, 2, 5], 1, seed=3), cfg)
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
        assert ha.val_loss == hb.val_loss

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            ae_train(np.zeros((10, 3)), init_ae([3, 1, 3], 1), TrainConfig(batch_size=8))

    def test_history_and_best_model(self):
        x = np.random.default_rng(5).random((64, 6))
        m, hist = ae_train(x, init_ae([6, 3, 6], 1, seed=0), TrainConfig(batch_size=8, max_epochs=20))
        assert len(hist.train_loss) == len(hist.val_loss) >= 1
        assert hist.best_val == min([hist.initial_val] + hist.val_loss)


class TestPipeline:
    def _stage1(self, rng_seed=0):
        return init_ae([16, 6, 16], 1, "relu", "sigmoid", seed=rng_seed)

    def test_reduction_ratio_full_chain(self):
        s1 = AEModel([np.zeros((49152, 750)), np.zeros((750, 49152))],
                     [np.zeros(750), np.zeros(49152)], ["relu", "sigmoid"], 1)
        codes = np.random.default_rng(0).normal(size=(300, 750))
        stage2 = PCAStage(fit_scaler(codes), pca_fit(codes, 250))
        pipe = compose_pipeline(s1, stage2)
        assert pipe.reduction_ratio == pytest.approx(196.608)
        assert format_ratio(pipe.reduction_ratio) == "1/196"

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_full_rank_pca_is_lossless(self):
        s1 = self._stage1()
        x = np.random.default_rng(1).random((40, 16))
        codes = s1.encode(x)
        scaler = fit_scaler(codes)
        pipe = compose_pipeline(s1, PCAStage(scaler, pca_fit(scaler.apply(codes), 6)), clamp=False)
        np.testing.assert_allclose(pipe.decode(pipe.encode(x)), s1.decode(s1.encode(x)), atol=1e-6)

    def test_ae_stage2(self):
        s1 = self._stage1()
        s2 = init_ae([6, 3, 6], 1, "relu", "identity", seed=2)
        pipe = compose_pipeline(s1, s2)
        x = np.random.default_rng(3).random((5, 16))
        z = pipe.encode(x)
        assert z.shape == (5, 3)
        y = pipe.decode(z)
        assert y.shape == (5, 16) and y.min() >= 0 and y.max() <= 1

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            compose_pipeline(self._stage1(), init_ae([5, 2, 5], 1))

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_residuals_keys(self):
        s1 = self._stage1()
        x = np.random.default_rng(4).random((30, 16))
        codes = s1.encode(x)
        sc = fit_scaler(codes)
        pipe = compose_pipeline(s1, PCAStage(sc, pca_fit(sc.apply(codes), 2)))
        r = pipe.stage_residuals(x)
        assert set(r) == {"stage1", "stage2", "end_to_end"}
        assert r["end_to_end"] == pytest.approx(np.mean((x - pipe.decode(pipe.encode(x))) ** 2))
