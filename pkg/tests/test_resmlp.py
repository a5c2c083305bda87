import numpy as np
import pytest

from shockzone.grids import uniform_mesh
from shockzone.monitor import MonitorField
from shockzone.resmlp import (
    HIDDEN,
    N_BLOCKS,
    N_IN,
    N_OUT,
    AdamMoments,
    ModelFormatError,
    ResMLPParams,
    SurrogateError,
    TrainConfig,
    _forward_cached,
    _softplus,
    adam_step,
    backward,
    forward,
    init_params,
    load_model,
    mae_loss,
    predict_spacing,
    save_model,
    train,
)


def random_params(seed=0, **kw):
    rng = np.random.default_rng(seed)
    return init_params(seed, x_mean=rng.normal(size=N_IN),
                       x_std=rng.uniform(0.5, 2.0, N_IN),
                       output_bias=0.1 * rng.normal(size=N_OUT), **kw)


def naive_forward(params, x):
    """Independent loop-and-dot oracle for the batched forward pass."""
    z = (x - params.x_mean) / params.x_std
    h = params.w_in @ z + params.b_in
    for w1, b1, w2, b2 in params.blocks:
        u1 = w1 @ h + b1
        if params.inner_relu:
            u1 = np.maximum(u1, 0.0)
        u2 = w2 @ u1 + b2
        h = np.maximum(h + u2, 0.0)
    return params.w_out @ h + params.b_out


def tiny_dataset(n=10, seed=0):
    rng = np.random.default_rng(seed)
    X = 1.0 + rng.uniform(0, 20, size=(n, N_IN))
    raw = rng.uniform(0.2, 1.0, size=(n, N_OUT))
    Y = raw / raw.sum(axis=1, keepdims=True)
    return X, Y


class TestForward:
    def test_zero_params_give_output_bias(self):
        p = init_params(0)
        zero = p.with_flat([np.zeros_like(a) for a in p.flat()])
        bias = np.linspace(-1, 1, N_OUT)
        zero = ResMLPParams(zero.x_mean, zero.x_std, zero.w_in, zero.b_in,
                            zero.blocks, zero.w_out, bias)
        out = forward(zero, np.random.default_rng(1).normal(size=N_IN))
        assert np.allclose(out, bias)

    def test_zeroed_blocks_reduce_to_affine_sandwich(self):
        p = random_params(3)
        zero_blocks = tuple(
            (np.zeros((HIDDEN, HIDDEN)), np.zeros(HIDDEN),
             np.zeros((HIDDEN, HIDDEN)), np.zeros(HIDDEN))
            for _ in range(N_BLOCKS)
        )
        p0 = ResMLPParams(p.x_mean, p.x_std, p.w_in, p.b_in, zero_blocks, p.w_out, p.b_out)
        x = np.random.default_rng(4).normal(size=N_IN)
        z = (x - p.x_mean) / p.x_std
        h = p.w_in @ z + p.b_in
        for _ in range(N_BLOCKS):
            h = np.maximum(h, 0.0)
        expected = p.w_out @ h + p.b_out
        assert np.allclose(forward(p0, x), expected, atol=1e-12)

    @pytest.mark.parametrize("inner", [False, True])
    def test_matches_naive_oracle(self, inner):
        p = random_params(7, inner_relu=inner)
        rng = np.random.default_rng(8)
        X = rng.normal(size=(5, N_IN))
        batched = forward(p, X)
        for i in range(5):
            assert np.allclose(batched[i], naive_forward(p, X[i]), rtol=1e-12, atol=1e-12)

    def test_block_count_pinned(self):
        p = init_params(0)
        with pytest.raises(ValueError):
            ResMLPParams(p.x_mean, p.x_std, p.w_in, p.b_in, p.blocks[:4], p.w_out, p.b_out)


class TestPredictSpacing:
    def test_renormalized_to_domain_length(self):
        g = uniform_mesh(0.0, 2.5, 200)
        mf = MonitorField(1.0 + np.random.default_rng(0).uniform(0, 5, 201), g)
        s = predict_spacing(random_params(1), mf)
        assert np.isclose(s.deltas.sum(), 2.5, rtol=1e-12)
        assert np.all(s.deltas > 0)

    def test_wrong_width_rejected(self):
        g = uniform_mesh(0, 1, 100)
        with pytest.raises(SurrogateError):
            predict_spacing(random_params(1), MonitorField(np.ones(101), g))


class TestMae:
    def test_exact_match_zero(self):
        x = np.random.default_rng(0).normal(size=(3, 7))
        assert mae_loss(x, x) == 0.0

    def test_uniform_shift(self):
        x = np.random.default_rng(1).normal(size=(4, 5))
        assert np.isclose(mae_loss(x + 0.37, x), 0.37, rtol=1e-12)

    def test_matches_hand_sum(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(3, 6)), rng.normal(size=(3, 6))
        hand = sum(abs(a[i, j] - b[i, j]) for i in range(3) for j in range(6)) / 18
        assert np.isclose(mae_loss(a, b), hand, rtol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mae_loss(np.zeros((2, 3)), np.zeros((3, 2)))


class TestBackward:
    def test_perfect_fit_zero_gradient(self):
        p = random_params(5)
        X = np.random.default_rng(6).normal(size=(3, N_IN))
        raw, *_ = _forward_cached(p, X)
        Y = _softplus(raw)  # targets equal predictions: flat MAE minimum
        loss, grads = backward(p, X, Y)
        assert loss == 0.0
        assert all(np.all(g == 0.0) for g in grads)

    @pytest.mark.parametrize("inner", [False, True])
    def test_central_finite_differences(self, inner):
        p = random_params(9, inner_relu=inner)
        rng = np.random.default_rng(10)
        X = rng.normal(1.0, 1.0, size=(4, N_IN))
        Y = rng.uniform(1e-4, 1e-2, size=(4, N_OUT))
        _, grads = backward(p, X, Y)
        flat = p.flat()

        def loss_of(arrays):
            q = p.with_flat(arrays)
            raw, *_ = _forward_cached(q, X)
            return float(np.mean(np.abs(_softplus(raw) - Y)))

        h = 1e-5
        worst = 0.0
        probe_rng = np.random.default_rng(11)
        for _ in range(50):
            ai = int(probe_rng.integers(0, len(flat)))
            idx = tuple(probe_rng.integers(0, s) for s in flat[ai].shape)
            plus = [a.copy() for a in flat]
            minus = [a.copy() for a in flat]
            plus[ai][idx] += h
            minus[ai][idx] -= h
            fd = (loss_of(plus) - loss_of(minus)) / (2 * h)
            an = grads[ai][idx]
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-10))
        assert worst < 1e-4, f"worst relative gradient error {worst}"

    def test_output_bias_gradient_hand_rule(self):
        p = random_params(12)
        rng = np.random.default_rng(13)
        X = rng.normal(size=(6, N_IN))
        Y = rng.uniform(0, 1e-2, size=(6, N_OUT))
        raw, *_ = _forward_cached(p, X)
        pred = _softplus(raw)
        sig = 1.0 / (1.0 + np.exp(-raw))
        hand = (np.sign(pred - Y) * sig).sum(axis=0) / pred.size
        _, grads = backward(p, X, Y)
        assert np.allclose(grads[-1], hand, rtol=1e-12, atol=1e-15)


class TestAdam:
    def test_zero_gradient_keeps_params_decays_moments(self):
        p = random_params(14)
        cfg = TrainConfig(epochs=1)
        # first moment zero: the update is exactly zero; second moment decays
        m = AdamMoments(
            m=[np.zeros_like(a) for a in p.flat()],
            v=[np.full_like(a, 0.5) for a in p.flat()],
        )
        zero = [np.zeros_like(a) for a in p.flat()]
        p2, m2 = adam_step(p, zero, m, 5, cfg)
        for a, b in zip(p.flat(), p2.flat()):
            assert np.array_equal(a, b)
        assert np.allclose(m2.m[0], 0.0)
        assert np.allclose(m2.v[0], 0.5 * cfg.beta2)

    def test_first_step_bias_corrected_direction(self):
        p = random_params(15)
        cfg = TrainConfig(epochs=1)
        grads = [np.random.default_rng(16 + i).normal(size=a.shape)
                 for i, a in enumerate(p.flat())]
        p2, _ = adam_step(p, grads, AdamMoments.zeros_like(p), 1, cfg)
        for a, b, g in zip(p.flat(), p2.flat(), grads):
            expected = a - cfg.lr * g / (np.abs(g) + cfg.eps)
            assert np.allclose(b, expected, rtol=1e-12, atol=1e-12)

    def test_loop_oracle_agreement(self):
        p = random_params(17)
        cfg = TrainConfig(epochs=1)
        rng = np.random.default_rng(18)
        grads = [rng.normal(size=a.shape) for a in p.flat()]
        moments = AdamMoments(
            m=[rng.normal(size=a.shape) * 0.1 for a in p.flat()],
            v=[rng.uniform(0, 0.1, size=a.shape) for a in p.flat()],
        )
        t = 7
        p2, m2 = adam_step(p, grads, moments, t, cfg)
        # scalar-loop re-implementation on the first bias vector
        i = 1  # b_in
        theta, g = p.flat()[i], grads[i]
        m, v = moments.m[i], moments.v[i]
        out = np.empty_like(theta)
        mm = np.empty_like(theta)
        vv = np.empty_like(theta)
        for j in range(theta.size):
            mj = cfg.beta1 * m[j] + (1 - cfg.beta1) * g[j]
            vj = cfg.beta2 * v[j] + (1 - cfg.beta2) * g[j] ** 2
            mhat = mj / (1 - cfg.beta1 ** t)
            vhat = vj / (1 - cfg.beta2 ** t)
            out[j] = theta[j] - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)
            mm[j], vv[j] = mj, vj
        assert np.allclose(p2.flat()[i], out, rtol=1e-14, atol=1e-16)
        assert np.allclose(m2.m[i], mm, rtol=1e-14)
        assert np.allclose(m2.v[i], vv, rtol=1e-14)


class TestTrain:
    def test_memorizes_tiny_dataset(self):
        X, Y = tiny_dataset(10)
        res = train((X, Y), TrainConfig(epochs=800, batch_size=100, seed=0))
        assert res.train_mae[-1] < 1e-3

    def test_training_curve_trends_down(self):
        X, Y = tiny_dataset(24, seed=3)
        res = train((X, Y), TrainConfig(epochs=400, seed=1))
        smooth = np.convolve(res.train_mae, np.ones(50) / 50, mode="valid")
        # monotone on the smoothed scale, small tolerance for plateau noise
        assert np.all(np.diff(smooth) < 1e-5)
        assert smooth[-1] < smooth[0]

    def test_deterministic_given_seed(self):
        X, Y = tiny_dataset(12, seed=5)
        cfg = TrainConfig(epochs=20, seed=9)
        r1 = train((X, Y), cfg)
        r2 = train((X, Y), cfg)
        assert np.array_equal(r1.train_mae, r2.train_mae)
        for a, b in zip(r1.params.flat(), r2.params.flat()):
            assert np.array_equal(a, b)

    def test_rejects_bad_shapes(self):
        with pytest.raises(SurrogateError):
            train((np.zeros((4, 7)), np.zeros((4, N_OUT))), TrainConfig(epochs=1))


class TestSerialization:
    def test_round_trip_identity(self, tmp_path):
        p = random_params(20)
        path = tmp_path / "m.bin"
        save_model(p, path)
        q = load_model(path)
        assert q.inner_relu == p.inner_relu
        for a, b in zip([p.x_mean, p.x_std] + p.flat(), [q.x_mean, q.x_std] + q.flat()):
            assert np.array_equal(a, b)

    def test_saved_bytes_deterministic(self, tmp_path):
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        save_model(init_params(42), a)
        save_model(init_params(42), b)
        assert a.read_bytes() == b.read_bytes()

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        save_model(random_params(21), path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"junkjunkjunk" * 10)
        with pytest.raises(ModelFormatError):
            load_model(path)
