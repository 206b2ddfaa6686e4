import numpy as np
import pytest

from sbecc.channel import RngStream, bpsk_modulate
from sbecc.denoiser import (DenoiserModel, OracleDenoiser, ZeroDenoiser, condition_parity_count,
                            init_model, load_checkpoint, loss_and_grad, oracle_point_eps,
                            predict_eps, predict_time_head, save_checkpoint)
from sbecc.gf2codes import encode, hard_decision, syndrome
from sbecc.schedule import NoiseSchedule
from sbecc.trainer import TrainConfig, sample_batch, train

from conftest import all_messages

SCHED = NoiseSchedule()


def batch(code, B=16, seed=0):
    return sample_batch(code, B, SCHED, RngStream(seed, 99))


def test_zero_weights_give_zero_output(hamming):
    model = DenoiserModel(7, 3, (56, 56))
    y, s, _, _ = batch(hamming)
    assert not predict_eps(model, y, s).any()


def test_identity_like_model(hamming):
    # single hidden layer of width 2n: relu(y) - relu(-y) = y
    model = DenoiserModel(7, 3, (14,))
    W0 = model.view("W0")
    W0[:7, :7] = np.eye(7)
    W0[:7, 7:] = -np.eye(7)
    W1 = model.view("W1")
    W1[:7] = np.eye(7)
    W1[7:] = -np.eye(7)
    y, s, _, _ = batch(hamming, 32)
    assert np.allclose(predict_eps(model, y, s), y, atol=1e-15)


def test_layer_widths_and_param_count(hamming):
    model = init_model(7, 3, seed=1)
    assert model.layer_widths == (10, 56, 56, 7)
    assert model.n_params == 10 * 56 + 56 + 56 * 56 + 56 + 56 * 7 + 7
    pc = init_model(7, 3, conditioning="parity_count")
    assert pc.view("emb").shape == (4, 56)
    pt = init_model(7, 3, conditioning="predicted_time")
    assert pt.layer_widths[0] == 11


def test_init_is_seeded_and_bounded():
    a, b, c = init_model(7, 3, seed=5), init_model(7, 3, seed=5), init_model(7, 3, seed=6)
    assert np.array_equal(a.params, b.params)
    assert not np.array_equal(a.params, c.params)
    assert np.abs(a.view("W0")).max() <= 1 / np.sqrt(10)
    assert np.abs(a.view("W1")).max() <= 1 / np.sqrt(56)


def test_predict_deterministic_and_single_frame(hamming):
    model = init_model(7, 3, seed=2)
    y, s, _, _ = batch(hamming)
    out = predict_eps(model, y, s)
    assert np.array_equal(out, predict_eps(model, y, s))
    # a different batch shape may take a different BLAS kernel: equal up to rounding
    assert np.allclose(predict_eps(model, y[3], s[3]), out[3], rtol=0, atol=1e-13)
    assert np.isfinite(out).all() and out.shape == (16, 7)


def test_predict_dimension_errors():
    model = init_model(7, 3)
    with pytest.raises(ValueError):
        predict_eps(model, np.zeros(6), np.zeros(3))
    with pytest.raises(ValueError):
        predict_eps(model, np.zeros(7), np.zeros(4))
    with pytest.raises(ValueError):
        predict_eps(model, np.zeros((2, 7)), np.zeros((3, 3)))


def test_nonfinite_activation_names_layer():
    model = init_model(7, 3)
    model.view("W1")[0, 0] = np.inf
    y = np.ones(7)
    with pytest.raises(FloatingPointError, match="W1"):
        predict_eps(model, y, np.zeros(3))


def test_bad_model_options():
    with pytest.raises(ValueError):
        DenoiserModel(7, 3, (8,), input_mode="absolute")
    with pytest.raises(ValueError):
        DenoiserModel(7, 3, (8,), conditioning="film")
    with pytest.raises(ValueError):
        DenoiserModel(7, 3, (8,), params=np.zeros(5))


@pytest.mark.parametrize("conditioning,gamma", [("none", 0.0), ("parity_count", 0.0),
                                                ("predicted_time", 0.1), ("predicted_time", 0.5)])
@pytest.mark.parametrize("input_mode", ["signed", "magnitude"])
def test_gradient_matches_finite_differences(hamming, conditioning, gamma, input_mode):
    model = init_model(7, 3, hidden_mult=2, input_mode=input_mode, conditioning=conditioning, seed=3)
    if conditioning == "parity_count":
        # non-zero embedding so the modulation path carries gradient both ways
        model.view("emb")[...] = RngStream(8).generator().uniform(-0.5, 0.5, model.view("emb").shape)
    y, s, eps, t = batch(hamming, 32, seed=4)
    _, grad, _ = loss_and_grad(model, y, s, eps, t, gamma)
    gen = RngStream(5).generator()
    idx = gen.choice(model.n_params, size=40, replace=False)
    if conditioning == "parity_count":
        off = model.n_params - model.view("emb").size
        idx = np.concatenate([idx, off + gen.choice(model.view("emb").size, 10, replace=False)])
    h = 1e-5
    checked = 0
    for i in idx:
        p_plus, p_minus = model.params.copy(), model.params.copy()
        p_plus[i] += h
        p_minus[i] -= h
        fd = (loss_and_grad(model, y, s, eps, t, gamma, params=p_plus)[0]
              - loss_and_grad(model, y, s, eps, t, gamma, params=p_minus)[0]) / (2 * h)
        if abs(fd) < 1e-7 and abs(grad[i]) < 1e-7:
            continue  # dead ReLU unit: both zero
        assert abs(grad[i] - fd) / (abs(fd) + 1e-8) < 1e-4, (model.names(), i)
        checked += 1
    assert checked >= 20


def test_joint_loss_needs_t(hamming):
    model = init_model(7, 3, conditioning="predicted_time")
    y, s, eps, _ = batch(hamming)
    with pytest.raises(ValueError):
        loss_and_grad(model, y, s, eps, None, 0.1)


def test_joint_loss_parts(hamming):
    model = init_model(7, 3, conditioning="predicted_time", seed=1)
    y, s, eps, t = batch(hamming)
    loss, _, parts = loss_and_grad(model, y, s, eps, t, 0.1)
    assert loss == pytest.approx(0.9 * parts["eps_loss"] + 0.1 * parts["time_loss"], rel=1e-14)


def test_magnitude_invariance_codeword_flips(hamming):
    # flipping signs on a codeword's support keeps |y| and s(y) unchanged
    model = init_model(7, 3, input_mode="magnitude", seed=7)
    y, s, _, _ = batch(hamming, 64, seed=2)
    base = predict_eps(model, y, s)
    for c in encode(all_messages(4), hamming):
        y2 = y * bpsk_modulate(c)
        s2 = syndrome(hard_decision(y2), hamming.H)
        assert np.array_equal(s2, s)
        assert np.array_equal(predict_eps(model, y2, s2), base)


def test_signed_model_is_sign_sensitive(hamming):
    model = init_model(7, 3, input_mode="signed", seed=7)
    y, s, _, _ = batch(hamming, 8)
    c = encode([1, 0, 0, 0], hamming)
    assert not np.allclose(predict_eps(model, y * bpsk_modulate(c), s), predict_eps(model, y, s))


def test_parity_count_modulation():
    model = init_model(7, 3, conditioning="parity_count")
    model.view("emb")[...] = np.arange(4 * 56).reshape(4, 56)
    assert np.array_equal(condition_parity_count(np.zeros(3), model), 1 + model.view("emb")[0])
    assert np.array_equal(condition_parity_count(np.ones(3), model), 1 + model.view("emb")[3])
    assert np.array_equal(condition_parity_count([1, 0, 1], model), condition_parity_count([0, 1, 1], model))
    with pytest.raises(ValueError):
        condition_parity_count(np.zeros(3), init_model(7, 3))


def test_time_head_zero_weights_and_determinism(hamming):
    model = init_model(7, 3, conditioning="predicted_time", seed=2)
    y, s, _, _ = batch(hamming)
    t1 = predict_time_head(model, y, s)
    assert np.array_equal(t1, predict_time_head(model, y, s))
    assert ((t1 > 0) & (t1 < 1)).all()
    for name in ("tW0", "tb0", "tW1", "tb1"):
        model.view(name)[...] = 0.0
    assert np.allclose(predict_time_head(model, y, s), 0.5)
    assert predict_time_head(model, y[0], s[0]) == 0.5
    with pytest.raises(ValueError):
        predict_time_head(init_model(7, 3), y, s)


def test_trained_time_head_beats_constant(hamming):
    cfg = TrainConfig(epochs=20, batches_per_epoch=100, batch_size=128, seed=0,
                      conditioning="predicted_time", gamma_time=0.1)
    model = init_model(7, 3, conditioning="predicted_time", seed=0)
    trained = train(model, cfg, hamming).model
    y, s, _, t = sample_batch(hamming, 4096, SCHED, RngStream(123, 7))
    t_hat = predict_time_head(trained, y, s)
    assert np.abs(t_hat - t).mean() < np.abs(0.5 - t).mean()


def test_oracle_point_eps():
    rng = np.random.default_rng(0)
    x0 = bpsk_modulate(rng.integers(0, 2, 7))
    eps = rng.standard_normal(7)
    assert not oracle_point_eps(x0, x0, 0.3).any()
    assert np.allclose(oracle_point_eps(x0 + 0.3 * eps, x0, 0.3), eps, atol=1e-14)
    x = x0 + eps
    assert np.allclose(oracle_point_eps(x, x0, 0.6), 0.5 * oracle_point_eps(x, x0, 0.3))
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            oracle_point_eps(x, x0, bad)


def test_oracle_and_zero_denoiser_protocol():
    x0 = np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])
    x = np.zeros((2, 2))
    o = OracleDenoiser(x0)
    assert np.array_equal(o(x, None, 0.5, idx=np.array([0, 2])), -2 * x0[[0, 2]])
    assert not ZeroDenoiser()(x, None, 0.5).any()


def test_checkpoint_round_trip(tmp_path, hamming):
    for cond in ("none", "parity_count", "predicted_time"):
        model = init_model(7, 3, conditioning=cond, input_mode="magnitude", seed=9)
        path = tmp_path / f"{cond}.bin"
        save_checkpoint(path, model, {"m": np.arange(3.0)}, meta={"epoch": 4})
        m2, arrays, meta = load_checkpoint(path)
        assert np.array_equal(m2.params, model.params)
        assert m2.architecture() == model.architecture()
        assert arrays["m"].tolist() == [0.0, 1.0, 2.0] and meta == {"epoch": 4}
        y, s, _, _ = batch(hamming)
        assert np.array_equal(predict_eps(m2, y, s), predict_eps(model, y, s))


def test_checkpoint_format(tmp_path):
    model = init_model(7, 3)
    path = tmp_path / "m.bin"
    save_checkpoint(path, model)
    raw = path.read_bytes()
    assert raw.startswith(b"SBECCKPT")
    header = raw[8:raw.index(b"\n")]
    assert b'"format_version": 1' in header
    payload = raw[raw.index(b"\n") + 1:]
    assert np.array_equal(np.frombuffer(payload, "<f8"), model.params)


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_checkpoint(p)
    model = init_model(7, 3)
    good = tmp_path / "good.bin"
    save_checkpoint(good, model)
    p.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError, match="size"):
        load_checkpoint(p)
