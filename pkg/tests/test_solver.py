import numpy as np
import pytest

from sbecc.channel import RngStream, awgn_transmit, bpsk_modulate
from sbecc.denoiser import OracleDenoiser, ZeroDenoiser
from sbecc.gf2codes import encode, hard_decision, syndrome
from sbecc.schedule import NoiseSchedule, make_grid
from sbecc.solver import SolverConfig, decode, decode_batch, dpm2_step, euler_step, integrate

from conftest import all_messages

SCHED = NoiseSchedule()


def ml_decode(y, codewords):
    # nearest BPSK codeword in Euclidean distance
    d = ((y[:, None, :] - bpsk_modulate(codewords)[None]) ** 2).sum(axis=2)
    return codewords[d.argmin(axis=1)]


def exp_field_instances(count, n=7, seed=0):
    # sigma-blind field eps(x) = (x - x0)/c, exact flow x0 + exp((s - s0)/c)(y - x0)
    gen = RngStream(seed, 5).generator()
    x0 = bpsk_modulate(gen.integers(0, 2, (count, n)))
    y = x0 + 0.8 * gen.standard_normal((count, n))
    c = gen.uniform(0.3, 0.8, (count, 1))
    return x0, y, c


def exp_field_error(kind, n_steps, x0, y, c):
    grid = make_grid(SCHED, n_steps)
    x_end = integrate(y, lambda x, sig: (x - x0) / c, grid, kind)
    exact = x0 + np.exp((0.1 - 0.8) / c) * (y - x0)
    return np.linalg.norm(x_end - exact, axis=1)


def test_euler_step_examples():
    x = np.array([1.0, -1.0])
    assert np.array_equal(euler_step(x, np.zeros(2), 0.07), x)
    assert np.allclose(euler_step(x, [2.0, 0.0], 0.07), [0.86, -1.0], atol=1e-15)
    eps = np.array([0.3, -0.2])
    z = x
    for _ in range(5):
        z = euler_step(z, eps, 0.07)
    assert np.allclose(z, x - 5 * 0.07 * eps, atol=1e-14)
    with pytest.raises(ValueError):
        euler_step(x, eps, 0.0)


def test_dpm2_constant_field_matches_euler():
    x = np.array([0.3, -1.2, 0.9])
    c = np.array([1.0, -0.5, 2.0])
    x2, evals = dpm2_step(x, 0.8, 0.73, lambda z, s: c)
    assert evals == 2
    assert np.allclose(x2, euler_step(x, c, 0.07), atol=1e-15)
    with pytest.raises(ValueError):
        dpm2_step(x, 0.1, 0.8, lambda z, s: c)


def test_dpm2_queries_midpoint_sigma():
    seen = []
    dpm2_step(np.zeros(2), 0.8, 0.1, lambda z, s: (seen.append(s), np.zeros(2))[1])
    assert seen == [0.8, pytest.approx(0.45)]


@pytest.mark.parametrize("kind", ["euler", "dpm2"])
@pytest.mark.parametrize("n_steps", [10, 25])
def test_linear_oracle_field_endpoint(kind, n_steps):
    gen = RngStream(2).generator()
    x0 = bpsk_modulate(gen.integers(0, 2, (50, 7)))
    y = x0 + 0.8 * gen.standard_normal((50, 7))
    x_end = integrate(y, lambda x, sig: (x - x0) / sig, make_grid(SCHED, n_steps), kind)
    exact = x0 + (0.1 / 0.8) * (y - x0)
    err = np.linalg.norm(x_end - exact, axis=1)
    assert (err <= 0.05 * np.linalg.norm(y - x0, axis=1)).all()


def test_order_on_exponential_oracle_field():
    x0, y, c = exp_field_instances(100)
    ratios = {}
    for kind in ("euler", "dpm2"):
        e = [exp_field_error(kind, n, x0, y, c).mean() for n in (5, 10, 20)]
        ratios[kind] = (e[0] / e[1], e[1] / e[2])
    for r in ratios["euler"]:
        assert 1.7 <= r <= 2.4
    for r in ratios["dpm2"]:
        assert 3.2 <= r <= 4.8
    # and at equal step count dpm2 is more accurate on every instance
    assert (exp_field_error("dpm2", 10, x0, y, c) < exp_field_error("euler", 10, x0, y, c)).all()


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(kind="heun")
    with pytest.raises(ValueError):
        SolverConfig(n_steps=0)
    assert SolverConfig("dpm2", 3).grid.n_steps == 3
    assert SolverConfig("dpm2").evals_per_step == 2


@pytest.mark.parametrize("kind", ["euler", "dpm2"])
def test_noiseless_codewords_exit_immediately(hamming, kind):
    cws = encode(all_messages(4), hamming)
    res = decode_batch(bpsk_modulate(cws), hamming, ZeroDenoiser(), SolverConfig(kind, 10))
    assert (res.stop_iteration == 0).all() and (res.eval_count == 0).all()
    assert res.converged.all() and np.array_equal(res.bits, cws)


def test_zero_denoiser_equals_hard_decision(hamming):
    gen = RngStream(3).generator()
    y = awgn_transmit(bpsk_modulate(encode(gen.integers(0, 2, (2000, 4)), hamming)), 0.8, gen)
    for early in (True, False):
        res = decode_batch(y, hamming, ZeroDenoiser(), SolverConfig("euler", 10, early_exit=early))
        assert np.array_equal(res.bits, hard_decision(y))


def test_budget_exhaustion(hamming):
    y = np.array([1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0])  # syndrome non-zero, zero field never moves it
    res = decode(y, hamming, ZeroDenoiser(), SolverConfig("euler", 10))
    assert res.stop_iteration == 10 and not res.converged
    assert np.array_equal(res.bits, hard_decision(y)) and res.eval_count == 10


def test_dimension_mismatch(hamming):
    with pytest.raises(ValueError):
        decode(np.zeros(6), hamming, ZeroDenoiser(), SolverConfig())
    with pytest.raises(ValueError):
        decode(np.zeros((2, 7)), hamming, ZeroDenoiser(), SolverConfig())


def test_single_flip_oracle_matches_ml(hamming):
    cws = encode(all_messages(4), hamming)
    solver = SolverConfig("euler", 10)
    mags = np.linspace(0.1, 1.5, 15)
    rows, x0s = [], []
    for cw in cws:
        x0 = bpsk_modulate(cw)
        for j in range(7):
            for a in mags:
                y = x0.copy()
                y[j] = -a * x0[j]
                rows.append(y)
                x0s.append(x0)
    y, x0 = np.array(rows), np.array(x0s)
    res = decode_batch(y, hamming, OracleDenoiser(x0), solver)
    assert np.array_equal(res.bits, ml_decode(y, cws))
    assert np.array_equal(res.bits, hard_decision(x0))
    assert res.converged.all()


@pytest.mark.parametrize("kind,per_step", [("euler", 1), ("dpm2", 2)])
def test_eval_count_accounting(hamming, kind, per_step):
    gen = RngStream(4).generator()
    x0 = bpsk_modulate(encode(gen.integers(0, 2, (500, 4)), hamming))
    y = awgn_transmit(x0, 0.7, gen)
    res = decode_batch(y, hamming, OracleDenoiser(x0), SolverConfig(kind, 6))
    assert np.array_equal(res.eval_count, per_step * res.stop_iteration)
    assert (res.stop_iteration <= 6).all() and (res.eval_count <= 12).all()
    assert not syndrome(res.bits[res.converged], hamming.H).any()


def test_early_exit_rows_are_frozen(hamming):
    # an early-exited frame keeps its iterate; others keep moving
    x0 = bpsk_modulate(encode([[0, 0, 0, 0], [1, 0, 1, 1]], hamming))
    y = x0.copy()
    y[1, 2] *= -0.5
    res = decode_batch(y, hamming, OracleDenoiser(x0), SolverConfig("euler", 10), record=True)
    assert res.stop_iteration.tolist()[0] == 0 and res.stop_iteration[1] > 0
    assert all(np.array_equal(t[0], y[0]) for t in res.trajectory)
    assert len(res.trajectory) == res.stop_iteration[1] + 1


def test_denoiser_sees_active_rows_and_syndromes(hamming):
    calls = []

    def spy(x, s, sigma, idx):
        assert np.array_equal(s, syndrome(hard_decision(x), hamming.H))
        calls.append((idx.copy(), sigma))
        return np.zeros_like(x)

    y = bpsk_modulate(encode([[0, 0, 0, 0]] * 3, hamming))
    y[1, 0] = -0.3
    decode_batch(y, hamming, spy, SolverConfig("dpm2", 2))
    assert [c[0].tolist() for c in calls] == [[1]] * 4
    assert [c[1] for c in calls] == pytest.approx([0.8, 0.625, 0.45, 0.275])


def test_decode_trajectory(hamming):
    y = bpsk_modulate(encode([1, 1, 0, 0], hamming))
    y[3] *= -0.4
    res = decode(y, hamming, OracleDenoiser(bpsk_modulate(encode([1, 1, 0, 0], hamming))),
                 SolverConfig("euler", 10), record_trajectory=True)
    assert np.array_equal(res.trajectory[0], y)
    assert len(res.trajectory) == res.stop_iteration + 1
