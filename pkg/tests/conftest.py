import itertools
import time

import numpy as np
import pytest

from sbecc.denoiser import init_model
from sbecc.gf2codes import load_code
from sbecc.trainer import TrainConfig, train

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def hamming():
    return load_code("hamming74")


@pytest.fixture(scope="session")
def rep3():
    return load_code("repetition3")


@pytest.fixture(scope="session")
def ldpc():
    return load_code("ldpc49_24")


@pytest.fixture(scope="session")
def bch():
    return load_code("bch31_16")


def all_messages(k):
    return np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8)


def timed_train(model, config, code):
    t0 = time.perf_counter()
    run = train(model, config, code)
    run.seconds = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def desk_config():
    # the desk-scale run: 50 epochs x 200 batches x batch 128, seed 0
    return TrainConfig(epochs=50, batches_per_epoch=200, batch_size=128, seed=0)


@pytest.fixture(scope="session")
def signed_run(hamming, desk_config):
    model = init_model(hamming.n, hamming.m, input_mode="signed", seed=0)
    return timed_train(model, desk_config, hamming)


@pytest.fixture(scope="session")
def magnitude_run(hamming, desk_config):
    cfg = TrainConfig(**{**desk_config.__dict__, "input_mode": "magnitude"})
    model = init_model(hamming.n, hamming.m, input_mode="magnitude", seed=0)
    return timed_train(model, cfg, hamming)
