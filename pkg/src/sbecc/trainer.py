"""Noise-prediction training of the MLP denoiser with Adam and cosine annealing.

Each batch follows the standard recipe: draw random messages, encode and
BPSK-modulate them into ``x0``, draw ``t ~ U(0, 1)`` and ``eps ~ N(0, I)`` per
sample, form ``y = x0 + sigma(t) eps``, take the hard-decision syndrome of
``y`` and regress ``eps``. Batch ``b`` of epoch ``e`` draws its randomness
from ``RngStream(seed, (1, e, b))``, so runs resumed from a checkpoint follow
the uninterrupted trajectory bit for bit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import RngStream, bpsk_modulate
from .denoiser import DenoiserModel, load_checkpoint, loss_and_grad, save_checkpoint
from .gf2codes import LinearCode, encode, hard_decision, syndrome
from .schedule import NoiseSchedule, sigma_of_t

__all__ = [
    "TrainConfig",
    "OptimizerState",
    "TrainingDiverged",
    "dsm_loss",
    "joint_time_loss",
    "cosine_lr",
    "adam_update",
    "sample_batch",
    "train_batch",
    "train",
    "TrainResult",
    "FULL_SCALE",
]

log = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# published-scale preset; the dataclass defaults are the desk-scale run
FULL_SCALE = {"epochs": 1500, "batches_per_epoch": 1000, "batch_size": 256}


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batches_per_epoch: int = 200
    batch_size: int = 128
    lr: float = 5e-4
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    gamma_time: float = 0.1
    seed: int = 0
    input_mode: str = "signed"
    conditioning: str = "none"
    hidden_mult: int = 8
    checkpoint_every: int = 0

    def __post_init__(self):
        for name in ("epochs", "batches_per_epoch", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.gamma_time < 1.0:
            raise ValueError("gamma_time must lie in [0, 1)")

    @property
    def total_steps(self) -> int:
        return self.epochs * self.batches_per_epoch


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "OptimizerState":
        return cls(np.zeros(n_params), np.zeros(n_params), 0)


def dsm_loss(eps_hat, eps) -> float:
    """Mean squared error between predicted and true noise."""
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps_hat.shape != eps.shape:
        raise ValueError(f"shape mismatch {eps_hat.shape} vs {eps.shape}")
    return float(np.mean((eps_hat - eps) ** 2))


def joint_time_loss(eps_loss: float, t_hat, t, gamma_time: float) -> float:
    if not 0.0 <= gamma_time < 1.0:
        raise ValueError("gamma_time must lie in [0, 1)")
    t_loss = float(np.mean((np.asarray(t_hat, dtype=np.float64) - np.asarray(t, dtype=np.float64)) ** 2))
    return (1.0 - gamma_time) * eps_loss + gamma_time * t_loss


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    if not 0 <= step <= total_steps:
        raise ValueError("step must lie in [0, total_steps]")
    return base_lr * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0


def adam_update(params: np.ndarray, grad: np.ndarray, state: OptimizerState, lr: float) -> None:
    """One in-place Adam step with bias correction."""
    b1, b2 = ADAM_BETAS
    state.step += 1
    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    state.v += (1.0 - b2) * grad * grad
    m_hat = state.m / (1.0 - b1 ** state.step)
    v_hat = state.v / (1.0 - b2 ** state.step)
    params -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def sample_batch(code: LinearCode, batch_size: int, schedule: NoiseSchedule, rng):
    """One training batch: ``(y, s, eps, t)``."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    msgs = gen.integers(0, 2, size=(batch_size, code.k), dtype=np.uint8)
    x0 = bpsk_modulate(encode(msgs, code))
    t = gen.random(batch_size)
    eps = gen.standard_normal((batch_size, code.n))
    y = x0 + sigma_of_t(t, schedule)[:, None] * eps
    s = syndrome(hard_decision(y), code.H)
    return y, s, eps, t


def train_batch(model: DenoiserModel, opt: OptimizerState, config: TrainConfig, code: LinearCode,
                rng, lr: float | None = None):
    """Sample a batch, take one Adam step on ``model.params`` in place; return the loss."""
    y, s, eps, t = sample_batch(code, config.batch_size, config.schedule, rng)
    loss, grad, _ = loss_and_grad(model, y, s, eps, t, config.gamma_time)
    if not (math.isfinite(loss) and np.isfinite(grad).all()):
        raise TrainingDiverged(f"non-finite loss {loss} at optimizer step {opt.step} (lr={lr})")
    adam_update(model.params, grad, opt, config.lr if lr is None else lr)
    return model, opt, loss


@dataclass
class TrainResult:
    model: DenoiserModel
    opt: OptimizerState
    history: list[dict]
    checkpoints: list[Path] = field(default_factory=list)


def _write_log(path: Path, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mean_loss", "lr"])
        for row in history:
            w.writerow([row["epoch"], repr(row["mean_loss"]), repr(row["lr"])])


def save_training_state(path, model: DenoiserModel, opt: OptimizerState, history: list[dict],
                        epoch: int, fingerprint: str = "") -> None:
    save_checkpoint(path, model, {"adam_m": opt.m, "adam_v": opt.v},
                    meta={"adam_step": opt.step, "epoch": epoch, "history": history,
                          "fingerprint": fingerprint})


def load_training_state(path):
    model, arrays, meta = load_checkpoint(path)
    opt = OptimizerState(arrays["adam_m"], arrays["adam_v"], int(meta["adam_step"]))
    return model, opt, meta["history"], int(meta["epoch"])


def train(model: DenoiserModel, config: TrainConfig, code: LinearCode, out_dir=None,
          resume_from=None, fingerprint: str = "", progress=None) -> TrainResult:
    """Run the fixed epoch budget; the model passed in is updated in place.

    ``resume_from`` names a checkpoint written by an earlier call; training
    continues from the epoch after it. With ``out_dir`` the loss log goes to
    ``train_log.csv`` and checkpoints to ``ckpt_epoch{e}.bin`` every
    ``checkpoint_every`` epochs, plus ``final.bin``.
    """
    if (model.n, model.m) != (code.n, code.m):
        raise ValueError("model dimensions do not match the code")
    opt = OptimizerState.zeros(model.n_params)
    history: list[dict] = []
    start_epoch = 0
    if resume_from is not None:
        loaded, opt, history, start_epoch = load_training_state(resume_from)
        model.params[...] = loaded.params
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    saved: list[Path] = []
    stream = RngStream(config.seed)
    total = config.total_steps
    for epoch in range(start_epoch, config.epochs):
        losses = np.empty(config.batches_per_epoch)
        for b in range(config.batches_per_epoch):
            lr = cosine_lr(epoch * config.batches_per_epoch + b, total, config.lr)
            _, _, losses[b] = train_batch(model, opt, config, code, stream.child(1, epoch, b), lr)
        row = {"epoch": epoch + 1, "mean_loss": float(losses.mean()), "lr": lr}
        history.append(row)
        log.debug("epoch %d loss %.5f lr %.2e", epoch + 1, row["mean_loss"], lr)
        if progress is not None:
            progress(row)
        if out is not None and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            p = out / f"ckpt_epoch{epoch + 1}.bin"
            save_training_state(p, model, opt, history, epoch + 1, fingerprint)
            saved.append(p)
    if out is not None:
        p = out / "final.bin"
        save_training_state(p, model, opt, history, config.epochs, fingerprint)
        saved.append(p)
        _write_log(out / "train_log.csv", history)
    return TrainResult(model, opt, history, saved)
