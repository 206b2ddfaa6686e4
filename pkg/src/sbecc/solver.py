"""Probability-flow ODE decoding in sigma-space with syndrome early exit.

The ODE is ``dx = eps_hat(x, s(x)) dsigma``, integrated from ``sigma_max``
down to ``sigma_min`` on a uniform grid. Before every step the iterate is
hard-decided and its syndrome computed; a zero syndrome ends decoding for
that frame. Frames are decoded in batches; finished frames drop out of the
batch, so the denoiser only sees the still-active rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gf2codes import LinearCode, hard_decision, syndrome
from .schedule import NoiseSchedule, SigmaGrid, make_grid

__all__ = [
    "SOLVERS",
    "SolverConfig",
    "DecodeResult",
    "BatchDecodeResult",
    "euler_step",
    "dpm2_step",
    "decode",
    "decode_batch",
    "integrate",
]

SOLVERS = ("euler", "dpm2")

EpsFn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class SolverConfig:
    kind: str = "euler"
    n_steps: int = 10
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    early_exit: bool = True

    def __post_init__(self):
        if self.kind not in SOLVERS:
            raise ValueError(f"solver kind must be one of {SOLVERS}, got {self.kind!r}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def grid(self) -> SigmaGrid:
        return make_grid(self.schedule, self.n_steps)

    @property
    def evals_per_step(self) -> int:
        return 1 if self.kind == "euler" else 2


@dataclass
class DecodeResult:
    bits: np.ndarray
    stop_iteration: int
    converged: bool
    eval_count: int
    trajectory: list[np.ndarray] | None = None


@dataclass
class BatchDecodeResult:
    """Per-frame arrays for a batch of decodes."""

    bits: np.ndarray
    stop_iteration: np.ndarray
    converged: np.ndarray
    eval_count: np.ndarray
    trajectory: list[np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.bits)

    def frame(self, i: int) -> DecodeResult:
        return DecodeResult(self.bits[i], int(self.stop_iteration[i]), bool(self.converged[i]),
                            int(self.eval_count[i]))


def euler_step(x, eps_hat, delta_sigma: float) -> np.ndarray:
    """``x - delta_sigma * eps_hat``."""
    if not delta_sigma > 0:
        raise ValueError("delta_sigma must be positive")
    return np.asarray(x, dtype=np.float64) - delta_sigma * np.asarray(eps_hat, dtype=np.float64)


def dpm2_step(x, sigma_from: float, sigma_to: float, eps_fn: Callable[[np.ndarray, float], np.ndarray]):
    """Second-order midpoint step on ``dx/dsigma = eps_hat(x)``.

    ``eps_fn(x, sigma)`` is queried at the start point and at the half step
    (with the half-step noise level). Returns ``(x_next, 2)``.
    """
    if not sigma_from > sigma_to:
        raise ValueError("dpm2 integrates towards lower sigma")
    x = np.asarray(x, dtype=np.float64)
    h = sigma_from - sigma_to
    e1 = eps_fn(x, sigma_from)
    x_mid = x - 0.5 * h * e1
    e2 = eps_fn(x_mid, sigma_from - 0.5 * h)
    return x - h * e2, 2


def integrate(x, eps_fn: Callable[[np.ndarray, float], np.ndarray], grid: SigmaGrid, kind: str = "euler"):
    """Run the full grid without early exit; ``eps_fn(x, sigma)``. Returns the endpoint."""
    x = np.asarray(x, dtype=np.float64)
    for i in range(grid.n_steps):
        s_from, s_to = grid.sigmas[i], grid.sigmas[i + 1]
        if kind == "euler":
            x = x - (s_from - s_to) * eps_fn(x, s_from)
        else:
            x, _ = dpm2_step(x, s_from, s_to, eps_fn)
    return x


def decode_batch(y, code: LinearCode, denoiser: EpsFn, solver: SolverConfig,
                 record: bool = False) -> BatchDecodeResult:
    """Decode a batch ``y: (B, n)``.

    ``denoiser(x, s, sigma, idx)`` returns ``eps_hat`` for the active rows;
    ``idx`` are their row indices in ``y``. ``stop_iteration`` is the first
    iteration whose hard decision had zero syndrome, or ``n_steps`` when none
    did before the budget ran out. With ``record=True`` the result carries a
    ``trajectory`` list of full-batch iterates, one per completed step.
    """
    x = np.array(y, dtype=np.float64, ndmin=2)
    if x.shape[1] != code.n:
        raise ValueError(f"received length {x.shape[1]} != n = {code.n}")
    B = x.shape[0]
    grid = solver.grid
    H = code.H
    stop = np.full(B, solver.n_steps, dtype=np.int64)
    evals = np.zeros(B, dtype=np.int64)
    found = np.zeros(B, dtype=bool)
    active = np.arange(B)
    traj = [x.copy()] if record else None
    for i in range(solver.n_steps):
        xa = x[active]
        s = syndrome(hard_decision(xa), H)
        zero = ~s.any(axis=1)
        newly = zero & ~found[active]
        stop[active[newly]] = i
        found[active[newly]] = True
        if solver.early_exit:
            keep = ~zero
            active, xa, s = active[keep], xa[keep], s[keep]
        if active.size == 0:
            break
        if solver.kind == "euler":
            x[active] = euler_step(xa, denoiser(xa, s, grid.sigmas[i], active), grid.delta)
            evals[active] += 1
        else:
            def eps_fn(z, sig, _idx=active):
                return denoiser(z, syndrome(hard_decision(z), H), sig, _idx)
            x[active], _ = dpm2_step(xa, grid.sigmas[i], grid.sigmas[i + 1], eps_fn)
            evals[active] += 2
        if record:
            traj.append(x.copy())
    bits = hard_decision(x)
    converged = ~syndrome(bits, H).any(axis=1)
    out = BatchDecodeResult(bits, stop, converged, evals)
    out.trajectory = traj
    return out


def decode(y, code: LinearCode, denoiser: EpsFn, solver: SolverConfig,
           record_trajectory: bool = False) -> DecodeResult:
    """Decode a single received vector."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("decode expects one received vector; use decode_batch for batches")
    res = decode_batch(y[None], code, denoiser, solver, record=record_trajectory)
    out = res.frame(0)
    if record_trajectory:
        out.trajectory = [x[0] for x in res.trajectory]
    return out
