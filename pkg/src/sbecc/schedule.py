"""Linear variance-exploding noise schedule and its uniform sigma grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import as_generator

__all__ = ["NoiseSchedule", "SigmaGrid", "sigma_of_t", "make_grid", "perturb", "t_of_sigma"]


@dataclass(frozen=True)
class NoiseSchedule:
    sigma_min: float = 0.1
    sigma_max: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.sigma_min < self.sigma_max:
            raise ValueError(f"need 0 < sigma_min < sigma_max, got ({self.sigma_min}, {self.sigma_max})")


@dataclass(frozen=True)
class SigmaGrid:
    """Descending noise levels ``sigma_max = sigmas[0] > ... > sigmas[N] = sigma_min``."""

    sigmas: np.ndarray
    delta: float

    @property
    def n_steps(self) -> int:
        return len(self.sigmas) - 1


def sigma_of_t(t, schedule: NoiseSchedule):
    """``sigma_min + (sigma_max - sigma_min) t`` for t in [0, 1]; vectorised."""
    t_arr = np.asarray(t, dtype=np.float64)
    if ((t_arr < 0.0) | (t_arr > 1.0)).any() or np.isnan(t_arr).any():
        raise ValueError("t must lie in [0, 1]")
    out = schedule.sigma_min + (schedule.sigma_max - schedule.sigma_min) * t_arr
    return float(out) if out.ndim == 0 else out


def t_of_sigma(sigma: float, schedule: NoiseSchedule) -> float:
    """Inverse of the schedule (no range check: channel sigmas may fall outside)."""
    return (sigma - schedule.sigma_min) / (schedule.sigma_max - schedule.sigma_min)


def make_grid(schedule: NoiseSchedule, n_steps: int) -> SigmaGrid:
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    span = schedule.sigma_max - schedule.sigma_min
    k = np.arange(n_steps, -1, -1, dtype=np.float64)
    sigmas = schedule.sigma_min + span * k / n_steps
    # pin the endpoints exactly
    sigmas[0], sigmas[-1] = schedule.sigma_max, schedule.sigma_min
    sigmas.setflags(write=False)
    return SigmaGrid(sigmas, span / n_steps)


def perturb(x0, t, schedule: NoiseSchedule, rng):
    """Forward VE perturbation ``x_t = x0 + sigma(t) eps``; returns ``(x_t, eps)``.

    ``t`` may be a scalar or one value per leading-axis row of ``x0``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    sig = np.asarray(sigma_of_t(t, schedule))
    if sig.ndim == 1:
        sig = sig[:, None]
    eps = as_generator(rng).standard_normal(x0.shape)
    return x0 + sig * eps, eps
