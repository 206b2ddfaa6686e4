"""Score-based soft decoding of binary linear block codes.

Submodules: ``gf2codes`` (code algebra, alist I/O), ``channel`` (BPSK, AWGN,
Rayleigh), ``schedule`` (VE noise schedule), ``denoiser`` (noise-prediction
MLP and analytic oracles), ``trainer``, ``solver`` (sigma-space ODE decoding),
``bp`` (sum-product baseline), ``harness`` (Monte-Carlo evaluation) and
``cli``.
"""

__version__ = "0.1.0"

from .channel import RngStream, awgn_transmit, bpsk_modulate, ebno_to_sigma, rayleigh_transmit
from .gf2codes import LinearCode, encode, hard_decision, load_code, syndrome
from .schedule import NoiseSchedule, make_grid
from .solver import SolverConfig, decode, decode_batch

__all__ = [
    "LinearCode", "load_code", "encode", "syndrome", "hard_decision",
    "RngStream", "bpsk_modulate", "ebno_to_sigma", "awgn_transmit", "rayleigh_transmit",
    "NoiseSchedule", "make_grid", "SolverConfig", "decode", "decode_batch",
]
