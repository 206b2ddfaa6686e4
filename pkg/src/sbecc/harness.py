"""Monte-Carlo BER/BLER evaluation and the derived metrics.

Frames are simulated in fixed-size blocks. Block ``b`` at SNR index ``j``
draws messages and channel noise from ``RngStream(seed, (2, j, b))``, so a
block's outcome does not depend on which worker runs it. Blocks are
combined in index order and the stopping rule is applied frame by frame in
that order, so the reported counts are identical for any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bp import TannerGraph, bp_decode_batch, llr_from_channel
from .channel import RngStream, awgn_transmit, bpsk_modulate, ebno_to_sigma, rayleigh_transmit
from .denoiser import OracleDenoiser
from .gf2codes import LinearCode, encode, hard_decision, syndrome
from .solver import BatchDecodeResult, SolverConfig, decode_batch

__all__ = [
    "StopRule",
    "PointReport",
    "EvalReport",
    "HardDecisionDecoder",
    "SbeccDecoder",
    "BPDecoder",
    "GenieDecoder",
    "evaluate",
    "neg_ln_ber",
    "snr_gain",
    "speedup",
    "stop_iter_stats",
    "normal_ci",
    "q_function",
    "time_decoder",
    "fingerprint",
    "CSV_COLUMNS",
    "DESK_STOP",
    "FULL_STOP",
]

CHANNELS = ("awgn", "rayleigh")


@dataclass(frozen=True)
class StopRule:
    target_frame_errors: int = 100
    max_frames: int = 100_000

    def __post_init__(self):
        if self.target_frame_errors < 1 or self.max_frames < 1:
            raise ValueError("stop rule counts must be positive")


DESK_STOP = StopRule(100, 100_000)
FULL_STOP = StopRule(500, 10**8)


# --- decoders -------------------------------------------------------------------
# A decoder maps a received batch to a BatchDecodeResult:
#     decoder(y, sigma_ch, tx) -> BatchDecodeResult
# ``tx`` (the transmitted BPSK symbols) is only read by the genie decoder.

class HardDecisionDecoder:
    name = "hard"

    def __init__(self, code: LinearCode):
        self.code = code

    def __call__(self, y, sigma_ch, tx=None) -> BatchDecodeResult:
        bits = hard_decision(y)
        conv = ~syndrome(bits, self.code.H).any(axis=1)
        zeros = np.zeros(len(bits), dtype=np.int64)
        return BatchDecodeResult(bits, zeros, conv, zeros.copy())


class SbeccDecoder:
    name = "sbecc"

    def __init__(self, code: LinearCode, denoiser, solver: SolverConfig):
        self.code, self.denoiser, self.solver = code, denoiser, solver

    def __call__(self, y, sigma_ch, tx=None) -> BatchDecodeResult:
        return decode_batch(y, self.code, self.denoiser, self.solver)


class GenieDecoder:
    """Score-based decoding with the exact point-mass field of the transmitted word."""

    name = "genie"

    def __init__(self, code: LinearCode, solver: SolverConfig):
        self.code, self.solver = code, solver

    def __call__(self, y, sigma_ch, tx=None) -> BatchDecodeResult:
        return decode_batch(y, self.code, OracleDenoiser(tx), self.solver)


class BPDecoder:
    name = "bp"

    def __init__(self, code: LinearCode, max_iters: int = 50):
        self.code = code
        self.graph = TannerGraph.from_parity_check(code.H)
        self.max_iters = max_iters

    def __call__(self, y, sigma_ch, tx=None) -> BatchDecodeResult:
        # a noiseless channel gives infinitely reliable observations
        sig = sigma_ch if sigma_ch > 0 else 1e-3
        return bp_decode_batch(llr_from_channel(y, sig), self.graph, self.max_iters)


# --- metrics -------------------------------------------------------------------

def q_function(x: float) -> float:
    """Gaussian tail probability ``P(Z > x)``."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def neg_ln_ber(ber: float) -> float:
    """``-ln(ber)``; a zero BER gives ``inf`` (reported next to the raw counts)."""
    if not 0.0 <= ber <= 1.0:
        raise ValueError(f"ber must lie in [0, 1], got {ber}")
    return math.inf if ber == 0.0 else -math.log(ber)


def normal_ci(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Normal-approximation 95% interval for a binomial proportion, clipped to [0, 1]."""
    if trials <= 0:
        return (0.0, 1.0)
    p = errors / trials
    half = z * math.sqrt(p * (1.0 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def speedup(time_euler: float, time_dpm: float) -> float:
    """Percent wall-clock reduction of the DPM run relative to Euler."""
    if not (time_euler > 0 and time_dpm > 0):
        raise ValueError("times must be positive")
    return (time_euler - time_dpm) / time_euler * 100.0


def stop_iter_stats(results) -> tuple[float, float]:
    """Mean and population std of ``stop_iteration``.

    Accepts a sequence of DecodeResult, a BatchDecodeResult, or an array of
    stop iterations.
    """
    if isinstance(results, BatchDecodeResult):
        it = np.asarray(results.stop_iteration, dtype=np.float64)
    else:
        items = list(results) if not isinstance(results, np.ndarray) else results
        if len(items) == 0:
            raise ValueError("stop_iter_stats needs at least one result")
        it = np.asarray([getattr(r, "stop_iteration", r) for r in items], dtype=np.float64)
    if it.size == 0:
        raise ValueError("stop_iter_stats needs at least one result")
    return float(it.mean()), float(it.std())


def snr_gain(curve_ref, curve_new, at_db: float) -> float:
    """``at_db`` minus the Eb/N0 at which the reference reaches the new curve's value.

    Both curves are ``[(ebno_db, neg_ln_ber), ...]``; interpolation is linear
    in the ``-ln(BER)`` domain and never extrapolates. With this sign
    convention a new decoder that beats the reference gets a negative value
    (the reference needs more Eb/N0 to catch up).
    """
    ref = sorted((float(a), float(b)) for a, b in curve_ref)
    new = sorted((float(a), float(b)) for a, b in curve_new)
    new_db = [p[0] for p in new]
    if not new_db[0] <= at_db <= new_db[-1]:
        raise ValueError(f"{at_db} dB outside the new curve's range {new_db[0]}..{new_db[-1]}")
    target = float(np.interp(at_db, new_db, [p[1] for p in new]))
    ref_db = np.array([p[0] for p in ref])
    ref_v = np.array([p[1] for p in ref])
    if np.any(np.diff(ref_v) <= 0):
        raise ValueError("reference curve must be strictly increasing in -ln(BER)")
    if not ref_v[0] <= target <= ref_v[-1]:
        raise ValueError(f"target -ln(BER)={target:.4g} outside reference range "
                         f"{ref_v[0]:.4g}..{ref_v[-1]:.4g}")
    return at_db - float(np.interp(target, ref_v, ref_db))


# --- evaluation ----------------------------------------------------------------

@dataclass
class PointReport:
    ebno_db: float
    sigma_ch: float
    frames: int
    frame_errors: int
    bit_errors: int
    undetected_errors: int
    ber: float
    bler: float
    neg_ln_ber: float
    ber_ci: tuple[float, float]
    bler_ci: tuple[float, float]
    stop_iter_mean: float
    stop_iter_std: float
    eval_count_mean: float
    converged_frames: int
    decoder_failures: int = 0
    wall_time_seconds: float = 0.0


@dataclass
class EvalReport:
    code: str
    n: int
    k: int
    decoder: str
    channel: str
    solver: str
    n_steps: int
    seed: int
    block_size: int
    stop: StopRule
    points: list[PointReport] = field(default_factory=list)
    config_fingerprint: str = ""

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        for p in d["points"]:
            if not timing:
                p.pop("wall_time_seconds")
            # JSON has no inf; keep the sentinel explicit
            if math.isinf(p["neg_ln_ber"]):
                p["neg_ln_ber"] = "inf"
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        d["stop"] = StopRule(**d["stop"])
        pts = []
        for p in d["points"]:
            p = dict(p)
            p["neg_ln_ber"] = math.inf if p["neg_ln_ber"] == "inf" else p["neg_ln_ber"]
            p["ber_ci"], p["bler_ci"] = tuple(p["ber_ci"]), tuple(p["bler_ci"])
            pts.append(PointReport(**p))
        d["points"] = pts
        return cls(**d)

    def curve(self) -> list[tuple[float, float]]:
        return [(p.ebno_db, p.neg_ln_ber) for p in self.points]

    def csv_rows(self) -> list[list]:
        return [[self.code, self.decoder, self.solver, self.n_steps, p.ebno_db, p.frames,
                  p.frame_errors, p.bit_errors, p.ber, p.bler, p.neg_ln_ber, p.stop_iter_mean,
                  p.stop_iter_std, p.eval_count_mean, p.wall_time_seconds] for p in self.points]

    def to_csv(self, timing: bool = True) -> str:
        cols = CSV_COLUMNS if timing else CSV_COLUMNS[:-1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["# fingerprint", self.config_fingerprint])
        w.writerow(cols)
        for row in self.csv_rows():
            w.writerow([_fmt(v) for v in row[:len(cols)]])
        return buf.getvalue()

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["# fingerprint", self.config_fingerprint])
        w.writerow(["ebno_db", "ber", "ber_lo", "ber_hi", "bler", "bler_lo", "bler_hi", "neg_ln_ber"])
        for p in self.points:
            w.writerow([_fmt(v) for v in (p.ebno_db, p.ber, *p.ber_ci, p.bler, *p.bler_ci, p.neg_ln_ber)])
        return buf.getvalue()


CSV_COLUMNS = ["code", "decoder", "solver", "n_steps", "ebno_db", "frames", "frame_errors",
               "bit_errors", "ber", "bler", "neg_ln_ber", "stop_iter_mean", "stop_iter_std",
               "eval_mean", "wall_s"]


def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return v


def fingerprint(config: dict) -> str:
    """Short hash of a canonicalised config (sorted keys, no whitespace)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _labels(decoder, solver_name, n_steps):
    solver = getattr(decoder, "solver", None)
    if solver_name is None:
        solver_name = solver.kind if solver is not None else "-"
    if n_steps is None:
        n_steps = solver.n_steps if solver is not None else getattr(decoder, "max_iters", 0)
    return solver_name, n_steps


_BLOCK_KEYS = ("bit_err", "frame_err", "undetected", "stop", "evals", "conv", "failed")


def _simulate_block(code, decoder, channel, sigma, stream: RngStream, size: int):
    gen = stream.generator()
    msgs = gen.integers(0, 2, size=(size, code.k), dtype=np.uint8)
    bits = encode(msgs, code)
    tx = bpsk_modulate(bits)
    if channel == "awgn":
        y = awgn_transmit(tx, sigma, gen)
    else:
        y = rayleigh_transmit(tx, sigma, gen)
    try:
        res = decoder(y, sigma, tx)
        failed = np.zeros(size, dtype=bool)
    except Exception:  # a decoder crash counts every frame of the block as an error
        res = BatchDecodeResult(1 - bits, np.zeros(size, np.int64), np.zeros(size, bool),
                                np.zeros(size, np.int64))
        failed = np.ones(size, dtype=bool)
    bit_err = (res.bits != bits).sum(axis=1)
    return {
        "bit_err": bit_err,
        "frame_err": (bit_err > 0) | failed,
        "undetected": (bit_err > 0) & res.converged,
        "stop": res.stop_iteration,
        "evals": res.eval_count,
        "conv": res.converged,
        "failed": failed,
    }


def evaluate(code: LinearCode, decoder, ebno_list, stop: StopRule = DESK_STOP, seed: int = 0,
             channel: str = "awgn", block_size: int = 256, workers: int = 1,
             solver_name: str | None = None, n_steps: int | None = None,
             config_fingerprint: str = "") -> EvalReport:
    """Simulate frames per Eb/N0 point until ``stop`` triggers.

    ``solver_name`` and ``n_steps`` label the report; by default they are read
    from the decoder (its solver config, or its BP iteration budget).
    """
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    ebno_list = list(ebno_list)
    if not ebno_list:
        raise ValueError("ebno_list must not be empty")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    solver_name, n_steps = _labels(decoder, solver_name, n_steps)
    report = EvalReport(code.name, code.n, code.k, getattr(decoder, "name", type(decoder).__name__),
                        channel, solver_name, n_steps, seed, block_size, stop,
                        config_fingerprint=config_fingerprint)
    workers = max(1, int(workers))
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for j, ebno in enumerate(ebno_list):
            t0 = time.perf_counter()
            sigma = ebno_to_sigma(ebno, code.rate)
            base = RngStream(seed, (2, j))
            acc = {key: [] for key in _BLOCK_KEYS}
            frames = ferr = 0
            block = 0
            finished = False
            while not finished:
                ids = range(block, block + workers)
                sizes = [min(block_size, stop.max_frames - b * block_size) for b in ids]
                jobs = [(b, s) for b, s in zip(ids, sizes) if s > 0]
                args = [(code, decoder, channel, sigma, base.child(b), s) for b, s in jobs]
                if pool is None:
                    outs = [_simulate_block(*a) for a in args]
                else:
                    outs = list(pool.map(lambda a: _simulate_block(*a), args))
                block += workers
                for out in outs:
                    cum = ferr + np.cumsum(out["frame_err"])
                    hit = np.flatnonzero(cum >= stop.target_frame_errors)
                    take = len(out["frame_err"]) if hit.size == 0 else int(hit[0]) + 1
                    take = min(take, stop.max_frames - frames)
                    for key in acc:
                        acc[key].append(out[key][:take])
                    frames += take
                    ferr += int(out["frame_err"][:take].sum())
                    if ferr >= stop.target_frame_errors or frames >= stop.max_frames:
                        finished = True
                        break
                if not jobs:
                    finished = True
            cat = {key: np.concatenate(v) for key, v in acc.items()}
            bit_errors = int(cat["bit_err"].sum())
            ber = bit_errors / (frames * code.n)
            bler = ferr / frames
            mean_it, std_it = stop_iter_stats(cat["stop"])
            report.points.append(PointReport(
                ebno_db=float(ebno), sigma_ch=sigma, frames=frames, frame_errors=ferr,
                bit_errors=bit_errors, undetected_errors=int(cat["undetected"].sum()),
                ber=ber, bler=bler, neg_ln_ber=neg_ln_ber(ber),
                ber_ci=normal_ci(bit_errors, frames * code.n), bler_ci=normal_ci(ferr, frames),
                stop_iter_mean=mean_it, stop_iter_std=std_it,
                eval_count_mean=float(cat["evals"].mean()), converged_frames=int(cat["conv"].sum()),
                decoder_failures=int(cat["failed"].sum()),
                wall_time_seconds=time.perf_counter() - t0))
    finally:
        if pool is not None:
            pool.shutdown()
    return report


def time_decoder(code: LinearCode, decoder, ebno_db: float, frames: int, seed: int = 0,
                 repeats: int = 3, block_size: int = 256) -> float:
    """Median wall-clock seconds to decode a fixed set of frames, single-threaded."""
    sigma = ebno_to_sigma(ebno_db, code.rate)
    gen = RngStream(seed, (3,)).generator()
    msgs = gen.integers(0, 2, size=(frames, code.k), dtype=np.uint8)
    tx = bpsk_modulate(encode(msgs, code))
    y = awgn_transmit(tx, sigma, gen)
    decoder(y[:block_size], sigma, tx[:block_size])  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for i in range(0, frames, block_size):
            decoder(y[i:i + block_size], sigma, tx[i:i + block_size])
        times.append(time.perf_counter() - t0)
    return float(np.median(times))
