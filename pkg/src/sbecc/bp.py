"""Flooding-schedule sum-product decoding on the Tanner graph.

Messages live on edges. The check update is the tanh rule
``2 atanh(prod tanh(L/2))``, evaluated pairwise in its equivalent
log-domain form ``a [+] b`` so that large messages keep full precision. The
exclusive combinations come from prefix/suffix scans over a padded
``(m, dc_max)`` view; variable updates sum a padded ``(n, dv_max)`` view.
Both are vectorised over a batch of frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2codes import as_bits
from .solver import BatchDecodeResult, DecodeResult

__all__ = ["TannerGraph", "llr_from_channel", "bp_decode", "bp_decode_batch", "MSG_CLIP", "TANH_CLIP", "CHECK_MAX"]

MSG_CLIP = 30.0
TANH_CLIP = 1e-12
# largest check message the clipped tanh rule can emit: 2 atanh(1 - TANH_CLIP)
CHECK_MAX = 2.0 * np.arctanh(1.0 - TANH_CLIP)
# neutral element for [+]; finite so that padding combined with padding stays defined
_NEUTRAL = 1e3


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Edge lists of ``H``, edges ordered row-major (check by check)."""

    H: np.ndarray
    check_of_edge: np.ndarray
    var_of_edge: np.ndarray
    check_slots: np.ndarray   # (m, dc_max) edge ids, -1 padded
    var_slots: np.ndarray     # (n, dv_max) edge ids, -1 padded

    @classmethod
    def from_parity_check(cls, H) -> "TannerGraph":
        H = as_bits(H, "H")
        m, n = H.shape
        chk, var = np.nonzero(H)
        E = len(chk)
        dc = max(1, int(H.sum(axis=1).max()))
        dv = max(1, int(H.sum(axis=0).max()))
        check_slots = np.full((m, dc), -1, dtype=np.intp)
        var_slots = np.full((n, dv), -1, dtype=np.intp)
        cfill = np.zeros(m, dtype=np.intp)
        vfill = np.zeros(n, dtype=np.intp)
        for e in range(E):
            c, v = chk[e], var[e]
            check_slots[c, cfill[c]] = e
            cfill[c] += 1
            var_slots[v, vfill[v]] = e
            vfill[v] += 1
        return cls(H, chk, var, check_slots, var_slots)

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def n_edges(self) -> int:
        return len(self.var_of_edge)

    def check_neighbors(self, c: int) -> np.ndarray:
        return self.var_of_edge[self.check_slots[c][self.check_slots[c] >= 0]]

    def var_neighbors(self, v: int) -> np.ndarray:
        return self.check_of_edge[self.var_slots[v][self.var_slots[v] >= 0]]


def llr_from_channel(y, sigma_ch: float) -> np.ndarray:
    """BPSK/AWGN log-likelihood ratios ``2 y / sigma^2`` (positive favours bit 0)."""
    if not sigma_ch > 0:
        raise ValueError(f"sigma_ch must be positive, got {sigma_ch}")
    return 2.0 * np.asarray(y, dtype=np.float64) / sigma_ch ** 2


def _gather(msgs: np.ndarray, slots: np.ndarray, fill: float) -> np.ndarray:
    # msgs: (B, E) -> (B, rows, width), padding slots set to ``fill``
    out = msgs[:, np.where(slots >= 0, slots, 0)]
    out[:, slots < 0] = fill
    return out


def _boxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 2 atanh(tanh(a/2) tanh(b/2)) without the cancellation near +-1
    return (np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
            + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))


def _exclusive_boxplus(a: np.ndarray) -> np.ndarray:
    # [+] over the last axis leaving out each position in turn
    w = a.shape[-1]
    prefix = np.empty_like(a)
    suffix = np.empty_like(a)
    prefix[..., 0] = _NEUTRAL
    suffix[..., -1] = _NEUTRAL
    for i in range(1, w):
        prefix[..., i] = _boxplus(prefix[..., i - 1], a[..., i - 1])
        suffix[..., w - 1 - i] = _boxplus(suffix[..., w - i], a[..., w - i])
    return _boxplus(prefix, suffix)


def bp_decode_batch(llr, graph: TannerGraph, max_iters: int = 50,
                    return_posterior: bool = False, early_exit: bool = True):
    """Sum-product decoding of ``llr: (B, n)``.

    Iteration 0 is the hard decision of the channel LLRs; iteration ``i`` is
    the posterior after ``i`` check+variable sweeps. ``eval_count`` counts
    sweeps performed. With ``return_posterior`` the final posterior LLRs are
    returned alongside the result.
    """
    llr = np.array(llr, dtype=np.float64, ndmin=2)
    B, n = llr.shape
    if n != graph.n:
        raise ValueError(f"llr length {n} != n = {graph.n}")
    H = graph.H
    post = llr.copy()
    v2c = llr[:, graph.var_of_edge]
    c2v = np.zeros_like(v2c)
    stop = np.full(B, max_iters, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    active = np.arange(B)
    for it in range(max_iters + 1):
        bits = (post[active] < 0).astype(np.uint8)
        ok = ~((bits.astype(np.int32) @ H.T.astype(np.int32)) & 1).any(axis=1)
        newly = ok & ~done[active]
        stop[active[newly]] = it
        done[active[newly]] = True
        if early_exit:
            active = active[~ok]
        if it == max_iters or active.size == 0:
            break
        # check update
        lc = _gather(np.clip(v2c[active], -MSG_CLIP, MSG_CLIP), graph.check_slots, _NEUTRAL)
        msg = np.clip(_exclusive_boxplus(lc), -CHECK_MAX, CHECK_MAX)
        new_c2v = np.empty((active.size, graph.n_edges))
        valid = graph.check_slots >= 0
        new_c2v[:, graph.check_slots[valid]] = msg[:, valid]
        c2v[active] = new_c2v
        # variable update
        cv = _gather(new_c2v, graph.var_slots, 0.0)
        total = llr[active] + cv.sum(axis=-1)
        post[active] = total
        v2c[active] = total[:, graph.var_of_edge] - new_c2v
    bits = (post < 0).astype(np.uint8)
    converged = ~((bits.astype(np.int32) @ H.T.astype(np.int32)) & 1).any(axis=1)
    evals = np.minimum(stop, max_iters) if early_exit else np.full(B, max_iters, dtype=np.int64)
    res = BatchDecodeResult(bits, stop, converged, evals)
    return (res, post) if return_posterior else res


def bp_decode(llr, graph: TannerGraph, max_iters: int = 50, early_exit: bool = True) -> DecodeResult:
    llr = np.asarray(llr, dtype=np.float64)
    return bp_decode_batch(llr[None], graph, max_iters, early_exit=early_exit).frame(0)
