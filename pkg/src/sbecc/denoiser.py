"""Noise-prediction denoisers ``eps_hat(y, s)``.

Every denoiser is a callable ``f(x, s, sigma, idx) -> eps_hat`` on batches
``x: (B, n)``, ``s: (B, n - k)``; ``idx`` holds the frame index of each row
within the decoder's full batch (frames drop out after early exit). The
learned MLP ignores ``sigma`` and ``idx`` (it is never told the noise
level); the analytic point-mass oracle uses both.

MLP layout (row-vector convention, ``W`` stored as ``(fan_in, fan_out)``)::

    u      = concat(y or |y|, 2 s - 1 [, t_hat])
    h1     = relu((u W0 + b0) * (1 + emb[popcount(s)]))   # emb only for parity_count
    h2     = relu(h1 W1 + b1)
    eps    = h2 W2 + b2

With ``conditioning="predicted_time"`` a two-layer head
``t_hat = sigmoid(relu(v Wt0 + bt0) Wt1 + bt1)`` on ``v = concat(y or |y|, 2s-1)``
supplies the extra input feature.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import RngStream

__all__ = [
    "INPUT_MODES",
    "CONDITIONINGS",
    "DenoiserModel",
    "init_model",
    "features",
    "forward",
    "loss_and_grad",
    "predict_eps",
    "predict_time_head",
    "condition_parity_count",
    "oracle_point_eps",
    "OracleDenoiser",
    "ZeroDenoiser",
    "save_checkpoint",
    "load_checkpoint",
    "FORMAT_VERSION",
]

INPUT_MODES = ("signed", "magnitude")
CONDITIONINGS = ("none", "parity_count", "predicted_time")
FORMAT_VERSION = 1


def _layout(n: int, m: int, hidden: tuple[int, ...], conditioning: str, time_hidden: int):
    in_width = n + m + (1 if conditioning == "predicted_time" else 0)
    widths = (in_width, *hidden, n)
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for i in range(len(widths) - 1):
        shapes.append((f"W{i}", (widths[i], widths[i + 1])))
        shapes.append((f"b{i}", (widths[i + 1],)))
    if conditioning == "parity_count":
        shapes.append(("emb", (m + 1, hidden[0])))
    elif conditioning == "predicted_time":
        shapes += [("tW0", (n + m, time_hidden)), ("tb0", (time_hidden,)),
                   ("tW1", (time_hidden, 1)), ("tb1", (1,))]
    return shapes


@dataclass(eq=False)
class DenoiserModel:
    """MLP noise predictor. All parameters live in one flat float64 array."""

    n: int
    m: int
    hidden: tuple[int, ...]
    input_mode: str = "signed"
    conditioning: str = "none"
    time_hidden: int = 32
    seed: int = 0
    params: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}")
        if self.conditioning not in CONDITIONINGS:
            raise ValueError(f"conditioning must be one of {CONDITIONINGS}")
        if not self.hidden:
            raise ValueError("need at least one hidden layer")
        self.hidden = tuple(int(h) for h in self.hidden)
        self._shapes = _layout(self.n, self.m, self.hidden, self.conditioning, self.time_hidden)
        self._offsets = {}
        off = 0
        for name, shape in self._shapes:
            size = int(np.prod(shape))
            self._offsets[name] = (off, shape)
            off += size
        self.n_params = off
        if self.params is None:
            self.params = np.zeros(off)
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.params.shape != (off,):
            raise ValueError(f"expected {off} parameters, got {self.params.shape}")

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return (self._offsets["W0"][1][0], *self.hidden, self.n)

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1

    def view(self, name: str, params: np.ndarray | None = None) -> np.ndarray:
        off, shape = self._offsets[name]
        p = self.params if params is None else params
        return p[off:off + int(np.prod(shape))].reshape(shape)

    def names(self) -> list[str]:
        return [name for name, _ in self._shapes]

    def architecture(self) -> dict:
        return {"n": self.n, "m": self.m, "hidden": list(self.hidden),
                "input_mode": self.input_mode, "conditioning": self.conditioning,
                "time_hidden": self.time_hidden, "seed": self.seed}

    def copy(self) -> "DenoiserModel":
        return DenoiserModel(**self.architecture(), params=self.params.copy())

    def __call__(self, x, s, sigma=None, idx=None) -> np.ndarray:
        return predict_eps(self, x, s)


def init_model(n: int, m: int, hidden_mult: int = 8, n_hidden: int = 2, input_mode: str = "signed",
               conditioning: str = "none", seed: int = 0, time_hidden: int = 32) -> DenoiserModel:
    """Uniform(+-1/sqrt(fan_in)) weights and biases; parity embedding starts at zero."""
    model = DenoiserModel(n, m, (hidden_mult * n,) * n_hidden, input_mode, conditioning,
                          time_hidden=time_hidden, seed=seed)
    gen = RngStream(seed, 0).generator()
    for name in model.names():
        v = model.view(name)
        if name == "emb":
            continue
        if name.startswith("W") or name.startswith("tW"):
            fan_in = v.shape[0]
        else:
            fan_in = model.view(name.replace("b", "W", 1)).shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        v[...] = gen.uniform(-bound, bound, size=v.shape)
    return model


def features(y: np.ndarray, s: np.ndarray, input_mode: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    obs = np.abs(y) if input_mode == "magnitude" else y
    return np.concatenate([obs, 2.0 * np.asarray(s, dtype=np.float64) - 1.0], axis=-1)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_finite(a: np.ndarray, layer: str) -> None:
    if not np.isfinite(a).all():
        raise FloatingPointError(f"non-finite activations in layer {layer}")


def forward(model: DenoiserModel, y, s, params: np.ndarray | None = None, check: bool = False):
    """Batched forward pass. Returns ``(eps_hat, cache)``."""
    P = lambda name: model.view(name, params)  # noqa: E731
    v = features(y, s, model.input_mode)
    cache = {"v": v}
    if model.conditioning == "predicted_time":
        th_pre = v @ P("tW0") + P("tb0")
        th = np.maximum(th_pre, 0.0)
        t_hat = _sigmoid(th @ P("tW1") + P("tb1"))[:, 0]
        cache.update(th_pre=th_pre, th=th, t_hat=t_hat)
        u = np.concatenate([v, t_hat[:, None]], axis=1)
    else:
        u = v
    cache["u"] = u
    h = u
    acts = [u]
    pres = []
    for i in range(model.n_layers):
        lin = h @ P(f"W{i}") + P(f"b{i}")
        if i == 0 and model.conditioning == "parity_count":
            count = np.asarray(s).sum(axis=1).astype(np.intp)
            mod = 1.0 + P("emb")[count]
            cache.update(lin0=lin, mod=mod, count=count)
            lin = lin * mod
        if check:
            _check_finite(lin, f"W{i}")
        pres.append(lin)
        if i < model.n_layers - 1:
            h = np.maximum(lin, 0.0)
            acts.append(h)
        else:
            h = lin
    cache["pres"] = pres
    cache["acts"] = acts
    return h, cache


def loss_and_grad(model: DenoiserModel, y, s, eps, t=None, gamma_time: float = 0.0,
                  params: np.ndarray | None = None):
    """Mean-squared noise-prediction loss and its gradient w.r.t. the flat parameters.

    With ``conditioning="predicted_time"`` the loss is the joint objective
    ``(1 - gamma) * L_eps + gamma * mean((t_hat - t)^2)`` and ``t`` is required.

    Returns ``(loss, grad, parts)`` where ``parts`` holds ``eps_loss`` and,
    when applicable, ``time_loss``.
    """
    P = lambda name: model.view(name, params)  # noqa: E731
    eps = np.asarray(eps, dtype=np.float64)
    out, c = forward(model, y, s, params)
    B = out.shape[0]
    diff = out - eps
    eps_loss = float(np.mean(diff * diff))
    joint = model.conditioning == "predicted_time"
    w_eps = 1.0 - gamma_time if joint else 1.0
    grad = np.zeros(model.n_params)
    G = lambda name: model.view(name, grad)  # noqa: E731

    d = w_eps * 2.0 * diff / diff.size
    for i in reversed(range(model.n_layers)):
        a_in = c["acts"][i]
        if i == 0 and model.conditioning == "parity_count":
            np.add.at(G("emb"), c["count"], d * c["lin0"])
            d = d * c["mod"]
        G(f"W{i}")[...] = a_in.T @ d
        G(f"b{i}")[...] = d.sum(axis=0)
        d = d @ P(f"W{i}").T
        if i > 0:
            d = d * (c["pres"][i - 1] > 0.0)
    parts = {"eps_loss": eps_loss}
    loss = w_eps * eps_loss
    if joint:
        if t is None:
            raise ValueError("predicted_time conditioning needs the true t for the joint loss")
        t = np.asarray(t, dtype=np.float64).reshape(B)
        t_hat = c["t_hat"]
        time_loss = float(np.mean((t_hat - t) ** 2))
        loss += gamma_time * time_loss
        parts["time_loss"] = time_loss
        dt = d[:, -1] + gamma_time * 2.0 * (t_hat - t) / B
        dlogit = (dt * t_hat * (1.0 - t_hat))[:, None]
        G("tW1")[...] = c["th"].T @ dlogit
        G("tb1")[...] = dlogit.sum(axis=0)
        dth = (dlogit @ P("tW1").T) * (c["th_pre"] > 0.0)
        G("tW0")[...] = c["v"].T @ dth
        G("tb0")[...] = dth.sum(axis=0)
    return loss, grad, parts


def _check_input(model: DenoiserModel, y, s):
    y = np.asarray(y, dtype=np.float64)
    s = np.asarray(s)
    single = y.ndim == 1
    if single:
        y, s = y[None], s[None]
    if y.shape[-1] != model.n or s.shape[-1] != model.m or y.shape[0] != s.shape[0]:
        raise ValueError(f"expected y (., {model.n}) and s (., {model.m}), got {y.shape} and {s.shape}")
    return y, s, single


def predict_eps(model: DenoiserModel, y, s) -> np.ndarray:
    """``eps_hat`` for one input (1-D) or a batch (2-D)."""
    y, s, single = _check_input(model, y, s)
    out, _ = forward(model, y, s, check=True)
    return out[0] if single else out


def predict_time_head(model: DenoiserModel, y, s):
    """Normalized-time estimate in [0, 1] from the auxiliary head."""
    if model.conditioning != "predicted_time":
        raise ValueError("model has no time head")
    y, s, single = _check_input(model, y, s)
    _, c = forward(model, y, s)
    return float(c["t_hat"][0]) if single else c["t_hat"]


def condition_parity_count(s, model: DenoiserModel) -> np.ndarray:
    """Multiplicative first-layer modulation ``1 + emb[sum(s)]``."""
    if model.conditioning != "parity_count":
        raise ValueError("model has no parity-count embedding")
    s = np.asarray(s)
    return 1.0 + model.view("emb")[s.sum(axis=-1).astype(np.intp)]


def oracle_point_eps(x, x0, sigma: float) -> np.ndarray:
    """Exact noise for a point-mass prior at ``x0``: ``(x - x0) / sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return (np.asarray(x, dtype=np.float64) - np.asarray(x0, dtype=np.float64)) / sigma


@dataclass
class OracleDenoiser:
    """Analytic denoiser that knows the clean point ``x0`` (one row per frame)."""

    x0: np.ndarray

    def __call__(self, x, s, sigma, idx=None):
        x0 = np.asarray(self.x0, dtype=np.float64)
        if x0.ndim == 2 and idx is not None:
            x0 = x0[idx]
        return oracle_point_eps(x, x0, sigma)


class ZeroDenoiser:
    """Predicts no noise; decoding with it reduces to hard decisions."""

    def __call__(self, x, s, sigma=None, idx=None):
        return np.zeros_like(np.asarray(x, dtype=np.float64))


# --- checkpoints --------------------------------------------------------------

_MAGIC = b"SBECCKPT"


def save_checkpoint(path, model: DenoiserModel, arrays: dict[str, np.ndarray] | None = None,
                    meta: dict | None = None) -> None:
    """Write ``MAGIC``, a JSON header line, then raw little-endian float64 payloads.

    The model parameters are always the first payload; ``arrays`` (e.g. Adam
    moments) follow in header order.
    """
    arrays = {"params": model.params, **(arrays or {})}
    header = {
        "format_version": FORMAT_VERSION,
        "architecture": model.architecture(),
        "input_mode": model.input_mode,
        "conditioning": model.conditioning,
        "seed": model.seed,
        "payload": [{"name": k, "length": int(np.asarray(v).size)} for k, v in arrays.items()],
        "meta": meta or {},
    }
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(json.dumps(header, sort_keys=True).encode() + b"\n")
    for v in arrays.values():
        buf.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`: ``(model, arrays, meta)``."""
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    nl = raw.index(b"\n", len(_MAGIC))
    header = json.loads(raw[len(_MAGIC):nl])
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version {header.get('format_version')}")
    pos = nl + 1
    arrays = {}
    for item in header["payload"]:
        nbytes = 8 * item["length"]
        arrays[item["name"]] = np.frombuffer(raw[pos:pos + nbytes], dtype="<f8").astype(np.float64)
        pos += nbytes
    if pos != len(raw):
        raise ValueError(f"{path}: payload size mismatch")
    arch = header["architecture"]
    model = DenoiserModel(arch["n"], arch["m"], tuple(arch["hidden"]), arch["input_mode"],
                          arch["conditioning"], arch["time_hidden"], arch["seed"],
                          params=arrays.pop("params"))
    return model, arrays, header["meta"]
