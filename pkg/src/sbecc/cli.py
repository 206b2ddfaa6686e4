"""Command-line experiments driven by strict JSON configs.

    sbecc [--threads N] train        CONFIG
    sbecc [--threads N] eval         CONFIG
    sbecc [--threads N] solver-bench CONFIG
    sbecc snr-gain   CONFIG
    sbecc code-info  CODE_OR_CONFIG

Exit codes: 0 success, 1 runtime failure, 2 invalid config or usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__
from .denoiser import CONDITIONINGS, INPUT_MODES, init_model, load_checkpoint
from .gf2codes import BUILTIN_CODES, LinearCode, gf2_matmul, gf2_rank, load_code
from .harness import (BPDecoder, EvalReport, HardDecisionDecoder, SbeccDecoder, StopRule, evaluate,
                      fingerprint, snr_gain, speedup, time_decoder)
from .schedule import NoiseSchedule
from .solver import SOLVERS, SolverConfig
from .trainer import FULL_SCALE, TrainConfig, train

log = logging.getLogger("sbecc")

OUTPUT_ENV = "SBECC_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class TrainBlock:
    epochs: int = 50
    batches_per_epoch: int = 200
    batch_size: int = 128
    lr: float = 5e-4
    gamma_time: float = 0.1
    input_mode: str = "signed"
    conditioning: str = "none"
    hidden_mult: int = 8
    checkpoint_every: int = 0
    preset: str = "desk"


@dataclass
class BenchBlock:
    euler_steps: list = field(default_factory=lambda: [10])
    dpm2_steps: list = field(default_factory=lambda: [3])
    timing_frames: int = 4096
    timing_repeats: int = 3
    timing_ebno_db: float = 4.0


@dataclass
class SnrGainBlock:
    reference: str = ""
    new: str = ""
    at_db: list = field(default_factory=lambda: [5.0])


@dataclass
class ExperimentConfig:
    code: str = "hamming74"
    channel: str = "awgn"
    decoder: str = "sbecc"
    solver: str = "euler"
    n_steps: int = 10
    early_exit: bool = True
    sigma_min: float = 0.1
    sigma_max: float = 0.8
    bp_iters: int = 50
    checkpoint: str | None = None
    train: TrainBlock | None = None
    ebno_db: list = field(default_factory=lambda: [4.0, 5.0, 6.0])
    target_frame_errors: int = 100
    max_frames: int = 100_000
    block_size: int = 256
    seed: int = 0
    output_dir: str | None = None
    bench: BenchBlock | None = None
    snr_gain: SnrGainBlock | None = None

    def canonical(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "output_dir":
                continue
            if hasattr(v, "__dataclass_fields__"):
                v = {g.name: getattr(v, g.name) for g in fields(v)}
            d[f.name] = v
        return d

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.canonical())

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule(self.sigma_min, self.sigma_max)

    def solver_config(self, kind: str | None = None, n_steps: int | None = None) -> SolverConfig:
        return SolverConfig(kind or self.solver, n_steps or self.n_steps, self.schedule(), self.early_exit)

    def out_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or "sbecc_out")


_NESTED = {"train": TrainBlock, "bench": BenchBlock, "snr_gain": SnrGainBlock}

_TYPES = {int: "integer", float: "number", bool: "boolean", str: "string", list: "list"}


def _check_type(path: str, value, default):
    expected = type(default)
    if default is None:
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string or null")
        return value
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
    elif expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
    elif expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        value = float(value)
    elif expected is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}: expected a non-empty list")
    elif not isinstance(value, expected):
        raise ConfigError(f"{path}: expected {_TYPES.get(expected, expected.__name__)}")
    return value


def _build(cls, data: dict, prefix: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{prefix}{unknown[0]}: unknown key")
    defaults = cls()
    kwargs = {}
    for name, value in data.items():
        path = prefix + name
        if name in _NESTED and cls is ExperimentConfig:
            kwargs[name] = None if value is None else _build(_NESTED[name], value, path + ".")
        else:
            kwargs[name] = _check_type(path, value, getattr(defaults, name))
    return cls(**kwargs)


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config mapping; raises ConfigError naming the offending field."""
    cfg = _build(ExperimentConfig, data)
    choices = {"channel": ("awgn", "rayleigh"), "decoder": ("sbecc", "bp", "hard"), "solver": SOLVERS}
    for key, allowed in choices.items():
        if getattr(cfg, key) not in allowed:
            raise ConfigError(f"{key}: must be one of {list(allowed)}")
    if cfg.code not in BUILTIN_CODES and not Path(cfg.code).exists():
        raise ConfigError(f"code: {cfg.code!r} is neither a builtin code {sorted(BUILTIN_CODES)} nor a file")
    for key in ("n_steps", "bp_iters", "target_frame_errors", "max_frames", "block_size"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key}: must be >= 1")
    if not 0 < cfg.sigma_min < cfg.sigma_max:
        raise ConfigError("sigma_min: need 0 < sigma_min < sigma_max")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in cfg.ebno_db):
        raise ConfigError("ebno_db: entries must be numbers")
    if cfg.train is not None:
        t = cfg.train
        if t.input_mode not in INPUT_MODES:
            raise ConfigError(f"train.input_mode: must be one of {list(INPUT_MODES)}")
        if t.conditioning not in CONDITIONINGS:
            raise ConfigError(f"train.conditioning: must be one of {list(CONDITIONINGS)}")
        if t.preset not in ("desk", "full"):
            raise ConfigError("train.preset: must be 'desk' or 'full'")
        try:
            _train_config(cfg)
        except ValueError as exc:
            raise ConfigError(f"train: {exc}") from None
    if cfg.checkpoint is not None and not Path(cfg.checkpoint).exists():
        raise ConfigError(f"checkpoint: file {cfg.checkpoint!r} not found")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)


def _train_config(cfg: ExperimentConfig) -> TrainConfig:
    t = cfg.train
    sizes = dict(epochs=t.epochs, batches_per_epoch=t.batches_per_epoch, batch_size=t.batch_size)
    if t.preset == "full":
        sizes = dict(FULL_SCALE)
    return TrainConfig(**sizes, lr=t.lr, schedule=cfg.schedule(), gamma_time=t.gamma_time,
                       seed=cfg.seed, input_mode=t.input_mode, conditioning=t.conditioning,
                       hidden_mult=t.hidden_mult, checkpoint_every=t.checkpoint_every)


def _require_model_source(cfg: ExperimentConfig) -> None:
    if cfg.checkpoint is None and cfg.train is None:
        raise ConfigError("checkpoint: decoder 'sbecc' needs a 'checkpoint' path or a 'train' block")


def _get_model(cfg: ExperimentConfig, code: LinearCode, out: Path):
    if cfg.checkpoint is not None:
        model, _, _ = load_checkpoint(cfg.checkpoint)
        if (model.n, model.m) != (code.n, code.m):
            raise ConfigError("checkpoint: model dimensions do not match the code")
        return model
    tc = _train_config(cfg)
    model = init_model(code.n, code.m, tc.hidden_mult, input_mode=tc.input_mode,
                       conditioning=tc.conditioning, seed=cfg.seed)
    train(model, tc, code, out_dir=out, fingerprint=cfg.fingerprint)
    return model


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _decoder(cfg: ExperimentConfig, code: LinearCode, out: Path, kind=None, n_steps=None):
    if cfg.decoder == "hard":
        return HardDecisionDecoder(code)
    if cfg.decoder == "bp":
        return BPDecoder(code, cfg.bp_iters)
    return SbeccDecoder(code, _get_model(cfg, code, out), cfg.solver_config(kind, n_steps))


def cmd_train(cfg: ExperimentConfig, threads: int) -> int:
    if cfg.train is None:
        raise ConfigError("train: the train subcommand needs a 'train' block")
    code = load_code(cfg.code)
    out = cfg.out_dir()
    tc = _train_config(cfg)
    model = init_model(code.n, code.m, tc.hidden_mult, input_mode=tc.input_mode,
                       conditioning=tc.conditioning, seed=cfg.seed)
    res = train(model, tc, code, out_dir=out, fingerprint=cfg.fingerprint,
                progress=lambda row: log.info("epoch %d  loss %.5f", row["epoch"], row["mean_loss"]))
    # prepend the fingerprint to the loss log
    logf = out / "train_log.csv"
    logf.write_text(f"# fingerprint,{cfg.fingerprint}\n" + logf.read_text())
    print(f"trained {code.name}: final mean loss {res.history[-1]['mean_loss']:.5f}; checkpoint {out / 'final.bin'}")
    return 0


def cmd_eval(cfg: ExperimentConfig, threads: int) -> int:
    if cfg.decoder == "sbecc":
        _require_model_source(cfg)
    code = load_code(cfg.code)
    out = cfg.out_dir()
    dec = _decoder(cfg, code, out)
    rep = evaluate(code, dec, cfg.ebno_db, StopRule(cfg.target_frame_errors, cfg.max_frames), cfg.seed,
                   cfg.channel, cfg.block_size, threads, config_fingerprint=cfg.fingerprint)
    _write(out / "report.json", rep.to_json())
    _write(out / "report.csv", rep.to_csv())
    _write(out / "curve.csv", rep.curve_csv())
    for p in rep.points:
        print(f"{p.ebno_db:5.2f} dB  frames {p.frames:7d}  BER {p.ber:.3e}  BLER {p.bler:.3e}  "
              f"-ln(BER) {p.neg_ln_ber:.3f}  #It {p.stop_iter_mean:.2f}+-{p.stop_iter_std:.2f}")
    return 0


BENCH_COLUMNS = ["code", "solver", "n_steps", "ebno_db", "frames", "bit_errors", "neg_ln_ber",
                 "stop_iter_mean", "eval_mean", "wall_s", "speedup_pct"]


def cmd_solver_bench(cfg: ExperimentConfig, threads: int) -> int:
    _require_model_source(cfg)
    bench = cfg.bench or BenchBlock()
    code = load_code(cfg.code)
    out = cfg.out_dir()
    model = _get_model(cfg, code, out)
    stop = StopRule(cfg.target_frame_errors, cfg.max_frames)
    rows = []
    euler_time = None
    runs = [("euler", n) for n in bench.euler_steps] + [("dpm2", n) for n in bench.dpm2_steps]
    for kind, n in runs:
        dec = SbeccDecoder(code, model, cfg.solver_config(kind, int(n)))
        rep = evaluate(code, dec, cfg.ebno_db, stop, cfg.seed, cfg.channel, cfg.block_size, threads,
                       config_fingerprint=cfg.fingerprint)
        wall = time_decoder(code, dec, bench.timing_ebno_db, bench.timing_frames, cfg.seed,
                            bench.timing_repeats, cfg.block_size)
        if euler_time is None and kind == "euler":
            euler_time = wall
        pct = speedup(euler_time, wall) if euler_time else float("nan")
        for p in rep.points:
            rows.append([code.name, kind, n, p.ebno_db, p.frames, p.bit_errors, p.neg_ln_ber,
                         p.stop_iter_mean, p.eval_count_mean, wall, pct])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# fingerprint", cfg.fingerprint])
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    _write(out / "solver_bench.csv", buf.getvalue())
    print(buf.getvalue(), end="")
    return 0


def cmd_snr_gain(cfg: ExperimentConfig, threads: int) -> int:
    g = cfg.snr_gain
    if g is None or not g.reference or not g.new:
        raise ConfigError("snr_gain: needs 'reference' and 'new' report paths")
    reports = {}
    for key in ("reference", "new"):
        path = Path(getattr(g, key))
        if not path.exists():
            raise ConfigError(f"snr_gain.{key}: report {path} not found")
        reports[key] = EvalReport.from_dict(json.loads(path.read_text()))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# fingerprint", cfg.fingerprint])
    w.writerow(["at_db", "gain_db", "reference", "new"])
    for at in g.at_db:
        gain = snr_gain(reports["reference"].curve(), reports["new"].curve(), float(at))
        w.writerow([repr(float(at)), repr(gain), reports["reference"].decoder, reports["new"].decoder])
    _write(cfg.out_dir() / "snr_gain.csv", buf.getvalue())
    print(buf.getvalue(), end="")
    return 0


def code_info(code: LinearCode) -> str:
    ok = lambda b: "pass" if b else "FAIL"  # noqa: E731
    lines = [
        f"code: {code.name}",
        f"n={code.n}",
        f"k={code.k}",
        f"rate {code.rate:.4f}",
        f"G·Hᵀ = 0: {ok(not gf2_matmul(code.G, code.H.T).any())}",
        f"rank(G) = k: {ok(gf2_rank(code.G) == code.k)}",
        f"rank(H) = n-k: {ok(gf2_rank(code.H) == code.n - code.k)}",
        f"H column weights: {int(code.H.sum(0).min())}..{int(code.H.sum(0).max())}",
        f"H row weights: {int(code.H.sum(1).min())}..{int(code.H.sum(1).max())}",
    ]
    return "\n".join(lines)


def cmd_code_info(target: str) -> int:
    code_ref = target
    if target.endswith(".json"):
        code_ref = load_config(target).code
    elif target not in BUILTIN_CODES and not Path(target).exists():
        raise ConfigError(f"code: {target!r} is neither a builtin code {sorted(BUILTIN_CODES)} nor a file")
    print(code_info(load_code(code_ref)))
    return 0


def _config_help() -> str:
    lines = ["config keys (JSON object; unknown keys are rejected):"]
    top = ExperimentConfig()
    for f in fields(ExperimentConfig):
        default = getattr(top, f.name)
        if f.name in _NESTED:
            lines.append(f"  {f.name:<20} object or null (default null)")
            for g in fields(_NESTED[f.name]):
                lines.append(f"    {f.name}.{g.name:<18} default {json.dumps(getattr(_NESTED[f.name](), g.name))}")
        else:
            note = f" (falls back to ${OUTPUT_ENV}, then ./sbecc_out)" if f.name == "output_dir" else ""
            lines.append(f"  {f.name:<20} default {json.dumps(default)}{note}")
    lines.append(f"builtin codes: {', '.join(sorted(BUILTIN_CODES))}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbecc", description=__doc__.split("\n")[0],
                                epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for Monte-Carlo blocks (results do not depend on it)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("train", "train a denoiser; writes final.bin and train_log.csv"),
                        ("eval", "BER/BLER evaluation; writes report.json, report.csv, curve.csv"),
                        ("solver-bench", "Euler vs dpm2 table; writes solver_bench.csv"),
                        ("snr-gain", "SNR gain between two report.json files; writes snr_gain.csv")]:
        sp = sub.add_parser(name, help=help_, epilog=_config_help(),
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("config", help="JSON experiment config")
    sp = sub.add_parser("code-info", help="dimensions and rank checks for a code")
    sp.add_argument("target", help="builtin code name, alist file, or JSON config")
    return p


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "solver-bench": cmd_solver_bench, "snr-gain": cmd_snr_gain}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "code-info":
            return cmd_code_info(args.target)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, max(1, args.threads))
    except ConfigError as exc:
        print(f"sbecc: invalid config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"sbecc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
