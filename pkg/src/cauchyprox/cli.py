"""Command-line interface.

Each subcommand reads its parameters from three layers, later ones
winning: built-in defaults, the matching table of a TOML file given by
``--config``, and command-line flags named after the keys. All results are
computed in memory first and then written atomically, so a failed run
leaves no partial files behind.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from . import experiments as ex
from . import mimo
from .fileio import atomic_write, csv_bytes, pgm_bytes, read_image
from .linops import gaussian_psf
from .penalties import CauchyPenalty, L1Penalty, TVPenalty, prox_cauchy, prox_hard, prox_l1
from .signals import phantom
from .solver import DivergenceError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("cauchyprox")

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


# key -> (type, default). Types: float, int, str, "floats", "ints", "strs".
PARAMS: Dict[str, Dict[str, Tuple[Any, Any]]] = {
    "prox-table": {
        "gammas": ("floats", [0.5, 1.0, 2.0]),
        "mus": ("floats", [1.0]),
        "threshold": (float, 1.0),
        "x_max": (float, 6.0),
        "n_points": (int, 1201),
    },
    "denoise1d": {
        "snr_grid": ("floats", [2.0, 4.0, 6.0, 8.0, 10.0, 12.0]),
        "M_values": ("ints", [128, 256, 512]),
        "N_values": ("ints", [512, 2048, 8192]),
        "methods": ("strs", ["cauchy", "l1", "tv"]),
        "trials": (int, 20),
        "fidelity_scale": (float, 2.5),
        "gamma_multiplier": (float, 1.0),
        "l1_threshold": (float, 0.6),
        "tv_weight": (float, 1.75),
        "eps": (float, 1e-3),
        "max_iter": (int, 500),
        "trace_snr": (float, 4.0),
    },
    "restore2d": {
        "image": (str, "phantom"),
        "size": (int, 256),
        "tasks": ("strs", ["denoise", "deblur"]),
        "snr_db": (float, 20.0),
        "bsnr_db": (float, 40.0),
        "psf_side": (int, 5),
        "psf_sigma": (float, 1.0),
        "l1_weight": (float, ex.L1_WEIGHT_2D),
        "tv_weight": (float, ex.TV_WEIGHT_2D),
        "fidelity_scale": (float, 1.0),
        "gamma_low": (float, 1.0),
        "gamma_high": (float, 50.0),
        "gamma_points": (int, 8),
        "eps": (float, 1e-3),
        "max_iter": (int, 250),
    },
    "sweep-gamma": {
        "problem": (str, "1d"),
        "M": (int, 128),
        "N": (int, 512),
        "snr_db": (float, 30.0),
        "fidelity_scale_1d": (float, 2.5),
        "image": (str, "phantom"),
        "size": (int, 256),
        "image_snr_db": (float, 20.0),
        "bsnr_db": (float, 40.0),
        "fidelity_scale_2d": (float, 1.0),
        "gamma_min": (float, 1e-2),
        "gamma_max": (float, 1e2),
        "n_gammas": (int, 25),
        "eps": (float, 1e-3),
        "max_iter": (int, 500),
    },
    "mimo-ber": {
        "antennas": ("ints", [16]),
        "constellations": ("strs", ["QPSK"]),
        "snr_grid": ("floats", [0.0, 4.0, 8.0, 12.0, 16.0, 20.0]),
        "n_symbols": (int, 10_000),
        "n_trials": (int, 10),
        "gamma_multiplier": (float, 10.0),
        "eps": (float, 1e-3),
        "max_iter": (int, 500),
    },
}

# overrides applied by --full-scale before config file and flags
FULL_SCALE = {
    "mimo-ber": {
        "antennas": [16, 50],
        "constellations": ["QPSK", "QAM16"],
        "n_symbols": 100_000,
        "n_trials": 100,
    },
}

GLOBAL_KEYS = {"seed": (int, 0), "out": (str, "results"), "threads": (int, 1)}


# --- configuration ------------------------------------------------------------


def _coerce(key: str, kind, value):
    """Check a TOML value against the declared type."""
    def scalar(t, v):
        if isinstance(v, bool):
            raise ConfigError(f"{key}: expected {t.__name__}, got a boolean")
        if t is float and isinstance(v, (int, float)):
            return float(v)
        if t is int and isinstance(v, int):
            return v
        if t is str and isinstance(v, str):
            return v
        raise ConfigError(f"{key}: expected {t.__name__}, got {type(v).__name__} {v!r}")

    if kind in ("floats", "ints", "strs"):
        t = {"floats": float, "ints": int, "strs": str}[kind]
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list of {t.__name__}")
        if not value:
            raise ConfigError(f"{key}: list is empty")
        return [scalar(t, v) for v in value]
    return scalar(kind, value)


def _parse_flag(key: str, kind, text: str):
    """Parse a command-line value; lists are comma separated."""
    t = {"floats": float, "ints": int, "strs": str}.get(kind, kind)
    try:
        if kind in ("floats", "ints", "strs"):
            items = [s.strip() for s in text.split(",") if s.strip()]
            if not items:
                raise ValueError("empty list")
            return [t(s) for s in items]
        return t(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: {path}: {exc}") from None


def resolve_config(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Merge defaults, ``--full-scale``, the TOML file and flags for ``command``."""
    spec = PARAMS[command]
    cfg = {k: v for k, (_, v) in spec.items()}
    cfg.update({k: v for k, (_, v) in GLOBAL_KEYS.items()})
    if args.full_scale:
        cfg.update(FULL_SCALE.get(command, {}))

    if args.config:
        doc = load_toml(args.config)
        for key, val in doc.items():
            if key in GLOBAL_KEYS:
                cfg[key] = _coerce(key, GLOBAL_KEYS[key][0], val)
            elif key in PARAMS:
                if not isinstance(val, dict):
                    raise ConfigError(f"{key}: expected a table")
                if key != command:
                    continue
                for sub, v in val.items():
                    if sub not in spec:
                        raise ConfigError(f"{command}.{sub}: unknown key")
                    cfg[sub] = _coerce(f"{command}.{sub}", spec[sub][0], v)
            else:
                raise ConfigError(f"{key}: unknown key")

    for key, (kind, _) in {**spec, **GLOBAL_KEYS}.items():
        text = getattr(args, key, None)
        if text is not None:
            cfg[key] = _parse_flag(key, kind, text) if isinstance(text, str) else text
    _validate(command, cfg)
    return cfg


def _positive(cfg, *keys):
    for k in keys:
        v = cfg[k]
        vals = v if isinstance(v, list) else [v]
        if not all(x > 0 for x in vals):
            raise ConfigError(f"{k}: must be > 0")


def _validate(command: str, cfg: Dict[str, Any]) -> None:
    if cfg["threads"] < 1:
        raise ConfigError("threads: must be >= 1")
    if cfg["seed"] < 0:
        raise ConfigError("seed: must be >= 0")
    out = Path(cfg["out"])
    if out.exists() and not out.is_dir():
        raise ConfigError(f"out: {out} exists and is not a directory")
    if command == "prox-table":
        _positive(cfg, "gammas", "mus", "threshold", "x_max")
        if cfg["n_points"] < 3 or cfg["n_points"] % 2 == 0:
            raise ConfigError("n_points: must be odd and >= 3")
    elif command == "denoise1d":
        _positive(cfg, "M_values", "N_values", "trials", "fidelity_scale", "gamma_multiplier",
                  "l1_threshold", "tv_weight", "eps", "max_iter")
        if len(cfg["M_values"]) != len(cfg["N_values"]):
            raise ConfigError("M_values: must have the same length as N_values")
        for M, N in zip(cfg["M_values"], cfg["N_values"]):
            if M > N:
                raise ConfigError(f"M_values: M={M} exceeds N={N}")
        bad = set(cfg["methods"]) - {"cauchy", "l1", "tv"}
        if bad:
            raise ConfigError(f"methods: unknown method {sorted(bad)[0]!r}")
        if cfg["trace_snr"] not in cfg["snr_grid"]:
            raise ConfigError("trace_snr: must be one of snr_grid")
    elif command == "restore2d":
        _positive(cfg, "size", "psf_side", "psf_sigma", "l1_weight", "tv_weight", "fidelity_scale",
                  "gamma_low", "gamma_high", "gamma_points", "eps", "max_iter")
        bad = set(cfg["tasks"]) - {"denoise", "deblur"}
        if bad:
            raise ConfigError(f"tasks: unknown task {sorted(bad)[0]!r}")
        if cfg["psf_side"] % 2 == 0:
            raise ConfigError("psf_side: must be odd")
        _check_image(cfg)
    elif command == "sweep-gamma":
        _positive(cfg, "M", "N", "size", "fidelity_scale_1d", "fidelity_scale_2d", "gamma_min",
                  "gamma_max", "n_gammas", "eps", "max_iter")
        if cfg["problem"] not in ("1d", "denoise", "deblur"):
            raise ConfigError("problem: must be '1d', 'denoise' or 'deblur'")
        if cfg["M"] > cfg["N"]:
            raise ConfigError("M: must not exceed N")
        if not cfg["gamma_min"] < cfg["gamma_max"]:
            raise ConfigError("gamma_max: must exceed gamma_min")
        if cfg["problem"] != "1d":
            _check_image(cfg)
    elif command == "mimo-ber":
        _positive(cfg, "antennas", "n_symbols", "n_trials", "gamma_multiplier", "eps", "max_iter")
        for c in cfg["constellations"]:
            try:
                mimo.constellation(c)
            except ValueError:
                raise ConfigError(f"constellations: unknown constellation {c!r}") from None
        for n in cfg["antennas"]:
            if cfg["n_symbols"] % n:
                raise ConfigError(f"n_symbols: must be a multiple of every antenna count ({n})")


def _check_image(cfg):
    if cfg["image"] != "phantom" and not Path(cfg["image"]).is_file():
        raise ConfigError(f"image: no such file {cfg['image']}")


def _load_image(cfg) -> Tuple[str, np.ndarray]:
    if cfg["image"] == "phantom":
        return "phantom", phantom(cfg["size"], cfg["size"])
    try:
        return Path(cfg["image"]).stem, read_image(cfg["image"])
    except ValueError as exc:
        raise ConfigError(f"image: {exc}") from None


# --- subcommands -----------------------------------------------------------------

Outputs = Dict[str, bytes]


def cmd_prox_table(cfg) -> Outputs:
    n, xm = cfg["n_points"], cfg["x_max"]
    half = n // 2
    x = xm * (np.arange(n) - half) / half
    t = cfg["threshold"]
    cols = [x, prox_l1(x, t), prox_hard(x, t)]
    header = ["x", "soft", "hard"]
    for mu in cfg["mus"]:
        for g in cfg["gammas"]:
            cols.append(prox_cauchy(x, g, mu))
            header.append(f"cauchy_g{g:g}_mu{mu:g}")
    return {"prox_table.csv": csv_bytes(header, zip(*cols))}


def cmd_denoise1d(cfg) -> Outputs:
    params = ex.Denoise1DParams(
        fidelity_scale=cfg["fidelity_scale"],
        gamma_multiplier=cfg["gamma_multiplier"],
        l1_threshold=cfg["l1_threshold"],
        tv_weight=cfg["tv_weight"],
        eps=cfg["eps"],
        max_iter=cfg["max_iter"],
    )
    methods = cfg["methods"]
    summary, trials, trace = [], [], None
    for i, snr in enumerate(cfg["snr_grid"]):
        for j, (M, N) in enumerate(zip(cfg["M_values"], cfg["N_values"])):
            # one independent stream per grid cell
            seed = int(np.random.SeedSequence([cfg["seed"], i, j]).generate_state(1)[0])
            log.info("denoise1d: SNR %g dB, M=%d, N=%d", snr, M, N)
            res = ex.run_denoise_1d(M, N, snr, methods, cfg["trials"], seed, params, cfg["threads"])
            for m in methods:
                summary.append([snr, M, N, m, res.mean("rmse", m), res.mean("mae", m), cfg["trials"]])
                for t in range(cfg["trials"]):
                    trials.append([snr, M, N, m, t, res.rmse[m][t], res.mae[m][t]])
            if trace is None and snr == cfg["trace_snr"]:
                trace = res
    ex_cols = ["clean", "noisy"] + methods
    trace_rows = zip(np.arange(trace.M) / trace.M, *(trace.example[c] for c in ex_cols))
    return {
        "denoise1d_summary.csv": csv_bytes(
            ["snr_db", "M", "N", "method", "rmse_mean", "mae_mean", "trials"], summary),
        "denoise1d_trials.csv": csv_bytes(["snr_db", "M", "N", "method", "trial", "rmse", "mae"], trials),
        "denoise1d_trace.csv": csv_bytes(["t"] + ex_cols, trace_rows),
    }


def cmd_restore2d(cfg) -> Outputs:
    name, img = _load_image(cfg)
    psf = gaussian_psf(cfg["psf_side"], cfg["psf_sigma"])
    outputs: Outputs = {}
    rows = []
    for k, task in enumerate(cfg["tasks"]):
        rng = np.random.default_rng([cfg["seed"], k])
        prob = ex.restore_2d_problem(img, task, rng, snr_db=cfg["snr_db"], bsnr_db=cfg["bsnr_db"],
                                     psf=psf, fidelity_scale=cfg["fidelity_scale"])
        obs = prob.y.reshape(prob.shape)
        m = prob.score(obs)
        rows.append([name, task, "input", "", m["psnr"], m["rmse"], m["ssim"], 0])
        outputs[f"{name}_{task}_input.pgm"] = pgm_bytes(obs)

        log.info("restore2d: %s %s, sweeping gamma", name, task)
        sweep = ex.best_gamma(prob, cfg["gamma_points"], cfg["gamma_low"], cfg["gamma_high"],
                              cfg["eps"], cfg["max_iter"], cfg["threads"])
        runs = [
            ("l1", L1Penalty(cfg["l1_weight"]), ""),
            ("tv", TVPenalty(cfg["tv_weight"], shape=prob.shape), ""),
            ("cauchy_critical", CauchyPenalty(prob.critical_step), prob.critical_step),
            ("cauchy_opt", CauchyPenalty(sweep.best_gamma), sweep.best_gamma),
        ]
        for label, pen, g in runs:
            log.info("restore2d: %s %s %s", name, task, label)
            est, met = ex.run_restore_2d(img, task, pen, eps=cfg["eps"], max_iter=cfg["max_iter"], problem=prob)
            rows.append([name, task, label, g, met["psnr"], met["rmse"], met["ssim"], met["iterations"]])
            outputs[f"{name}_{task}_{label}.pgm"] = pgm_bytes(est)
    outputs["restore2d_metrics.csv"] = csv_bytes(
        ["image", "task", "penalty", "gamma", "psnr", "rmse", "ssim", "iterations"], rows)
    return outputs


def sweep_problem(cfg) -> ex.InverseProblem:
    """The fixed problem ``sweep-gamma`` solves; noise from ``default_rng([seed, 0])``."""
    rng = np.random.default_rng([cfg["seed"], 0])
    if cfg["problem"] == "1d":
        return ex.denoise_1d_problem(cfg["M"], cfg["N"], cfg["snr_db"], rng, cfg["fidelity_scale_1d"])
    _, img = _load_image(cfg)
    return ex.restore_2d_problem(img, cfg["problem"], rng, snr_db=cfg["image_snr_db"],
                                 bsnr_db=cfg["bsnr_db"], fidelity_scale=cfg["fidelity_scale_2d"])


def cmd_sweep_gamma(cfg) -> Outputs:
    prob = sweep_problem(cfg)
    gammas = np.geomspace(cfg["gamma_min"], cfg["gamma_max"], cfg["n_gammas"])
    res = ex.gamma_sweep(prob, gammas, cfg["eps"], cfg["max_iter"], cfg["threads"])
    header = ["gamma", "rmse"] + (["psnr"] if res.psnr is not None else []) + ["critical_frame", "critical_step"]
    rows = []
    for i, g in enumerate(res.gammas):
        r = [g, res.rmse[i]] + ([res.psnr[i]] if res.psnr is not None else [])
        rows.append(r + [res.critical_frame, res.critical_step])
    return {"sweep_gamma.csv": csv_bytes(header, rows)}


def cmd_mimo(cfg) -> Outputs:
    outputs: Outputs = {}
    for n in cfg["antennas"]:
        for c in cfg["constellations"]:
            sc = mimo.MimoScenario(n_tx=n, n_rx=n, constellation=c, snr_grid_db=cfg["snr_grid"],
                                   n_symbols=cfg["n_symbols"], n_trials=cfg["n_trials"], seed=cfg["seed"],
                                   gamma_multiplier=cfg["gamma_multiplier"], eps=cfg["eps"],
                                   max_iter=cfg["max_iter"])
            log.info("mimo-ber: %dx%d %s", n, n, sc.const.kind)
            r = mimo.run_ber_curve(sc, cfg["threads"])
            rows = [[s, z, m, ca, r.trials, r.symbols_counted]
                    for s, z, m, ca in zip(r.snr_db, r.ber_zf, r.ber_mmse, r.ber_cauchy)]
            outputs[f"mimo_{n}x{n}_{sc.const.kind}.csv"] = csv_bytes(
                ["snr_db", "ber_zf", "ber_mmse", "ber_cauchy", "trials", "symbols"], rows)
    return outputs


COMMANDS = {
    "prox-table": cmd_prox_table,
    "denoise1d": cmd_denoise1d,
    "restore2d": cmd_restore2d,
    "sweep-gamma": cmd_sweep_gamma,
    "mimo-ber": cmd_mimo,
}

HELP = {
    "prox-table": "tabulate soft, hard and Cauchy proximal maps",
    "denoise1d": "Heavy Sine denoising over an SNR grid and M/N ratios",
    "restore2d": "image denoising and deblurring with L1, TV and Cauchy penalties",
    "sweep-gamma": "reconstruction error against the Cauchy scale",
    "mimo-ber": "BER curves for ZF, MMSE and Cauchy error recovery",
}


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML file with a table per subcommand")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--out", metavar="DIR", help="output directory (default ./results)")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo trials")
    common.add_argument("--full-scale", action="store_true", help="large MIMO run: 16x16 and 50x50, QPSK and 16QAM, 1e5 symbols x 100 trials")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="cauchyprox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, spec in PARAMS.items():
        sp = sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
        for key, (kind, default) in spec.items():
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            shown = ",".join(map(str, default)) if isinstance(default, list) else default
            sp.add_argument(*flags, dest=key, metavar="LIST" if isinstance(default, list) else "VALUE",
                            help=f"default {shown}")
    return p


def _write_all(out: Path, outputs: Outputs) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for fname, data in outputs.items():
        atomic_write(out / fname, data)


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"cauchyprox {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outputs = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"cauchyprox {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"cauchyprox {args.command}: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    _write_all(Path(cfg["out"]), outputs)
    for fname in outputs:
        print(os.path.join(cfg["out"], fname))
    return 0


if __name__ == "__main__":
    sys.exit(main())
