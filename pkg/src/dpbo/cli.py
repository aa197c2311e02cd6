"""Command-line entry point.

Subcommands:

* ``run``    - execute one of the four modes from a JSON config and write a
  result JSON (plus a curve CSV in mtgp-likelihood mode);
* ``bounds`` - print the utility bounds a config implies, without running;
* ``mtgp``   - shorthand for the likelihood-curve mode;
* ``verify`` - run the built-in statistical sanity harness.

Precedence is flags > config file > documented defaults.  A run is fully
determined by its seed: rerunning the same config writes byte-identical
output.  The seed falls back to the DPBO_SEED environment variable, then
to 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .convex import LabeledDataset
from .grid import HyperparamGrid
from .kernels import DatasetSimilarity, KernelParams
from .mtgp import SyntheticMTGPPipeline, build_matrices, likelihood_curve
from .release import (
    NoisyRunConfig,
    PrivacyBudget,
    bounds_from_constants,
    compute_bundle,
    run_exact,
    run_lipschitz,
    run_noisy,
)
from .synthetic import TabulatedObjective, draw_gp_values

SCHEMA_VERSION = 1

MODES = ("noisy", "exact", "lipschitz", "mtgp-likelihood")


class ConfigError(ValueError):
    """Invalid run configuration; message lists every violated constraint."""


class DataError(ValueError):
    """Malformed CSV dataset."""


@dataclass
class RunConfigFile:
    """Defaults-expanded run configuration (see README for the JSON layout)."""

    mode: str
    epsilon: float = 1.0
    delta: float = 0.1
    a: float = 1.0
    T: int = 10
    seed: int = 0
    sigma2: float | None = None
    k1: float = 0.0
    kernel_family: str = "se"
    lengthscale: float = 0.2
    grid_points: list | None = None
    grid_sobol: dict | None = None
    A: float | None = None
    tau: float | None = None
    L: float | None = None
    g_star: float | None = None
    lambda_min: float | None = None
    lambda_max: float | None = None
    lambda_grid_count: int = 20
    train_csv: str | None = None
    val_csv: str | None = None
    train_loss: str = "logistic"
    val_loss: str = "ramp"
    acquisition: str = "ucb"
    mtgp_pairs: int = 30
    mtgp_settings: int = 20
    mtgp_true_k1: float = 0.8
    mtgp_dim: int = 2
    curve_csv: str = "mtgp_curve.csv"
    repeat: int = 1

    def to_dict(self) -> dict:
        """Round-trippable nested form with all defaults made explicit."""
        flat = asdict(self)
        out = {
            k: flat[k]
            for k in (
                "mode",
                "epsilon",
                "delta",
                "a",
                "T",
                "seed",
                "sigma2",
                "k1",
                "train_loss",
                "val_loss",
                "acquisition",
                "repeat",
            )
        }
        out["kernel"] = {"family": flat["kernel_family"], "lengthscale": flat["lengthscale"]}
        if flat["grid_points"] is not None:
            out["grid"] = {"points": flat["grid_points"]}
        elif flat["grid_sobol"] is not None:
            out["grid"] = {"sobol": flat["grid_sobol"]}
        for k in ("A", "tau", "L", "g_star", "lambda_min", "lambda_max"):
            if flat[k] is not None:
                out[k] = flat[k]
        out["lambda_grid_count"] = flat["lambda_grid_count"]
        for k in ("train_csv", "val_csv"):
            if flat[k] is not None:
                out[k] = flat[k]
        out["mtgp"] = {
            "pairs": flat["mtgp_pairs"],
            "settings": flat["mtgp_settings"],
            "true_k1": flat["mtgp_true_k1"],
            "dim": flat["mtgp_dim"],
            "curve_csv": flat["curve_csv"],
        }
        return out


_TOP_LEVEL_KEYS = {
    "mode",
    "epsilon",
    "delta",
    "a",
    "T",
    "seed",
    "sigma2",
    "k1",
    "kernel",
    "grid",
    "A",
    "tau",
    "L",
    "g_star",
    "lambda_min",
    "lambda_max",
    "lambda_grid_count",
    "train_csv",
    "val_csv",
    "train_loss",
    "val_loss",
    "acquisition",
    "mtgp",
    "repeat",
}


def config_from_dict(raw: dict, validate: bool = True) -> RunConfigFile:
    """Validate a raw config mapping, reporting every violation at once."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        problems.append(f"unknown config keys: {sorted(unknown)}")

    mode = raw.get("mode")
    if mode not in MODES:
        problems.append(f"mode must be one of {list(MODES)}, got {mode!r}")
        raise ConfigError("; ".join(problems))

    kwargs: dict = {"mode": mode}
    for key in ("epsilon", "delta", "a", "sigma2", "k1", "A", "tau", "L", "g_star",
                "lambda_min", "lambda_max"):
        if key in raw and raw[key] is not None:
            try:
                kwargs[key] = float(raw[key])
            except (TypeError, ValueError):
                problems.append(f"{key} must be a number, got {raw[key]!r}")
    for key in ("T", "seed", "lambda_grid_count", "repeat"):
        if key in raw and raw[key] is not None:
            try:
                kwargs[key] = int(raw[key])
            except (TypeError, ValueError):
                problems.append(f"{key} must be an integer, got {raw[key]!r}")
    for key in ("train_csv", "val_csv", "train_loss", "val_loss", "acquisition"):
        if key in raw and raw[key] is not None:
            kwargs[key] = str(raw[key])

    kernel = raw.get("kernel", {})
    if kernel:
        if not isinstance(kernel, dict):
            problems.append("kernel must be an object with family/lengthscale")
        else:
            if "family" in kernel:
                kwargs["kernel_family"] = str(kernel["family"])
            if "lengthscale" in kernel:
                kwargs["lengthscale"] = float(kernel["lengthscale"])

    grid_spec = raw.get("grid")
    if grid_spec is not None:
        if not isinstance(grid_spec, dict) or not ({"points", "sobol"} & set(grid_spec)):
            problems.append('grid must be {"points": [...]} or {"sobol": {...}}')
        else:
            if "points" in grid_spec:
                kwargs["grid_points"] = grid_spec["points"]
            else:
                sob = grid_spec["sobol"]
                needed = {"count", "low", "high"}
                if not isinstance(sob, dict) or not needed <= set(sob):
                    problems.append("grid.sobol needs count, low, and high")
                else:
                    kwargs["grid_sobol"] = {
                        "count": int(sob["count"]),
                        "low": list(np.atleast_1d(sob["low"]).astype(float)),
                        "high": list(np.atleast_1d(sob["high"]).astype(float)),
                    }

    mtgp_spec = raw.get("mtgp", {})
    if mtgp_spec:
        if not isinstance(mtgp_spec, dict):
            problems.append("mtgp must be an object")
        else:
            mapping = {
                "pairs": ("mtgp_pairs", int),
                "settings": ("mtgp_settings", int),
                "true_k1": ("mtgp_true_k1", float),
                "dim": ("mtgp_dim", int),
                "curve_csv": ("curve_csv", str),
            }
            for key, (attr, cast) in mapping.items():
                if key in mtgp_spec:
                    kwargs[attr] = cast(mtgp_spec[key])

    if problems:
        raise ConfigError("; ".join(problems))
    cfg = RunConfigFile(**kwargs)
    if validate:
        _validate(cfg)
    return cfg


def _validate(cfg: RunConfigFile) -> None:
    problems: list[str] = []
    if cfg.epsilon <= 0:
        problems.append(f"epsilon must be positive, got {cfg.epsilon}")
    if not 0.0 <= cfg.delta < 1.0:
        problems.append(f"delta must lie in [0, 1), got {cfg.delta}")
    if cfg.a <= 0:
        problems.append(f"a must be positive, got {cfg.a}")
    if cfg.T < 1:
        problems.append(f"T must be >= 1, got {cfg.T}")
    if not 0.0 <= cfg.k1 <= 1.0:
        problems.append(f"k1 must lie in [0, 1], got {cfg.k1}")
    if cfg.repeat < 1:
        problems.append(f"repeat must be >= 1, got {cfg.repeat}")
    if cfg.kernel_family not in ("se", "matern52"):
        problems.append(f"kernel family must be 'se' or 'matern52', got {cfg.kernel_family!r}")
    if cfg.lengthscale <= 0:
        problems.append(f"lengthscale must be positive, got {cfg.lengthscale}")

    if cfg.mode == "noisy":
        if cfg.sigma2 is None or cfg.sigma2 <= 0:
            problems.append(f"noisy mode requires sigma2 > 0, got {cfg.sigma2}")
        if cfg.delta <= 0:
            problems.append("noisy mode requires delta > 0")
    elif cfg.mode == "exact":
        if cfg.A is None:
            problems.append("exact mode requires A")
        if cfg.tau is None:
            problems.append("exact mode requires tau")
        if cfg.T < 2:
            problems.append("exact mode requires T >= 2")
        if cfg.delta <= 0:
            problems.append("exact mode requires delta > 0")
    elif cfg.mode == "lipschitz":
        for name in ("L", "g_star", "lambda_min", "lambda_max"):
            if getattr(cfg, name) is None:
                problems.append(f"lipschitz mode requires {name}")
        for name in ("train_csv", "val_csv"):
            if getattr(cfg, name) is None:
                problems.append(f"lipschitz mode requires {name}")
        if cfg.lambda_min is not None and cfg.lambda_min <= 0:
            problems.append("lambda_min must be positive")
        if (
            cfg.lambda_min is not None
            and cfg.lambda_max is not None
            and cfg.lambda_max < cfg.lambda_min
        ):
            problems.append("lambda_max must be >= lambda_min")
    elif cfg.mode == "mtgp-likelihood":
        if not 0.0 < cfg.mtgp_true_k1 < 1.0:
            problems.append("mtgp.true_k1 must lie in (0, 1)")
        if cfg.mtgp_pairs < 1 or cfg.mtgp_settings < 1:
            problems.append("mtgp.pairs and mtgp.settings must be >= 1")

    if problems:
        raise ConfigError("; ".join(problems))


def parse_config(path) -> RunConfigFile:
    """Load and validate a JSON config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def _resolve_seed(flag_seed, cfg_seed_present: bool, cfg: RunConfigFile) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if cfg_seed_present:
        return cfg.seed
    env = os.environ.get("DPBO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"DPBO_SEED must be an integer, got {env!r}") from None
    return cfg.seed


def _build_grid(cfg: RunConfigFile) -> HyperparamGrid:
    if cfg.grid_points is not None:
        return HyperparamGrid.from_points(cfg.grid_points)
    if cfg.grid_sobol is not None:
        s = cfg.grid_sobol
        return HyperparamGrid.sobol_box(s["count"], s["low"], s["high"])
    return HyperparamGrid.sobol_box(25, [0.0, 0.0], [1.0, 1.0])


def read_csv_dataset(path) -> LabeledDataset:
    """Load a CSV with a 'label' column of +/-1 and numeric feature columns."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"dataset not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{p}: empty file, header required") from None
        if "label" not in header:
            raise DataError(f"{p}: header must contain a 'label' column")
        label_col = header.index("label")
        width = len(header)
        feats, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DataError(f"{p}: row {row_no} has {len(row)} fields, expected {width}")
            try:
                values = [float(x) for x in row]
            except ValueError as exc:
                raise DataError(f"{p}: row {row_no}: {exc}") from None
            label = values.pop(label_col)
            if label not in (-1.0, 1.0):
                raise DataError(f"{p}: row {row_no}: label must be -1 or 1, got {label}")
            feats.append(values)
            labels.append(label)
    if not feats:
        raise DataError(f"{p}: no data rows")
    return LabeledDataset.from_arrays(np.array(feats), np.array(labels))


def _kernel_params(cfg: RunConfigFile) -> KernelParams:
    return KernelParams(cfg.kernel_family, cfg.lengthscale)


def _single_run(cfg: RunConfigFile, seed: int) -> dict:
    params = _kernel_params(cfg)
    if cfg.mode == "noisy":
        grid = _build_grid(cfg)
        obj_rng, mech_rng = [
            np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
        ]
        values = draw_gp_values(grid, params, obj_rng)
        objective = TabulatedObjective(
            grid, values, noise_sigma=math.sqrt(cfg.sigma2), rng=obj_rng
        )
        run_cfg = NoisyRunConfig(
            grid=grid,
            kernel=params,
            T=cfg.T,
            budget=PrivacyBudget(cfg.epsilon, cfg.delta, cfg.a),
            sigma2=cfg.sigma2,
            k1=DatasetSimilarity(cfg.k1),
            seed=seed,
        )
        record = run_noisy(objective, run_cfg, rng=mech_rng)
        out = record.to_dict()
        out["objective"] = "synthetic-gp-draw"
        out["synthetic_truth"] = {
            "best_value": objective.best_value,
            "best_index": objective.best_index,
        }
        return out
    if cfg.mode == "exact":
        grid = _build_grid(cfg)
        obj_rng, mech_rng = [
            np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
        ]
        values = draw_gp_values(grid, params, obj_rng)
        objective = TabulatedObjective(grid, values)
        record = run_exact(
            objective,
            grid,
            params,
            T=cfg.T,
            budget=PrivacyBudget(cfg.epsilon, cfg.delta, cfg.a),
            A=cfg.A,
            tau=cfg.tau,
            k1=DatasetSimilarity(cfg.k1),
            rng=mech_rng,
            seed=seed,
        )
        out = record.to_dict()
        out["objective"] = "synthetic-gp-draw"
        out["synthetic_truth"] = {
            "best_value": objective.best_value,
            "best_index": objective.best_index,
        }
        return out
    if cfg.mode == "lipschitz":
        train = read_csv_dataset(cfg.train_csv)
        val = read_csv_dataset(cfg.val_csv)
        record = run_lipschitz(
            train,
            val,
            lam_min=cfg.lambda_min,
            lam_max=cfg.lambda_max,
            T=cfg.T,
            epsilon=cfg.epsilon,
            L=cfg.L,
            g_star=cfg.g_star,
            train_loss=cfg.train_loss,
            val_loss=cfg.val_loss,
            grid_count=cfg.lambda_grid_count,
            acquisition=cfg.acquisition,
            rng=np.random.default_rng(seed),
            seed=seed,
            a=cfg.a,
        )
        return record.to_dict()
    raise ConfigError(f"mode {cfg.mode!r} is not a single-run mode")


def _run_mtgp(cfg: RunConfigFile, seed: int) -> dict:
    params = _kernel_params(cfg)
    pipeline = SyntheticMTGPPipeline(cfg.mtgp_true_k1, params, dim=cfg.mtgp_dim)
    mats = build_matrices(cfg.mtgp_pairs, cfg.mtgp_settings, pipeline, seed)
    curve = likelihood_curve(mats, params)
    # the CSV destination comes from the config (not --out) so the result
    # JSON stays byte-identical across reruns of the same config
    csv_path = Path(cfg.curve_csv)
    curve.to_csv(csv_path)
    return {
        "objective": "synthetic-mtgp-draw",
        "true_k1": cfg.mtgp_true_k1,
        "pairs": cfg.mtgp_pairs,
        "settings": cfg.mtgp_settings,
        "k1_values": [float(x) for x in curve.k1_values],
        "loglik": [float(x) for x in curve.loglik],
        "argmax_k1": curve.argmax_k1,
        "curve_csv": str(csv_path),
        "seed": seed,
    }


def _emit(payload: dict, out_path) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text)


def _cmd_run(args) -> int:
    cfg, seed = _load_with_overrides(args)
    payload: dict = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
    }
    if cfg.mode == "mtgp-likelihood":
        payload["result"] = _run_mtgp(cfg, seed)
    elif cfg.repeat == 1:
        payload["result"] = _single_run(cfg, seed)
    else:
        payload["runs"] = [_single_run(cfg, seed + i) for i in range(cfg.repeat)]
        payload["seeds"] = [seed + i for i in range(cfg.repeat)]
    _emit(payload, args.out)
    return 0


def _cmd_bounds(args) -> int:
    cfg, seed = _load_with_overrides(args)
    params = _kernel_params(cfg)
    if cfg.mode == "noisy":
        grid = _build_grid(cfg)
        run_cfg = NoisyRunConfig(
            grid=grid,
            kernel=params,
            T=cfg.T,
            budget=PrivacyBudget(cfg.epsilon, cfg.delta, cfg.a),
            sigma2=cfg.sigma2,
            k1=DatasetSimilarity(cfg.k1),
            seed=seed,
        )
        bundle = compute_bundle(run_cfg)
        constants = {
            "grid_size": grid.size,
            "T": cfg.T,
            "epsilon": cfg.epsilon,
            "delta": cfg.delta,
            "sigma2": cfg.sigma2,
            "k1": cfg.k1,
            **bundle.as_dict(),
        }
        mode = "noisy"
    elif cfg.mode == "exact":
        grid = _build_grid(cfg)
        c = 2.0 * math.sqrt((1.0 - cfg.k1) * math.log(2.0 * grid.size / cfg.delta))
        decay = math.exp(-2.0 * cfg.tau / math.log(2.0) ** (grid.dim / 4.0))
        omega = cfg.A * decay
        constants = {
            "grid_size": grid.size,
            "T": cfg.T,
            "epsilon": cfg.epsilon,
            "delta": cfg.delta,
            "k1": cfg.k1,
            "A": cfg.A,
            "tau": cfg.tau,
            "d": grid.dim,
            "c": c,
            "decay": decay,
            "Omega": omega,
            "laplace_scale_f": omega / cfg.epsilon + c / cfg.epsilon,
        }
        mode = "exact"
    elif cfg.mode == "lipschitz":
        val = read_csv_dataset(cfg.val_csv)
        m = val.size
        swap = min(cfg.g_star / m, cfg.L / (m * cfg.lambda_min)) / cfg.epsilon
        rng_term = (
            (cfg.lambda_max - cfg.lambda_min)
            * cfg.L
            / (cfg.epsilon * cfg.lambda_max * cfg.lambda_min)
        )
        constants = {
            "T": cfg.T,
            "epsilon": cfg.epsilon,
            "m": m,
            "L": cfg.L,
            "g_star": cfg.g_star,
            "lam_min": cfg.lambda_min,
            "lam_max": cfg.lambda_max,
            "swap_term": swap,
            "range_term": rng_term,
            "laplace_scale_L": swap + rng_term,
        }
        mode = "lipschitz"
    else:
        raise ConfigError("bounds are not defined for mtgp-likelihood mode")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "constants": constants,
        "a": cfg.a,
        "bounds": bounds_from_constants(mode, constants, cfg.a),
    }
    _emit(payload, args.out)
    return 0


def _cmd_mtgp(args) -> int:
    cfg, seed = _load_with_overrides(args, default_mode="mtgp-likelihood")
    if cfg.mode != "mtgp-likelihood":
        raise ConfigError("the mtgp subcommand requires mode mtgp-likelihood")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "result": _run_mtgp(cfg, seed),
    }
    _emit(payload, args.out)
    return 0


def _cmd_verify(args) -> int:
    from .selfcheck import run_selfcheck

    report = run_selfcheck(seed=args.seed if args.seed is not None else 0)
    payload = {"schema_version": SCHEMA_VERSION, "checks": report}
    _emit(payload, args.out)
    return 0 if all(c["passed"] for c in report) else 1


def _load_with_overrides(args, default_mode=None):
    if args.config is not None:
        p = Path(args.config)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        cfg = config_from_dict(raw, validate=False)
        cfg_seed_present = "seed" in raw
    else:
        mode = args.mode or default_mode
        if mode is None:
            raise ConfigError("either --config or --mode is required")
        cfg = config_from_dict({"mode": mode}, validate=False)
        cfg_seed_present = False

    overrides = {
        "mode": args.mode,
        "epsilon": args.eps,
        "delta": args.delta,
        "T": args.T,
        "sigma2": args.sigma2,
        "k1": args.k1,
        "repeat": args.repeat,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(cfg, name, value)
    seed = _resolve_seed(args.seed, cfg_seed_present, cfg)
    cfg.seed = seed
    _validate(cfg)
    return cfg, seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpbo",
        description="Differentially private Bayesian optimization on finite grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a JSON run config")
        p.add_argument("--mode", choices=MODES, help="run mode (overrides config)")
        p.add_argument("--eps", type=float, help="privacy epsilon per release")
        p.add_argument("--delta", type=float, help="privacy delta per release")
        p.add_argument("--T", type=int, help="optimization steps")
        p.add_argument("--seed", type=int, help="master seed (DPBO_SEED is the fallback)")
        p.add_argument("--sigma2", type=float, help="observation noise variance")
        p.add_argument("--k1", type=float, help="similarity of neighboring validation sets")
        p.add_argument("--repeat", type=int, help="number of seeded repetitions")
        p.add_argument("--out", help="write result JSON here instead of stdout")

    for name, fn in (
        ("run", _cmd_run),
        ("bounds", _cmd_bounds),
        ("mtgp", _cmd_mtgp),
        ("verify", _cmd_verify),
    ):
        p = sub.add_parser(name)
        add_common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # runtime failures: structured, nonzero
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
