"""Command-line entry point: ``nsqlr {simulate,test-sigma,test-theta,test-hy,experiment}``.

Exit status: 0 success, 1 usage error, 2 data/config error, 3 numerical-quality error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from nsqlr.errors import ConfigError, DataError, NumericalError
from nsqlr.experiment import ExperimentConfig, resolve_sweep, run_experiment, simulate_replication
from nsqlr.files import fmt_number, read_observations, write_observations, write_outcomes
from nsqlr.grid import build_overlaps
from nsqlr.hy import v_n_test
from nsqlr.likelihood import QuasiLikelihood, default_block_count
from nsqlr.lrt import test_sigma, test_theta
from nsqlr.model import get_model

SWEEP_KEYS = ("true_values", "u_over_sqrt_n", "u_over_sqrt_nh")


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


CONFIG_KEYS = {
    "model": str,
    "test": str,
    "n": int,
    "h_n": float,
    "horizon": float,
    "lambda1": float,
    "lambda2": float,
    "sigma1": float,
    "sigma2": float,
    "sigma3": float,
    "theta1": float,
    "theta2": float,
    "true_values": _floats,
    "u_over_sqrt_n": _floats,
    "u_over_sqrt_nh": _floats,
    "r": int,
    "blocks": int,
    "alphas": _floats,
    "iterations": int,
    "seed": int,
    "fine_step": float,
    "workers": int,
    "data": str,
    "out": str,
}

REQUIRED = {
    "simulate": ("model", "n", "h_n", "lambda1", "lambda2", "sigma1", "sigma2", "sigma3"),
    "experiment": ("model", "test", "n", "h_n", "lambda1", "lambda2", "sigma1", "sigma2", "iterations",
                   "seed"),
}


class UsageError(Exception):
    pass


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in cfg:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            cfg[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for key {key!r}") from None
    return cfg


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def experiment_config(cfg: dict, command: str) -> ExperimentConfig:
    missing = [k for k in REQUIRED[command] if k not in cfg]
    if missing:
        raise ConfigError(f"missing required key(s) for {command}: {', '.join(missing)}")
    sweeps = [k for k in SWEEP_KEYS if k in cfg]
    if len(sweeps) > 1:
        raise ConfigError(f"keys {', '.join(sweeps)} are mutually exclusive")
    model = get_model(cfg["model"])
    test = cfg.get("test", "theta" if model.d2 else "sigma")
    n, h_n = cfg["n"], cfg["h_n"]
    tested = cfg.get("theta1", 0.0) if test == "theta" else cfg.get("sigma3", 0.0)
    if sweeps:
        kind = "absolute" if sweeps[0] == "true_values" else sweeps[0]
        sweep = resolve_sweep(kind, cfg[sweeps[0]], n, h_n)
    else:
        sweep = resolve_sweep("absolute", [tested], n, h_n)
    if command == "experiment" and "sigma3" not in cfg and test != "theta" and not sweeps:
        raise ConfigError("experiment needs sigma3 or a sweep key (true_values, u_over_sqrt_n)")
    kwargs = dict(
        model=cfg["model"], test=test, n=n, h_n=h_n, horizon=cfg.get("horizon", n * h_n),
        lambda1=cfg["lambda1"], lambda2=cfg["lambda2"],
        sigma=(cfg["sigma1"], cfg["sigma2"], cfg.get("sigma3", 0.0)),
        theta=(cfg.get("theta1", 0.0), cfg.get("theta2", 0.0)), sweep=sweep, r=cfg.get("r", 1),
        blocks=cfg.get("blocks"), iterations=cfg.get("iterations", 1), seed=cfg.get("seed", 0),
        fine_step=cfg.get("fine_step"), workers=cfg.get("workers", 0),
    )
    if "alphas" in cfg:
        kwargs["alphas"] = cfg["alphas"]
    return ExperimentConfig(**kwargs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsqlr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one dataset and write an observation CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    for name, default_model in (("test-sigma", "T1"), ("test-theta", "T3"), ("test-hy", "T1")):
        p = sub.add_parser(name, help=f"run the {name[5:]} test on an observation CSV")
        p.add_argument("--data")
        p.add_argument("--config")
        p.add_argument("--model", default=None, help=f"model family (default {default_model})")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--out", help="test outcome CSV")
        if name == "test-hy":
            p.add_argument("--n", type=int, help="sample-size index n (default: M1 + M2)")
        else:
            p.add_argument("--r", type=int, default=1)
            p.add_argument("--blocks", type=int)
        p.set_defaults(default_model=default_model)

    p = sub.add_parser("experiment", help="run a Monte Carlo study and write a report CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--iterations", type=int)
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("simulate needs an output path (--out or key 'out')")
    config = experiment_config(cfg, "simulate")
    _, data = simulate_replication(config, 0, 0)
    write_observations(data, out)
    print(f"wrote {data.grid1.times.size + data.grid2.times.size} observations to {out}")
    return 0


def _cmd_test(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    path = args.data or cfg.get("data")
    if not path:
        raise ConfigError("test needs an observation CSV (--data or key 'data')")
    model = get_model(args.model or cfg.get("model", args.default_model))
    data = read_observations(path)
    data.meta.update(drift_family=model.drift_family, diffusion_family=model.diffusion_family)
    if args.command == "test-hy":
        n = args.n or cfg.get("n") or data.grid1.n_intervals + data.grid2.n_intervals
        out = v_n_test(data, build_overlaps(data.grid1, data.grid2), n, data.horizon, args.alpha)
        extra = f" v_n={fmt_number(out.diagnostics['v_n'])}"
    else:
        blocks = args.blocks or cfg.get("blocks") or default_block_count(data.grid1, data.grid2)
        ql = QuasiLikelihood(data, model, blocks)
        if args.command == "test-sigma":
            out = test_sigma(data, model, args.r, alpha=args.alpha, ql=ql)
        else:
            out = test_theta(data, model, args.r, alpha=args.alpha, ql=ql)
        extra = f" blocks={blocks}"
    print(f"test={out.test} statistic={fmt_number(out.statistic)} df={out.df} "
          f"p_value={fmt_number(out.p_value)} alpha={out.alpha!r} "
          f"reject={'true' if out.reject else 'false'}{extra}")
    dest = args.out or cfg.get("out")
    if dest:
        write_outcomes([out], dest)
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    for key in ("seed", "workers", "iterations"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("experiment needs an output path (--out or key 'out')")
    config = experiment_config(cfg, "experiment")
    report = run_experiment(config)
    Path(out).write_text(report.to_csv())
    sys.stdout.write(report.to_csv())
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "test-sigma": _cmd_test,
    "test-theta": _cmd_test,
    "test-hy": _cmd_test,
    "experiment": _cmd_experiment,
}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
