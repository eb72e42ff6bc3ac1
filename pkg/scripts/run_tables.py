"""Reproduce the Monte Carlo tables from the shipped configs.

    python scripts/run_tables.py                      # every table, default sizes
    python scripts/run_tables.py table2 table4 --iterations 50 --workers 4

Reports go to ``results/<table>.csv`` and are echoed to stdout.
"""

import argparse
import sys
import time
from pathlib import Path

from nsqlr.cli import experiment_config, load_config
from nsqlr.experiment import run_experiment, with_overrides

ROOT = Path(__file__).resolve().parent.parent
# table8.cfg is the full-scale drift design; it needs days on a desktop
DEFAULT = ["table2", "table3", "table4", "table5", "table6", "table8_scaled"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("tables", nargs="*", default=DEFAULT)
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--workers", type=int, default=0, help="0 uses every core")
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    args = ap.parse_args(argv)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in args.tables:
        cfg = experiment_config(load_config(ROOT / "configs" / f"{name}.cfg"), "experiment")
        cfg = with_overrides(cfg, workers=args.workers)
        if args.iterations:
            cfg = with_overrides(cfg, iterations=args.iterations)
        start = time.time()
        report = run_experiment(cfg)
        (outdir / f"{name}.csv").write_text(report.to_csv())
        print(f"# {name}: {cfg.test} test, model {cfg.model}, {cfg.iterations} iterations, "
              f"{time.time() - start:.0f}s")
        sys.stdout.write(report.to_csv())
        for label, (d, p) in report.ks.items():
            print(f"#   KS vs chi2 at {label}: D={d:.4f} p={p:.3f}")


if __name__ == "__main__":
    main()
