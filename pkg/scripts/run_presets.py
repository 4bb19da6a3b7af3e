"""Run every named preset and write one CSV per preset into an output directory.

    python3 scripts/run_presets.py --out results/ [--nmax 6] [--workers 1] [fig2 fig3 ...]
"""
import argparse
import logging
import time
from pathlib import Path

from twophoton_qd.config import PRESETS, preset_runs, with_nmax
from twophoton_qd.sweep import emit_results, run_sweep

log = logging.getLogger("run_presets")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="preset names (default: all)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--nmax", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = args.names or sorted(n for n in PRESETS if n != "fig8")
    for name in names:
        t0 = time.time()
        rows = []
        runs = preset_runs(name)
        for label, cfg in runs:
            if args.nmax is not None:
                cfg = with_nmax(cfg, args.nmax)
            rows += run_sweep(cfg, args.workers, series=label if len(runs) > 1 else None)
        path = out / f"{name}.{args.format}"
        emit_results(rows, args.format, path, runs[0][1])
        bad = sum(not r.status.startswith("ok") for r in rows)
        log.info("%s: %d rows, %d failed, %.0f s -> %s", name, len(rows), bad, time.time() - t0, path)


if __name__ == "__main__":
    main()
