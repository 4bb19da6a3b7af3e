"""Command line entry point: ``python3 -m twophoton_qd <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 every point failed,
4 some points failed (their rows carry a ``failed: ...`` status).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .config import PRESETS, ConfigError, parse_config, preset_runs, with_model, with_nmax
from .phonons import displacement_average, get_kernels
from .sweep import emit_results, render, run_point, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 2, 3, 4

_RATE_OUTPUTS = ("n1", "n2", "single1_net", "single2_net", "twophoton_net")
_ENTANGLE_OUTPUTS = ("n1", "n2", "variance_sum", "variance_min")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--nmax", type=int, help="Fock cutoff for both modes")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common.add_argument("--model", choices=("full", "effective"), help="master-equation form")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="twophoton_qd", description="two-mode two-photon QD laser model")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="single steady-state point")
    sub.add_parser("sweep", parents=[common], help="scan one parameter axis")
    sub.add_parser("rates", parents=[common], help="emission-rate decomposition scan (effective model)")
    sub.add_parser("entangle", parents=[common], help="DGCZ witness scan")
    k = sub.add_parser("kernels", parents=[common], help="bath tables: <B>(T) and K_g, K_u(omega)")
    k.add_argument("--omega-max", type=float, default=20.0)
    k.add_argument("--omega-points", type=int, default=81)
    pr = sub.add_parser("preset", parents=[common], help="run a figure preset")
    pr.add_argument("name", choices=sorted(PRESETS))
    return ap


def _load_doc(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return doc


def _adjust(cfg, args, outputs=None, model=None):
    if args.nmax is not None:
        cfg = with_nmax(cfg, args.nmax)
    if model is not None:
        cfg = with_model(cfg, model)
    elif args.model is not None:
        cfg = with_model(cfg, args.model)
    if outputs is not None:
        cfg = replace(cfg, outputs=outputs)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg


def _write(text: str, args, cfg=None):
    path = args.out or (cfg.output_path if cfg is not None else None)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status(rows) -> int:
    failed = sum(not r.status.startswith("ok") for r in rows)
    if failed == len(rows):
        return EXIT_ALL_FAILED
    return EXIT_PARTIAL if failed else EXIT_OK


def _kernel_table(cfg, args) -> str:
    bath = cfg.base.bath
    kern = get_kernels(bath)
    omegas = np.linspace(-args.omega_max, args.omega_max, args.omega_points)
    kg = kern.half_fourier("g", omegas)
    ku = kern.half_fourier("u", omegas)
    temps = np.linspace(0.0, 30.0, 31)
    bs = [displacement_average(replace(bath, temperature=float(t))) for t in temps]
    f = lambda v: f"{float(v):.12g}"  # noqa: E731
    if args.format == "json":
        doc = {"bath": {"alpha_p": bath.alpha_p, "omega_b": bath.omega_b, "temperature": bath.temperature,
                        "g1_absolute": bath.scale()},
               "B_table": [{"T": float(f(t)), "B": float(f(b))} for t, b in zip(temps, bs)],
               "kernel_table": [{"omega": float(f(w)), "re_Kg": float(f(a.real)), "im_Kg": float(f(a.imag)),
                                 "re_Ku": float(f(b.real)), "im_Ku": float(f(b.imag))}
                                for w, a, b in zip(omegas, kg, ku)]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "T", "B", "omega", "re_Kg", "im_Kg", "re_Ku", "im_Ku"])
    for t, b in zip(temps, bs):
        w.writerow(["B", f(t), f(b), "", "", "", "", ""])
    for wv, a, b in zip(omegas, kg, ku):
        w.writerow(["K", f(bath.temperature), f(kern.B), f(wv), f(a.real), f(a.imag), f(b.real), f(b.imag)])
    return buf.getvalue()


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = _load_doc(args.config)
        if args.command == "preset":
            if "preset" in doc or "sweep" in doc:
                raise ConfigError("config for 'preset' may only override parameters, not preset/sweep")
            runs = [(lbl, _adjust(c, args)) for lbl, c in preset_runs(args.name, doc)]
        else:
            cfg = parse_config(doc)
            if args.command == "rates":
                cfg = _adjust(cfg, args, outputs=_RATE_OUTPUTS, model="effective")
            elif args.command == "entangle":
                cfg = _adjust(cfg, args, outputs=_ENTANGLE_OUTPUTS)
            else:
                cfg = _adjust(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "kernels":
        _write(_kernel_table(cfg, args), args, cfg)
        return EXIT_OK
    if args.command == "steady":
        rows = [run_point(cfg)]
        _write(render(rows, args.format, cfg), args, cfg)
        return _status(rows)
    if args.command == "preset":
        rows = []
        for label, c in runs:
            rows += run_sweep(c, args.workers, series=label)
        _write(emit_results(rows, args.format, None, runs[0][1]), args, runs[0][1])
        return _status(rows)
    rows = run_sweep(cfg, args.workers)
    _write(render(rows, args.format, cfg), args, cfg)
    return _status(rows)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
