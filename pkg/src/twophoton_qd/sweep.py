"""Parameter sweeps and deterministic result files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import OBSERVABLE_COLUMNS, RunConfig
from .model import CoherentPump, IncoherentPump, SystemParams, build_liouvillian
from .observables import all_observables, dgcz_phase_scan
from .phonons import get_kernels
from .steady import solve_steady, truncation_convergence

log = logging.getLogger(__name__)

NEGATIVITY_LIMIT = -1e-6
DIAGNOSTIC_COLUMNS = ("residual", "min_eigenvalue", "n_max1", "n_max2", "truncation_converged")
SIG_DIGITS = 12
NOTES = ("energies and rates in units of g; two-photon net is per photon pair; "
         "three- and four-photon rate-equation terms are not modelled")


@dataclass(frozen=True)
class ResultRow:
    axis: str
    value: float
    status: str = "ok"
    observables: dict = field(default_factory=dict)
    residual: float = math.nan
    min_eigenvalue: float = math.nan
    n_max: tuple[int, int] = (0, 0)
    truncation_converged: bool | None = None
    series: str | None = None

    def flat(self, outputs=OBSERVABLE_COLUMNS) -> dict:
        d = {self.axis: self.value}
        if self.series is not None:
            d["series"] = self.series
        d["status"] = self.status
        for k in outputs:
            d[k] = self.observables.get(k, math.nan)
        d.update(residual=self.residual, min_eigenvalue=self.min_eigenvalue,
                 n_max1=self.n_max[0], n_max2=self.n_max[1], truncation_converged=self.truncation_converged)
        return d


def apply_axis(p: SystemParams, axis: str, value: float) -> SystemParams:
    value = float(value)
    if axis == "Delta_1":
        return p.replace(Delta_1=value)
    if axis == "eta":
        if not isinstance(p.pump, IncoherentPump):
            raise ValueError("eta axis needs incoherent pumping")
        return p.replace(pump=IncoherentPump(value, value))
    if axis == "temperature":
        return p.replace(bath=replace(p.bath, temperature=value))
    if not isinstance(p.pump, CoherentPump):
        raise ValueError(f"{axis} axis needs coherent pumping")
    if axis == "Omega":
        return p.replace(pump=replace(p.pump, Omega1=value, Omega2=value))
    if axis == "Delta_p":
        return p.replace(pump=replace(p.pump, Delta_p=value))
    raise ValueError(f"unknown axis {axis!r}")


def evaluate_point(p: SystemParams, form: str = "full", phases=(-0.5, -0.5),
                   truncation_check: bool = False) -> tuple[dict, object, bool | None]:
    """Solve one parameter point and return (observables, solution, converged flag)."""
    kernels = get_kernels(p.bath)
    converged = None
    if truncation_check:
        sol, report = truncation_convergence(p, form)
        converged = report.converged
        p = p.replace(layout=sol.rho.layout)
    bundle = build_liouvillian(p, form, kernels)
    sol = solve_steady(bundle)
    lam = sol.rho.min_eigenvalue()
    if lam < NEGATIVITY_LIMIT:
        raise RuntimeError(f"steady state has eigenvalue {lam:.2e} below {NEGATIVITY_LIMIT:g}")
    obs = all_observables(bundle, sol.rho, phases)
    obs["variance_min"] = dgcz_phase_scan(sol.rho)[1]
    return obs, sol, converged


def _run_point(args) -> ResultRow:
    cfg, value, series = args
    axis = cfg.sweep.axis
    try:
        p = apply_axis(cfg.base, axis, value)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            obs, sol, conv = evaluate_point(p, cfg.model_form, cfg.phases, cfg.truncation_check)
        lay = sol.rho.layout
        return ResultRow(axis, float(value), "ok", obs, sol.residual, sol.rho.min_eigenvalue(),
                         (lay.n_max1, lay.n_max2), conv, series)
    except Exception as exc:  # recorded in-row, the sweep continues
        log.warning("point %s=%g failed: %s", axis, value, exc)
        msg = " ".join(str(exc).split())
        return ResultRow(axis, float(value), f"failed: {type(exc).__name__}: {msg}",
                         n_max=(cfg.base.layout.n_max1, cfg.base.layout.n_max2), series=series)


def run_sweep(cfg: RunConfig, workers: int = 1, series: str | None = None) -> list[ResultRow]:
    """Evaluate every sweep point; rows come back in axis order."""
    jobs = [(cfg, float(v), series) for v in cfg.sweep.values()]
    if workers <= 1:
        return [_run_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_point, jobs))


def run_point(cfg: RunConfig) -> ResultRow:
    """Single steady-state evaluation at the base parameters."""
    return _run_point((replace(cfg, sweep=replace(cfg.sweep, axis="Delta_1")), cfg.base.Delta_1, None))


# ---------------------------------------------------------------------------
# serialisation


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return f"{v:.{SIG_DIGITS}g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    return v


def columns_for(rows: list[ResultRow], outputs=OBSERVABLE_COLUMNS) -> list[str]:
    return list(rows[0].flat(outputs))


def render(rows: list[ResultRow], fmt: str = "csv", cfg: RunConfig | None = None) -> str:
    if not rows:
        raise ValueError("no rows to write")
    outputs = cfg.outputs if cfg is not None else OBSERVABLE_COLUMNS
    flat = [r.flat(outputs) for r in rows]
    cols = list(flat[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for d in flat:
            w.writerow([_fmt(d[c]) for c in cols])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "config": cfg.document if cfg is not None else {},
            "model": cfg.model_form if cfg is not None else None,
            "notes": NOTES,
            "columns": cols,
            "rows": [{c: _json_value(d[c]) for c in cols} for d in flat],
        }
        return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_results(rows: list[ResultRow], fmt: str = "csv", path=None, cfg: RunConfig | None = None) -> str:
    """Write rows as CSV or JSON (12 significant digits, NaN as 'nan' / null).

    Returns the text; writes it to ``path`` when given. Identical inputs give
    byte-identical output.
    """
    text = render(rows, fmt, cfg)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc}") from exc
    return text


def load_results(text: str, fmt: str = "csv") -> list[dict]:
    """Parse emitted text back into flat dictionaries (inverse of ``render``)."""
    if fmt == "json":
        doc = json.loads(text)
        # null is NaN for numeric columns; the convergence flag keeps None ("not checked")
        return [{k: (math.nan if v is None and k != "truncation_converged" else v) for k, v in r.items()}
                for r in doc["rows"]]
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        out = {}
        for k, v in rec.items():
            if k == "status" or k == "series":
                out[k] = v
            elif v == "":
                out[k] = None
            elif v in ("true", "false"):
                out[k] = v == "true"
            elif k in ("n_max1", "n_max2"):
                out[k] = int(v)
            else:
                out[k] = float(v)
        rows.append(out)
    return rows


def rounded(d: dict) -> dict:
    """Values as they appear after serialisation."""
    out = {}
    for k, v in d.items():
        if isinstance(v, (float, np.floating)) and not isinstance(v, bool):
            v = float(v)
            out[k] = v if math.isnan(v) else float(f"{v:.{SIG_DIGITS}g}")
        else:
            out[k] = v
    return out
