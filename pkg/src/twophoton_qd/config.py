"""Run configuration: JSON documents, validation and figure presets.

Document layout (every key optional, unknown keys are rejected)::

    {
      "preset": "fig3",                      # named recipe, see PRESETS
      "model": "full" | "effective",
      "params": {"g1": 1.0, "g2": 1.0, "delta_x": -1.0, "Delta_xx": 15.0,
                 "Delta_1": 5.0, "Delta_2": -5.0, "kappa_1": 0.1, "kappa_2": 0.1,
                 "gamma_1": 0.01, "gamma_2": 0.01, "gamma_d": 0.01,
                 "n_max1": 6, "n_max2": 6, "omega_p_prefactor": null},
      "bath": {"temperature": 5.0, "alpha_p": 1.42e-3, "omega_b": 10.0, "g1_absolute": null},
      "pump": {"scheme": "incoherent", "eta1": 0.5, "eta2": 0.5}
            | {"scheme": "coherent", "Omega1": 2.0, "Omega2": 2.0, "Delta_p": 0.0},
      "sweep": {"axis": "Delta_1", "start": 0.0, "stop": 10.0, "points": 81},
      "outputs": ["pop_u", "n1", ...],
      "phases": [-0.5, -0.5],
      "truncation_check": false,
      "output_path": null
    }

All energies and rates are in units of g, temperatures in kelvin.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .model import CoherentPump, IncoherentPump, SystemParams
from .operators import SpaceLayout
from .phonons import PhononBathParams


class ConfigError(ValueError):
    pass


AXES = ("Delta_1", "eta", "temperature", "Omega", "Delta_p")

OBSERVABLE_COLUMNS = (
    "pop_g", "pop_x", "pop_y", "pop_u", "n1", "n2", "F1", "F2", "g2_1", "g2_2", "g2_12",
    "single1_net", "single2_net", "twophoton_net", "variance_sum", "variance_min",
)

_PARAM_KEYS = {"g1", "g2", "delta_x", "Delta_xx", "Delta_1", "Delta_2", "kappa_1", "kappa_2",
               "gamma_1", "gamma_2", "gamma_d", "n_max1", "n_max2", "omega_p_prefactor"}
_BATH_KEYS = {"temperature", "alpha_p", "omega_b", "g1_absolute"}
_PUMP_KEYS = {"incoherent": {"scheme", "eta1", "eta2"},
              "coherent": {"scheme", "Omega1", "Omega2", "Delta_p"}}
_TOP_KEYS = {"preset", "model", "params", "bath", "pump", "sweep", "outputs", "phases",
             "truncation_check", "output_path", "series"}
_SWEEP_KEYS = {"axis", "start", "stop", "points"}
_NONNEG = {"kappa_1", "kappa_2", "gamma_1", "gamma_2", "gamma_d", "eta1", "eta2", "temperature",
           "alpha_p", "omega_b"}


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "Delta_1"
    start: float = 0.0
    stop: float = 10.0
    points: int = 81

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; choose from {', '.join(AXES)}")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError("sweep.points must be an integer >= 2")
        if not self.start < self.stop:
            raise ConfigError("sweep.start must be smaller than sweep.stop")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.points))


@dataclass(frozen=True)
class RunConfig:
    base: SystemParams = field(default_factory=SystemParams)
    model_form: str = "full"
    sweep: SweepSpec = field(default_factory=SweepSpec)
    outputs: tuple[str, ...] = OBSERVABLE_COLUMNS
    phases: tuple[float, float] = (-0.5, -0.5)
    truncation_check: bool = False
    output_path: str | None = None
    name: str | None = None
    document: dict = field(default_factory=dict, compare=False, repr=False)
    deterministic: bool = True  # no random numbers anywhere in a run


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    bad = sorted(set(d) - allowed)
    if bad:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(bad)}")


def _number(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    if key in _NONNEG and v < 0:
        raise ConfigError(f"{key} must be >= 0, got {v}")
    return v


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "pump":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _params_from(doc: dict) -> SystemParams:
    params = doc.get("params", {})
    _check_keys(params, _PARAM_KEYS, "params")
    bath = doc.get("bath", {})
    _check_keys(bath, _BATH_KEYS, "bath")
    pump = doc.get("pump", {"scheme": "incoherent"})
    if not isinstance(pump, dict):
        raise ConfigError("pump must be an object")
    scheme = pump.get("scheme", "incoherent")
    if scheme not in _PUMP_KEYS:
        raise ConfigError(f"pump.scheme must be 'incoherent' or 'coherent', got {scheme!r}")
    _check_keys(pump, _PUMP_KEYS[scheme], "pump")

    kw = {}
    for k, v in params.items():
        if k in ("n_max1", "n_max2"):
            continue
        if k == "omega_p_prefactor" and v is None:
            kw[k] = None
            continue
        kw[k] = _number(v, k)
    nm = {}
    for k in ("n_max1", "n_max2"):
        if k in params:
            v = params[k]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{k} must be an integer >= 1")
            nm[k] = v
    layout = SpaceLayout(**nm)
    bkw = {k: (None if v is None and k == "g1_absolute" else _number(v, k)) for k, v in bath.items()}
    if bkw.get("g1_absolute") is not None and bkw["g1_absolute"] <= 0:
        raise ConfigError("bath.g1_absolute must be positive")
    pkw = {k: _number(v, k) for k, v in pump.items() if k != "scheme"}
    pump_obj = IncoherentPump(**pkw) if scheme == "incoherent" else CoherentPump(**pkw)
    try:
        return SystemParams(**kw, pump=pump_obj, bath=PhononBathParams(**bkw), layout=layout)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_document(doc: dict) -> dict:
    """Expand a preset into a full document (preset values first, user keys on top)."""
    _check_keys(doc, _TOP_KEYS, "config")
    if "preset" not in doc:
        return copy.deepcopy(doc)
    name = doc["preset"]
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    if "sweep" in doc:
        raise ConfigError("a preset fixes its own sweep; remove either 'preset' or 'sweep'")
    user = {k: v for k, v in doc.items() if k != "preset"}
    out = _merge(PRESETS[name], user)
    out["preset"] = name
    return out


def parse_config(text: str | dict | None) -> RunConfig:
    """Validate a JSON document (string or already-parsed dict) into a RunConfig."""
    if text is None or (isinstance(text, str) and not text.strip()):
        doc = {}
    elif isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        doc = copy.deepcopy(text)
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if "series" in doc:
        raise ConfigError("'series' is only valid inside preset definitions")
    doc = resolve_document(doc)
    if "series" in doc:  # multi-series preset: the first series stands for the preset
        first = dict(doc.pop("series")[0])
        first.pop("label")
        doc = _merge(doc, first)
    return _build(doc)


def _build(doc: dict) -> RunConfig:
    base = _params_from(doc)
    model = doc.get("model", "full")
    if model not in ("full", "effective"):
        raise ConfigError(f"model must be 'full' or 'effective', got {model!r}")
    sw = doc.get("sweep", {})
    _check_keys(sw, _SWEEP_KEYS, "sweep")
    try:
        sweep = SweepSpec(**{k: (v if k == "axis" else _number(v, f"sweep.{k}")) for k, v in sw.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if sweep.axis in ("Omega", "Delta_p") and base.scheme != "coherent":
        raise ConfigError(f"sweep axis {sweep.axis} needs the coherent pump scheme")
    if sweep.axis == "eta" and base.scheme != "incoherent":
        raise ConfigError("sweep axis eta needs the incoherent pump scheme")
    if sweep.axis == "temperature" and sweep.start < 0:
        raise ConfigError("temperature sweep must start at >= 0 K")
    outputs = doc.get("outputs", list(OBSERVABLE_COLUMNS))
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs must be a non-empty list")
    bad = [o for o in outputs if o not in OBSERVABLE_COLUMNS]
    if bad:
        raise ConfigError(f"unresolvable output(s): {', '.join(map(str, bad))}")
    phases = doc.get("phases", [-0.5, -0.5])
    if not isinstance(phases, list) or len(phases) != 2:
        raise ConfigError("phases must be a list [phi1, phi2]")
    phases = tuple(_number(v, "phases") for v in phases)
    tc = doc.get("truncation_check", False)
    if not isinstance(tc, bool):
        raise ConfigError("truncation_check must be true or false")
    out_path = doc.get("output_path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError("output_path must be a string")
    return RunConfig(base, model, sweep, tuple(outputs), phases, tc, out_path, doc.get("preset"), doc)


def preset_runs(name: str, overrides: dict | None = None) -> list[tuple[str, RunConfig]]:
    """All (series label, RunConfig) pairs of a preset, e.g. both temperatures of fig6."""
    doc = resolve_document({"preset": name, **(overrides or {})})
    series = doc.pop("series", [{"label": name}])
    out = []
    for s in series:
        s = dict(s)
        label = s.pop("label")
        out.append((label, _build(_merge(doc, s))))
    return out


def with_nmax(cfg: RunConfig, n_max: int) -> RunConfig:
    from dataclasses import replace
    if n_max < 1:
        raise ConfigError("--nmax must be >= 1")
    return replace(cfg, base=cfg.base.replace(layout=SpaceLayout(n_max, n_max)))


def with_model(cfg: RunConfig, model: str) -> RunConfig:
    from dataclasses import replace
    if model not in ("full", "effective"):
        raise ConfigError(f"model must be 'full' or 'effective', got {model!r}")
    return replace(cfg, model_form=model)


# ---------------------------------------------------------------------------
# figure presets

_POPS = ["pop_g", "pop_x", "pop_y", "pop_u"]
_STATS = ["n1", "n2", "F1", "F2", "g2_1", "g2_2", "g2_12"]
_RATES = ["single1_net", "single2_net", "twophoton_net", "n1", "n2"]
_COH0 = {"scheme": "coherent", "Omega1": 2.0, "Omega2": 2.0, "Delta_p": 0.0}
_COH7 = {"scheme": "coherent", "Omega1": 2.0, "Omega2": 2.0, "Delta_p": 7.0}
_D1_SCAN = {"axis": "Delta_1", "start": 0.0, "stop": 10.0, "points": 81}
_D1_COH = {"axis": "Delta_1", "start": 1.0, "stop": 9.0, "points": 65}
_ETA_SCAN = {"axis": "eta", "start": 0.05, "stop": 5.0, "points": 45}
_TEMPS = [{"label": f"T={t:g}K", "bath": {"temperature": t}} for t in (0.0, 5.0, 20.0)]

PRESETS: dict[str, dict] = {
    "fig2": {"sweep": _D1_SCAN, "outputs": _POPS},
    "fig3": {"sweep": _D1_SCAN, "outputs": _STATS},
    "fig4": {"params": {"Delta_1": 5.0}, "sweep": _ETA_SCAN, "outputs": _POPS},
    "fig5": {"params": {"Delta_1": 5.0}, "sweep": _ETA_SCAN, "outputs": _STATS},
    "fig6": {"model": "effective", "params": {"Delta_1": 5.0},
             "sweep": {"axis": "eta", "start": 0.1, "stop": 3.0, "points": 30}, "outputs": _RATES,
             "series": [{"label": "a:T=5K", "bath": {"temperature": 5.0}},
                        {"label": "b:T=20K", "bath": {"temperature": 20.0}}]},
    "fig7": {"pump": _COH0, "sweep": _D1_COH, "outputs": _POPS},
    "fig9": {"pump": _COH0, "sweep": _D1_COH, "outputs": _STATS},
    "fig10": {"model": "effective", "pump": _COH0, "sweep": _D1_COH, "outputs": _RATES,
              "series": [{"label": "a:T=5K", "bath": {"temperature": 5.0}},
                         {"label": "b:T=20K", "bath": {"temperature": 20.0}}]},
    "fig11": {"pump": _COH7, "sweep": _D1_COH, "outputs": _POPS},
    "fig12": {"pump": _COH7, "sweep": _D1_COH, "outputs": _STATS},
    "fig13a": {"pump": {**_COH7, "Omega1": 0.5, "Omega2": 0.5}, "phases": [-0.5, -0.5],
               "sweep": {"axis": "Delta_1", "start": 3.0, "stop": 7.0, "points": 41},
               "outputs": ["variance_sum", "variance_min", "n1", "n2"], "series": _TEMPS},
    "fig13b": {"pump": _COH7, "phases": [-0.5, -0.5],
               "sweep": {"axis": "Delta_1", "start": 3.0, "stop": 7.0, "points": 41},
               "outputs": ["variance_sum", "variance_min", "n1", "n2"], "series": _TEMPS},
}
# fig8 has no scan of its own; it is an alias of fig7
PRESETS["fig8"] = PRESETS["fig7"]
PRESETS["fig13"] = {
    "pump": _COH7, "phases": [-0.5, -0.5], "sweep": PRESETS["fig13a"]["sweep"],
    "outputs": PRESETS["fig13a"]["outputs"],
    "series": [{"label": f"{tag}:T={t:g}K", "bath": {"temperature": t},
                "pump": {**_COH7, "Omega1": om, "Omega2": om}}
               for tag, om in (("a", 0.5), ("b", 2.0)) for t in (0.0, 5.0, 20.0)],
}
