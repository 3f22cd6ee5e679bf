"""Config-driven parameter sweeps and result tables.

A run configuration is a TOML document::

    [params]            # base physical parameters (kappa units)
    c_d = 0.05          # or g + delta_a (+ gamma)
    c_r = 10.0          # optional, default: no free-space scattering
    nu = 10.0
    eta = 0.02
    eta_p = 150.0
    c_x = 0.4

    [sweep]             # every axis is a list; the grid is their product
    n_atoms = [4, 10, 20]
    l = [0]
    L = 10
    winding = 0
    detuning = ["sideband"]     # or explicit Delta_c values
    spont_emission = [false]

    [output]
    directory = "results"
    name = "fig2"

    [tolerances]
    threshold = 0.1

    [run]
    workers = 1

    [feasibility]       # optional physical estimate printed in the report
    recoil_hz = 3.9e3
    ...

Unknown sections or keys are rejected. Every sweep point is evaluated by a
pure function, so serial and parallel runs give identical rows.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import analytics
from .errors import CavityCoolError, ConfigInvalid, OutputUnwritable
from .geometry import optimized_lattice
from .model import DEFAULT_THRESHOLD, SystemParams, check_validity, derive_model
from .dynamics import steady_report

__all__ = [
    "RunConfig",
    "SCHEMA",
    "load_config",
    "parse_config",
    "apply_overrides",
    "list_presets",
    "preset_path",
    "sweep_points",
    "evaluate_point",
    "run_sweep",
    "write_results",
    "read_results",
    "emit_report",
]

SCHEMA = "cavitycool.results/1"

_PARAM_KEYS = {"kappa", "nu", "eta", "eta_p", "eta_p_phase", "c_x", "c_d", "c_r",
               "g", "delta_a", "gamma"}
_SWEEP_KEYS = {"n_atoms", "l", "L", "winding", "detuning", "spont_emission"}
_SECTIONS = {
    "params": _PARAM_KEYS,
    "sweep": _SWEEP_KEYS,
    "output": {"directory", "name"},
    "tolerances": {"threshold"},
    "run": {"workers"},
    "feasibility": {"recoil_hz", "eta", "gamma_hz", "g_hz", "delta_a_hz", "min_rate",
                    "kappa_hz", "kappa_divisor"},
}


@dataclass(frozen=True)
class RunConfig:
    params: dict
    n_atoms: tuple
    l: tuple = (0,)
    L: int = 10
    winding: int = 0
    detuning: tuple = ("sideband",)
    spont_emission: tuple = (False,)
    directory: str = "results"
    name: str = "run"
    threshold: float = DEFAULT_THRESHOLD
    workers: int = 1
    feasibility: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return len(self.n_atoms) * len(self.l) * len(self.detuning) * len(self.spont_emission)


def _as_tuple(value, key):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    if isinstance(value, (int, float, str, bool)):
        return (value,)
    raise ConfigInvalid(f"sweep.{key} must be a list")


def parse_config(doc: dict) -> RunConfig:
    for section, body in doc.items():
        if section not in _SECTIONS:
            raise ConfigInvalid(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigInvalid(f"[{section}] must be a table")
        unknown = set(body) - _SECTIONS[section]
        if unknown:
            raise ConfigInvalid(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    params = dict(doc.get("params", {}))
    if "c_d" in params and "g" in params:
        raise ConfigInvalid("give either c_d/c_r or g/delta_a/gamma, not both")
    if "c_d" not in params and "g" not in params:
        raise ConfigInvalid("[params] needs c_d or g")
    if "gamma" in params and "c_r" in params:
        raise ConfigInvalid("give either gamma or c_r")
    sweep = doc.get("sweep", {})
    if "n_atoms" not in sweep:
        raise ConfigInvalid("[sweep] needs n_atoms")
    out = doc.get("output", {})
    cfg = RunConfig(
        params=params,
        n_atoms=_as_tuple(sweep["n_atoms"], "n_atoms"),
        l=_as_tuple(sweep.get("l", [0]), "l"),
        L=sweep.get("L", 10),
        winding=sweep.get("winding", 0),
        detuning=_as_tuple(sweep.get("detuning", ["sideband"]), "detuning"),
        spont_emission=_as_tuple(sweep.get("spont_emission", [False]), "spont_emission"),
        directory=out.get("directory", "results"),
        name=out.get("name", "run"),
        threshold=doc.get("tolerances", {}).get("threshold", DEFAULT_THRESHOLD),
        workers=doc.get("run", {}).get("workers", 1),
        feasibility=dict(doc.get("feasibility", {})),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.n_points == 0:
        raise ConfigInvalid("sweep has no points (an axis is empty)")
    if not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in cfg.n_atoms):
        raise ConfigInvalid("sweep.n_atoms must hold positive integers")
    if not isinstance(cfg.L, int) or cfg.L < 1:
        raise ConfigInvalid("sweep.L must be a positive integer")
    if not all(isinstance(l, int) and 0 <= l < cfg.L for l in cfg.l):
        raise ConfigInvalid(f"sweep.l entries must be integers in [0, {cfg.L})")
    for d in cfg.detuning:
        if not (d == "sideband" or (isinstance(d, (int, float)) and not isinstance(d, bool))):
            raise ConfigInvalid(f"bad detuning {d!r}")
    if not all(isinstance(s, bool) for s in cfg.spont_emission):
        raise ConfigInvalid("sweep.spont_emission must hold booleans")
    if not isinstance(cfg.workers, int) or cfg.workers < 1:
        raise ConfigInvalid("run.workers must be a positive integer")
    try:
        _make_params(cfg.params, cfg.n_atoms[0], cfg.detuning[0], cfg.spont_emission[0])
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad [params]: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        preset = preset_path(str(path))
        if preset is None:
            raise ConfigInvalid(f"no such config file or preset: {path}")
        path = preset
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return parse_config(doc)


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``section.key=value`` strings (values parsed as TOML)."""
    doc = config_to_doc(cfg)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigInvalid(f"override {item!r} is not of the form section.key=value")
        doc.setdefault(section, {})[name] = _parse_value(value.strip())
    return parse_config(doc)


def config_to_doc(cfg: RunConfig) -> dict:
    doc = {
        "params": dict(cfg.params),
        "sweep": {"n_atoms": list(cfg.n_atoms), "l": list(cfg.l), "L": cfg.L,
                  "winding": cfg.winding, "detuning": list(cfg.detuning),
                  "spont_emission": list(cfg.spont_emission)},
        "output": {"directory": cfg.directory, "name": cfg.name},
        "tolerances": {"threshold": cfg.threshold},
        "run": {"workers": cfg.workers},
    }
    if cfg.feasibility:
        doc["feasibility"] = dict(cfg.feasibility)
    return doc


def list_presets() -> list:
    root = resources.files("cavitycool") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name: str):
    if name.endswith(".toml"):
        name = name[:-5]
    if name not in list_presets():
        return None
    return Path(str(resources.files("cavitycool") / "presets" / f"{name}.toml"))


def _make_params(base: dict, n_atoms, detuning, spont) -> SystemParams:
    p = dict(base)
    common = {k: p[k] for k in ("kappa", "nu", "eta", "c_x") if k in p}
    eta_p = complex(p.get("eta_p", 150.0)) * complex(math.cos(p.get("eta_p_phase", 0.0)),
                                                      math.sin(p.get("eta_p_phase", 0.0)))
    common.update(eta_p=eta_p, detuning=detuning, spont_emission=spont)
    if "c_d" in p:
        kw = {"delta_a": p["delta_a"]} if "delta_a" in p else {}
        return SystemParams.from_cooperativities(n_atoms, c_d=p["c_d"],
                                                 c_r=p.get("c_r", math.inf), **kw, **common)
    return SystemParams(n_atoms=n_atoms, g=p["g"], delta_a=p.get("delta_a", math.inf),
                        gamma=p.get("gamma", 0.0), **common)


def sweep_points(cfg: RunConfig) -> list:
    """Grid points ordered by (spont_emission, detuning, l, n_atoms)."""
    det_order = sorted(cfg.detuning, key=lambda d: (d != "sideband", d if d != "sideband" else 0))
    pts = []
    for spont, det, l, n in itertools.product(sorted(cfg.spont_emission), det_order,
                                              sorted(cfg.l), sorted(cfg.n_atoms)):
        pts.append({"index": len(pts), "n_atoms": n, "l": l, "L": cfg.L,
                    "winding": cfg.winding, "detuning": det, "spont_emission": spont,
                    "params": cfg.params, "threshold": cfg.threshold})
    return pts


def evaluate_point(point: dict) -> dict:
    """Run one sweep point; failures come back as an error row."""
    n = point["n_atoms"]
    row = {
        "index": point["index"], "n_atoms": n, "l": point["l"], "L": point["L"],
        "winding": point["winding"], "detuning": point["detuning"],
        "spont_emission": point["spont_emission"],
    }
    try:
        params = _make_params(point["params"], n, point["detuning"], point["spont_emission"])
        geom = optimized_lattice(n, n=point["winding"], l=point["l"], L=point["L"])
        model = derive_model(params, geom)
        row.update(
            c_d=params.c_d, c_r=params.c_r, nu=params.nu, eta=params.eta,
            eta_p=abs(complex(params.eta_p)), kappa=params.kappa, c_x=params.c_x,
            delta_c=model.delta_c, delta_c_prime=model.delta_c_prime, alpha=model.alpha,
            kappa_eff=model.kappa_eff, d_over_lambda=geom.spacing_ratio(),
        )
        validity = check_validity(model, params, geom, threshold=point["threshold"])
        for name, ratio in validity.ratios().items():
            row[f"valid_{name}"] = ratio
        row["valid_all"] = validity.all_ok
        label, crossover, suppression = analytics.regime_classify(model, params)
        row.update(regime=label, crossover_n=crossover, suppression=suppression)
        gx = analytics.independent_rates(model, geom, params)
        pred = analytics.phonon_predictions(model, geom, params)
        row.update(gamma_x_min=float(np.min(gx)), eq22_max=float(np.max(pred.independent)),
                   eq23_max=float(np.max(pred.collective)))
        if geom.is_base_lattice:
            cm = analytics.collective_predictions(model, params, geom)
            row.update(gamma_X=cm.gamma_x, gamma_X1=cm.gamma_x1, n_X=cm.n_x_inf)
        rep = steady_report(params, geom, model)
        row.update(
            status="ok", error="",
            gamma_min=rep.min_rate, gamma_max=rep.max_rate,
            n_mean=rep.mean_phonon, n_max=float(np.max(rep.phonons)),
            n_min=float(np.min(rep.phonons)),
            hottest_atom=int(np.argmax(rep.phonons)) + 1,
        )
        row["_rates"] = [float(x) for x in rep.decay_rates]
        row["_n"] = [float(x) for x in rep.phonons]
        row["_gx"] = [float(x) for x in gx]
        row["_eq22"] = [float(x) for x in pred.independent]
        row["_eq23"] = [float(x) for x in pred.collective]
    except CavityCoolError as exc:
        row.update(status=type(exc).__name__, error=str(exc))
    return row


def run_sweep(cfg: RunConfig, workers: int | None = None, out_dir=None, write=True):
    """Evaluate every grid point and write the result tables.

    Returns ``(rows, paths)``; ``paths`` is empty when ``write`` is false.
    """
    validate_config(cfg)
    workers = cfg.workers if workers is None else workers
    pts = sweep_points(cfg)
    if workers > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate_point, pts))
    else:
        rows = [evaluate_point(p) for p in pts]
    rows.sort(key=lambda r: r["index"])
    paths = {}
    if write:
        out = Path(out_dir if out_dir is not None else cfg.directory)
        paths = write_results(rows, out, cfg.name, cfg)
    return rows, paths


_ARRAYS = (("_rates", "rate"), ("_n", "n"), ("_gx", "gx"), ("_eq22", "eq22"), ("_eq23", "eq23"))
_SCALARS = [
    "index", "status", "error", "n_atoms", "l", "L", "winding", "detuning", "spont_emission",
    "c_d", "c_r", "nu", "eta", "eta_p", "kappa", "c_x", "delta_c", "delta_c_prime", "alpha",
    "kappa_eff", "d_over_lambda", "regime", "crossover_n", "suppression",
    "gamma_min", "gamma_max", "n_mean", "n_max", "n_min", "hottest_atom",
    "gamma_X", "gamma_X1", "n_X", "gamma_x_min", "eq22_max", "eq23_max",
    "valid_lamb_dicke", "valid_decay_hierarchy", "valid_coop_collective",
    "valid_coop_suppression", "valid_weak_coupling", "valid_eta_spread", "valid_all",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _columns(rows):
    n_max = max((r["n_atoms"] for r in rows), default=1)
    width = max(2, len(str(n_max + 1)))
    cols = ["schema"] + list(_SCALARS)
    for key, prefix in _ARRAYS:
        count = n_max + 1 if key == "_rates" else n_max
        cols += [f"{prefix}_{k:0{width}d}" for k in range(1, count + 1)]
    return cols, width


def _flatten(row, width):
    flat = {"schema": SCHEMA}
    flat.update({k: _fmt(row.get(k)) for k in _SCALARS})
    for key, prefix in _ARRAYS:
        for k, v in enumerate(row.get(key, ()), start=1):
            flat[f"{prefix}_{k:0{width}d}"] = _fmt(v)
    return flat


def results_csv(rows) -> str:
    cols, width = _columns(rows)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, restval="", lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_flatten(row, width))
    return buf.getvalue()


def _long_tables(rows):
    rates = [["index", "n_atoms", "l", "spont_emission", "k", "rate"]]
    phon = [["index", "n_atoms", "l", "spont_emission", "atom", "n", "gx", "eq22", "eq23"]]
    for r in rows:
        if r.get("status") != "ok":
            continue
        key = [r["index"], r["n_atoms"], r["l"], r["spont_emission"]]
        for k, v in enumerate(r["_rates"], start=1):
            rates.append(key + [k, v])
        for i in range(r["n_atoms"]):
            phon.append(key + [i + 1, r["_n"][i], r["_gx"][i], r["_eq22"][i], r["_eq23"][i]])
    return rates, phon


def _write_table(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        for line in table:
            w.writerow([_fmt(x) for x in line])


def write_results(rows, out_dir, name, cfg: RunConfig | None = None) -> dict:
    """Write the wide result table, long-format plot data and a run summary."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"results": out / f"{name}.csv", "rates": out / f"{name}_rates.csv",
                 "phonons": out / f"{name}_phonons.csv", "meta": out / f"{name}_meta.json",
                 "summary": out / f"{name}_summary.txt"}
        with open(paths["results"], "w", newline="") as fh:
            fh.write(results_csv(rows))
        rates, phon = _long_tables(rows)
        _write_table(paths["rates"], rates)
        _write_table(paths["phonons"], phon)
        meta = {"schema": SCHEMA, "name": name}
        if cfg is not None:
            meta["config"] = config_to_doc(cfg)
        with open(paths["meta"], "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        with open(paths["summary"], "w") as fh:
            fh.write(emit_report(rows, feasibility=cfg.feasibility if cfg else None))
    except OSError as exc:
        raise OutputUnwritable(f"cannot write results to {out}: {exc}") from exc
    return paths


def _parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_results(path) -> list:
    """Read a result table back into row dicts (array columns regrouped)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            if raw.get("schema") != SCHEMA:
                raise ConfigInvalid(f"{path}: unsupported schema {raw.get('schema')!r}")
            row = {k: _parse_cell(raw[k]) for k in _SCALARS}
            for key, prefix in _ARRAYS:
                vals = [(c, raw[c]) for c in reader.fieldnames if c.startswith(prefix + "_")
                        and c[len(prefix) + 1:].isdigit()]
                row[key] = [float(v) for _, v in vals if v != ""]
            rows.append(row)
    return rows


def _loglog_fit(x, y):
    from scipy import stats

    res = stats.linregress(np.log(x), np.log(y))
    if len(x) > 2:
        half = stats.t.ppf(0.975, len(x) - 2) * res.stderr
    else:
        half = math.nan
    return res.slope, half


def _crossing(n, a, b):
    """First N where curve ``a`` drops below ``b`` (log-linear interpolation)."""
    n, a, b = map(np.asarray, (n, a, b))
    d = np.log(a) - np.log(b)
    for k in range(1, len(n)):
        if d[k - 1] > 0 >= d[k] or d[k - 1] < 0 <= d[k]:
            w = d[k - 1] / (d[k - 1] - d[k])
            return float(n[k - 1] + w * (n[k] - n[k - 1]))
    return None


def emit_report(rows, feasibility: dict | None = None) -> str:
    """Human-readable summary of a sweep."""
    lines = []
    ok = [r for r in rows if r.get("status") == "ok"]
    bad = [r for r in rows if r.get("status") != "ok"]
    lines.append(f"{len(rows)} sweep point(s), {len(ok)} ok, {len(bad)} failed")
    for r in bad:
        lines.append(f"  FAILED N={r['n_atoms']} l={r['l']}: {r['status']}: {r['error']}")

    if len(ok) == 1 and ok[0]["n_atoms"] == 1:
        r = ok[0]
        lines.append("single atom:")
        lines.append(f"  cooling rate  {r['gamma_min']:.4g} kappa (independent estimate "
                     f"{r['gamma_x_min']:.4g})")
        lines.append(f"  phonon number {r['n_mean']:.4g} (estimate {r['eq22_max']:.4g})")
    else:
        groups = {}
        for r in ok:
            groups.setdefault((r["spont_emission"], r["detuning"], r["l"]), []).append(r)
        for (spont, det, l), grp in sorted(groups.items(), key=lambda kv: str(kv[0])):
            grp.sort(key=lambda r: r["n_atoms"])
            ns = [r["n_atoms"] for r in grp]
            lines.append(f"group spont={'on' if spont else 'off'} detuning={det} l={l}: "
                         f"N = {ns[0]}..{ns[-1]} ({len(ns)} points)")
            labels = [r["regime"] for r in grp]
            if len(set(labels)) > 1:
                c_d = grp[0]["c_d"]
                lines.append(f"  crossover N ≈ {2 / c_d:.0f} (c_d·N = 2)")
                with_x1 = [r for r in grp if r.get("gamma_X1") is not None
                           and np.isfinite(r["gamma_X1"])]
                if len(with_x1) > 1:
                    cross = _crossing([r["n_atoms"] for r in with_x1],
                                      [r["gamma_x_min"] for r in with_x1],
                                      [r["gamma_X1"] for r in with_x1])
                    if cross is not None:
                        lines.append(f"  independent and collective rate estimates cross "
                                     f"at N ≈ {cross:.1f}")
            for r in grp:
                extra = ""
                if r.get("gamma_X1") is not None and np.isfinite(r["gamma_X1"]):
                    extra = f"  gamma_X1 {r['gamma_X1']:.3e}"
                lines.append(f"  N={r['n_atoms']:4d} {r['regime']:<11s} min rate "
                             f"{r['gamma_min']:.3e}{extra}  n_mean {r['n_mean']:.4g}"
                             f"  n_max {r['n_max']:.4g}")
            if spont:
                crossover = grp[0]["crossover_n"]
                big = [r for r in grp if r["n_atoms"] >= 1.5 * crossover]
                if len(big) >= 2:
                    slope, half = _loglog_fit([r["n_atoms"] for r in big],
                                              [r["n_max"] for r in big])
                    lines.append(f"  hottest-atom scaling n ~ N^{slope:.2f} "
                                 f"(95% CI ±{half:.2f}, N ≥ {big[0]['n_atoms']})")
        by_n = {}
        for r in ok:
            if r["L"] > 1:
                by_n.setdefault((r["spont_emission"], r["n_atoms"]), []).append(r)
        for (spont, n), grp in sorted(by_n.items()):
            ls = sorted(grp, key=lambda r: r["l"])
            if len(ls) > 1 and ls[0]["l"] == 0:
                best = max(ls, key=lambda r: r["gamma_min"])
                lines.append(f"optimization N={n}: min rate gain {best['gamma_min'] / ls[0]['gamma_min']:.2f}x"
                             f" at l={best['l']} ({best['gamma_min']:.3e} kappa)")

    if ok:
        lines.append("worst validity margins (ratio, pass at <= threshold):")
        for name in ("lamb_dicke", "decay_hierarchy", "coop_collective", "coop_suppression",
                     "weak_coupling", "eta_spread"):
            key = f"valid_{name}"
            worst = max(ok, key=lambda r: r[key])
            lines.append(f"  {name:<17s} {worst[key]:.3g} (N={worst['n_atoms']}, l={worst['l']})")

    if feasibility:
        fz = dict(feasibility)
        rep = analytics.feasibility_report(**fz)
        lines.append("feasibility:")
        lines.extend("  " + s for s in rep.lines())
        if ok:
            best = max(ok, key=lambda r: r["gamma_min"])
            alt = analytics.feasibility_report(**{**fz, "min_rate": best["gamma_min"]})
            lines.append(f"  with the best simulated min rate {best['gamma_min']:.3e} kappa "
                         f"(N={best['n_atoms']}, l={best['l']}): "
                         f"{alt.cooling_time_s * 1e3:.2f} ms")
    return "\n".join(lines) + "\n"
