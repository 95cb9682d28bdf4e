"""Experiment configuration, execution and on-disk artifacts.

A run directory looks like::

    <out_dir>/meta.json        full config, seed manifest, code version
    <out_dir>/data/*.csv       one file per observable (and per alpha / r0)
    <out_dir>/plots/*.gp       gnuplot scripts reading ../data/*.csv

``meta.json`` is itself a valid config: feeding it back reproduces the CSV
files bit for bit.
"""

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .disorder import DisorderSpec, generate_correlated_sequence
from .ensemble import (
    ConcurrenceMapRequest,
    EnsembleConfig,
    EntropyScanRequest,
    EvolveRequest,
    MaxConcurrenceRequest,
    TransmissionRequest,
    run_ensemble,
)
from .errors import InvalidInputError, MagnonError
from .oracle import bessel_amplitude
from .propagator import time_grid

EXPERIMENTS = (
    "disorder-sample",
    "evolve",
    "entropy-scan",
    "concurrence-map",
    "max-concurrence",
    "transmission",
    "oracle",
)
CONFIG_KEYS = {
    "experiment",
    "n_sites",
    "alpha",
    "coupling",
    "realizations",
    "base_seed",
    "x0",
    "sender",
    "time",
    "time_grid",
    "r0_list",
    "L_max",
    "site_window",
    "distance",
    "out_dir",
}
META_KEYS = {"config", "seed_manifest", "code_version", "diagnostics", "files"}
DEFAULT_WINDOW = 150
DEFAULT_L_MAX = 120
UNITS = "time in 1/J; energies in J; amplitudes, probabilities, concurrences and entropies dimensionless"


class ConfigError(MagnonError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str = None, line: int = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def located(self, source: str = "<config>") -> str:
        where = f"{source}:{self.line}" if self.line else source
        what = f"key '{self.key}': " if self.key else ""
        return f"{where}: {what}{self}"


# ---------------------------------------------------------------------------
# config parsing


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _need(cfg, key):
    if cfg.get(key) is None:
        raise ConfigError(f"required for experiment '{cfg['experiment']}'", key)
    return cfg[key]


def _int_key(cfg, key, lo=None, hi=None):
    value = _need(cfg, key)
    if not _is_int(value):
        raise ConfigError(f"must be an integer, got {value!r}", key)
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ConfigError(f"must lie in [{lo}, {hi}], got {value}", key)
    return value


def _number_key(cfg, key, lo=None):
    value = _need(cfg, key)
    if not _is_number(value):
        raise ConfigError(f"must be a finite number, got {value!r}", key)
    if lo is not None and value < lo:
        raise ConfigError(f"must be >= {lo}, got {value}", key)
    return float(value)


def _alphas(cfg):
    raw = cfg.get("alpha")
    values = raw if isinstance(raw, list) else [raw]
    if not values:
        raise ConfigError("alpha list is empty", "alpha")
    for a in values:
        if a is not None and (not _is_number(a) or a < 0):
            raise ConfigError(f"alpha values must be non-negative numbers or null, got {a!r}", "alpha")
    return values


def _grid(cfg):
    grid = cfg.get("time_grid")
    if grid is not None:
        if not isinstance(grid, dict) or set(grid) != {"start", "stop", "step"}:
            raise ConfigError("must be an object with exactly start, stop, step", "time_grid")
        if not all(_is_number(grid[k]) for k in grid):
            raise ConfigError("start, stop and step must be numbers", "time_grid")
        if grid["start"] < 0 or grid["step"] <= 0 or grid["stop"] < grid["start"]:
            raise ConfigError("need 0 <= start <= stop and step > 0", "time_grid")
        return time_grid(float(grid["start"]), float(grid["stop"]), float(grid["step"]))
    t = _number_key(cfg, "time", 0.0)
    return np.array([t])


def _window_bounds(cfg, x0, n_sites):
    win = cfg.get("site_window", DEFAULT_WINDOW)
    if win == "full":
        return (1, n_sites)
    if _is_int(win) and win >= 0:
        return (max(1, x0 - win), min(n_sites, x0 + win))
    if isinstance(win, list) and len(win) == 2 and all(_is_int(v) for v in win) and win[0] <= win[1]:
        lo, hi = x0 + win[0], x0 + win[1]
        if lo < 1 or hi > n_sites:
            raise ConfigError(f"offsets {win} from x0={x0} leave the chain", "site_window")
        return (lo, hi)
    raise ConfigError('must be a half-width, [lo, hi] offsets from x0, or "full"', "site_window")


def normalize_config(raw: dict) -> dict:
    """Validate a config document and return it with every default filled in.

    Accepts a plain config or a ``meta.json`` written by a previous run.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in raw:
        unknown = set(raw) - META_KEYS
        if unknown:
            raise ConfigError(f"unknown meta keys {sorted(unknown)}", sorted(unknown)[0])
        raw = raw["config"]
        if not isinstance(raw, dict):
            raise ConfigError("'config' must be a JSON object", "config")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key (allowed: {', '.join(sorted(CONFIG_KEYS))})", key)
    cfg = dict(raw)
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"must be one of {', '.join(EXPERIMENTS)}, got {exp!r}", "experiment")
    cfg.setdefault("out_dir", f"runs/{exp}")
    if not isinstance(cfg["out_dir"], str) or not cfg["out_dir"]:
        raise ConfigError("must be a non-empty path string", "out_dir")

    if exp == "oracle":
        _int_key(cfg, "distance", 0)
        _number_key(cfg, "time", 0.0)
        return cfg

    n = _int_key(cfg, "n_sites", 2)
    cfg.setdefault("coupling", 1.0)
    cfg["coupling"] = _number_key(cfg, "coupling")
    if cfg["coupling"] <= 0:
        raise ConfigError("must be positive", "coupling")
    cfg.setdefault("base_seed", 0)
    _int_key(cfg, "base_seed", 0, (1 << 64) - 1)
    cfg.setdefault("alpha", None)
    alphas = _alphas(cfg)
    if any(a is not None for a in alphas) and (n < 4 or n % 2):
        raise ConfigError("disordered chains need an even number of sites >= 4", "n_sites")

    if exp == "disorder-sample":
        if any(a is None for a in alphas):
            raise ConfigError("disorder-sample needs numeric alpha", "alpha")
        return cfg

    cfg.setdefault("realizations", 100)
    _int_key(cfg, "realizations", 1)
    if exp == "transmission":
        cfg.setdefault("sender", 1)
        _int_key(cfg, "sender", 1, n)
        cfg.setdefault("r0_list", [20])
        r0 = cfg["r0_list"]
        if not isinstance(r0, list) or not r0 or not all(_is_int(v) and 1 <= v <= n for v in r0):
            raise ConfigError(f"must be a non-empty list of sites in 1..{n}", "r0_list")
        cfg.setdefault("time_grid", None)
        if cfg["time_grid"] is not None:
            _grid(cfg)
        return cfg

    cfg.setdefault("x0", n // 2)
    x0 = _int_key(cfg, "x0", 1, n)
    if exp == "evolve":
        _grid(cfg)
    elif exp == "entropy-scan":
        _number_key(cfg, "time", 0.0)
        cfg.setdefault("L_max", min(DEFAULT_L_MAX, n - x0))
        _int_key(cfg, "L_max", 1, n - x0)
    elif exp == "concurrence-map":
        _number_key(cfg, "time", 0.0)
        cfg.setdefault("site_window", DEFAULT_WINDOW)
        _window_bounds(cfg, x0, n)
    elif exp == "max-concurrence":
        cfg.setdefault("time_grid", {"start": 0.0, "stop": 200.0, "step": 0.1})
        _grid(cfg)
        cfg.setdefault("site_window", DEFAULT_WINDOW)
        _window_bounds(cfg, x0, n)
    return cfg


def key_line(text: str, key: str):
    """1-based line of the first ``"key":`` occurrence in a JSON text."""
    if key is None:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    try:
        return normalize_config(raw)
    except ConfigError as exc:
        exc.line = key_line(text, exc.key)
        raise


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain ints otherwise."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows, note: str = None):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# units: {UNITS}"]
    if note:
        lines.append(f"# {note}")
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def alpha_tag(alpha) -> str:
    return "ordered" if alpha is None else f"alpha{fmt(alpha)}"


_GP_HEAD = """# gnuplot script; run from this directory: gnuplot {name}.gp
set datafile separator ','
set datafile commentschars '#'
set key autotitle columnheader
set terminal pngcairo size 900,600
set output '{name}.png'
"""


def write_plot(path: Path, body: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_GP_HEAD.format(name=path.stem) + body)


@dataclass
class RunOutcome:
    out_dir: Path
    files: list
    meta: dict


# ---------------------------------------------------------------------------
# execution


def _ensemble_config(cfg, alpha, request):
    return EnsembleConfig(
        n_sites=cfg["n_sites"],
        alpha=alpha,
        experiment=request,
        realizations=cfg["realizations"],
        base_seed=cfg["base_seed"],
        coupling=cfg["coupling"],
    )


def _request(cfg):
    exp = cfg["experiment"]
    n, x0 = cfg["n_sites"], cfg.get("x0")
    if exp == "evolve":
        return EvolveRequest(x0, tuple(_grid(cfg)))
    if exp == "entropy-scan":
        return EntropyScanRequest(x0, float(cfg["time"]), cfg["L_max"])
    if exp == "concurrence-map":
        return ConcurrenceMapRequest(x0, float(cfg["time"]), _window_bounds(cfg, x0, n))
    if exp == "max-concurrence":
        return MaxConcurrenceRequest(x0, tuple(_grid(cfg)), _window_bounds(cfg, x0, n))
    if exp == "transmission":
        window = None
        step = 0.5
        if cfg.get("time_grid") is not None:
            g = cfg["time_grid"]
            window, step = (float(g["start"]), float(g["stop"])), float(g["step"])
        return TransmissionRequest(cfg["sender"], tuple(cfg["r0_list"]), window, step)
    raise InvalidInputError(f"no ensemble request for {exp}")


def _validate_requests(cfg):
    if cfg["experiment"] in ("disorder-sample", "oracle"):
        return
    request = _request(cfg)
    if isinstance(request, TransmissionRequest):
        request.validate(cfg["n_sites"], cfg["coupling"])
    else:
        request.validate(cfg["n_sites"])


def run_experiment(cfg: dict, out_dir=None) -> RunOutcome:
    """Execute a normalised config, writing CSV, plot scripts and ``meta.json``."""
    cfg = normalize_config(cfg)
    _validate_requests(cfg)
    out = Path(out_dir if out_dir is not None else cfg["out_dir"])
    data, plots = out / "data", out / "plots"
    exp = cfg["experiment"]
    manifests, diagnostics, files = [], {}, []

    if exp == "oracle":
        m, t = cfg["distance"], float(cfg["time"])
        w = bessel_amplitude(0, m, t)
        write_csv(data / "oracle.csv", ["distance", "time", "re_w", "im_w", "prob"], [[m, t, w.real, w.imag, abs(w) ** 2]])
        files.append("data/oracle.csv")
    elif exp == "disorder-sample":
        for alpha in _alphas(cfg):
            seq = generate_correlated_sequence(DisorderSpec(cfg["n_sites"], alpha, cfg["base_seed"]))
            name = f"disorder_{alpha_tag(alpha)}"
            write_disorder_csv(data / f"{name}.csv", seq.values, alpha, cfg["base_seed"])
            write_plot(plots / f"{name}.gp", f"set xlabel 'site n'\nset ylabel 'epsilon_n (J)'\nplot '../data/{name}.csv' using 1:2 with lines\n")
            files.append(f"data/{name}.csv")
            manifests.append({"alpha": alpha, "base_seed": cfg["base_seed"], "realizations": [{"index": None, "seed": cfg["base_seed"]}]})
    elif exp == "transmission":
        files += _run_transmission(cfg, data, plots, manifests, diagnostics)
    else:
        for alpha in _alphas(cfg):
            result = run_ensemble(_ensemble_config(cfg, alpha, _request(cfg)))
            manifests.append(result.manifest(cfg["base_seed"]))
            diagnostics[alpha_tag(alpha)] = result.diagnostics
            files += _write_result(cfg, result, alpha, data, plots)

    meta = {
        "config": cfg,
        "seed_manifest": manifests,
        "code_version": __version__,
        "diagnostics": diagnostics,
        "files": files,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return RunOutcome(out, files, meta)


def write_disorder_csv(path: Path, values, alpha, seed):
    rows = [[n, v] for n, v in enumerate(values, start=1)]
    write_csv(path, ["n", "epsilon"], rows, note=f"alpha={fmt(alpha)} seed={seed}")


def _run_transmission(cfg, data, plots, manifests, diagnostics):
    r0_list = cfg["r0_list"]
    rows = {r0: [] for r0 in r0_list}
    curves = {}
    for alpha in _alphas(cfg):
        result = run_ensemble(_ensemble_config(cfg, alpha, _request(cfg)))
        manifests.append(result.manifest(cfg["base_seed"]))
        diagnostics[alpha_tag(alpha)] = result.diagnostics
        for k, r0 in enumerate(r0_list):
            rows[r0].append(
                [
                    "ordered" if alpha is None else alpha,
                    result.mean["T"][k],
                    result.mean["R"][k],
                    result.stderr["T"][k],
                    result.stderr["R"][k],
                    bool(result.derived["drift_flag"][k]),
                ]
            )
        curves[alpha] = (result.derived["times"], result.mean["T_t"], result.mean["R_t"])
    files = []
    for r0 in r0_list:
        name = f"transmission_r0{r0}"
        write_csv(
            data / f"{name}.csv",
            ["alpha", "T", "R", "T_stderr", "R_stderr", "drift_flag"],
            rows[r0],
            note=f"N={cfg['n_sites']} sender={cfg['sender']} r0={r0} realizations={cfg['realizations']}",
        )
        write_plot(
            plots / f"{name}.gp",
            "set xlabel 'alpha'\nset ylabel 'coefficient'\nset yrange [0:1]\n"
            f"plot '../data/{name}.csv' using 1:2:4 with yerrorlines, '' using 1:3:5 with yerrorlines\n",
        )
        files.append(f"data/{name}.csv")
    # time-resolved curves over the evaluation window (stationarity check)
    for alpha, (times, t_curve, r_curve) in curves.items():
        name = f"transmission_window_{alpha_tag(alpha)}"
        header = ["t"] + [f"T_r0{r0}" for r0 in r0_list] + [f"R_r0{r0}" for r0 in r0_list]
        body = [[t, *t_curve[:, i], *r_curve[:, i]] for i, t in enumerate(times)]
        write_csv(data / f"{name}.csv", header, body)
        write_plot(plots / f"{name}.gp", f"set xlabel 't (1/J)'\nplot for [c=2:{1 + 2 * len(r0_list)}] '../data/{name}.csv' using 1:c with lines\n")
        files.append(f"data/{name}.csv")
    return files


def _write_result(cfg, result, alpha, data, plots):
    exp = cfg["experiment"]
    tag = alpha_tag(alpha)
    x0 = cfg["x0"]
    note = f"N={cfg['n_sites']} x0={x0} realizations={result.realizations} {tag}"
    if exp == "entropy-scan":
        name = f"entropy_{tag}"
        s, e = result.mean["S"], result.stderr["S"]
        rows = [[L, s[L - 1], e[L - 1]] for L in range(1, s.size + 1)]
        write_csv(data / f"{name}.csv", ["L", "S_mean", "S_stderr"], rows, note=note + f" t={fmt(cfg['time'])}")
        write_plot(plots / f"{name}.gp", f"set xlabel 'L'\nset ylabel 'S'\nplot '../data/{name}.csv' using 1:2:3 with yerrorlines\n")
        return [f"data/{name}.csv"]
    if exp in ("concurrence-map", "max-concurrence"):
        prefix = "concurrence" if exp == "concurrence-map" else "max_concurrence"
        name = f"{prefix}_{tag}"
        lo, hi = _window_bounds(cfg, x0, cfg["n_sites"])
        offsets = np.arange(lo, hi + 1) - x0
        c = result.mean["C"]
        rows = [[offsets[a], offsets[b], c[a, b]] for a in range(offsets.size) for b in range(offsets.size)]
        write_csv(data / f"{name}.csv", ["i", "j", "C"], rows, note=note + "; i, j are site offsets from x0")
        write_plot(
            plots / f"{name}.gp",
            "set xlabel 'i'\nset ylabel 'j'\nset cbrange [0:0.1]\nset size square\n"
            f"plot '../data/{name}.csv' using 1:2:3 with image notitle\n",
        )
        return [f"data/{name}.csv"]
    if exp == "evolve":
        name = f"evolve_{tag}"
        times = _grid(cfg)
        p, pe = result.mean["prob"], result.stderr["prob"]
        re_w, im_w = result.mean["re"], result.mean["im"]
        rows = [
            [x, times[k], re_w[k, x - 1], im_w[k, x - 1], p[k, x - 1], pe[k, x - 1]]
            for k in range(times.size)
            for x in range(1, cfg["n_sites"] + 1)
        ]
        write_csv(
            data / f"{name}.csv",
            ["x", "t", "re_w_mean", "im_w_mean", "prob_mean", "prob_stderr"],
            rows,
            note=note,
        )
        write_plot(plots / f"{name}.gp", f"set xlabel 'site x'\nset ylabel '|w_x|^2'\nplot '../data/{name}.csv' using 1:5 with impulses\n")
        return [f"data/{name}.csv"]
    raise InvalidInputError(f"unhandled experiment {exp}")
