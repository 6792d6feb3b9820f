"""Experiment runner: structured configs in, CSV series and JSON reports out.

Verbs:
    ctsp run <config.toml>         execute the configured scenario
    ctsp validate <config.toml>    parse and validate only
    ctsp dispersion <config.toml>  dump the characteristic-root table
    ctsp rates --alpha A --n N [--j J] [--sigma S] [--variant V]

Exit codes: 0 pass, 2 tolerance failure, 3 config error, 4 runtime divergence.
Environment: CTSP_OUTPUT_DIR overrides the output directory, CTSP_THREADS
bounds the norm-evaluation work pool.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import datetime
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .datum import Datum, GaussianTerm, gaussian, moment_killed, zero_datum
from .model import ModelParams, char_roots, classify_zone, zone_thresholds, asymptotic_roots
from .profiles import compute_b0, kind_for
from .quadrature import QuadratureError
from .radial import SobolevSpec, hs_norm_error, hs_norm_linear, hs_norm_profile
from .rates import (InadmissibleRateError, RateQuery, Variant, fit_decay_rate,
                    hypotheses_met, improved_error_increment, theoretical_rate)
from .solver import (DivergenceError, SpectralGrid, grid_hs_norm, initial_state,
                     integrate)

SCENARIOS = ("linear-decay", "profile-error", "improved-error",
             "nonlinear-decay", "b0-study", "dispersion-dump")


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# configuration schema
# ----------------------------------------------------------------------

_MODEL_KEYS = {"tau", "c0", "b", "nu", "A", "B", "alpha", "dim"}
_DATUM_KEYS = {"kind", "amplitude", "width", "widths", "amplitudes", "center"}
_TIME_KEYS = {"start", "stop", "count", "spacing"}
_NORM_KEYS = {"entries"}
_FIT_KEYS = {"window", "tolerance", "slope_range"}
_GRID_KEYS = {"n", "N", "L", "dt", "t_end", "snap_every", "nl_scale"}
_OUTPUT_KEYS = {"dir"}
_XI_KEYS = {"start", "stop", "count"}
_TOP_KEYS = {"scenario", "seed", "model", "data", "time", "norms", "fit",
             "grid", "output", "xi"}


@dataclass
class Config:
    scenario: str
    params: ModelParams
    data: tuple[Datum, Datum, Datum] | None
    times: np.ndarray | None
    norms: list[tuple[float, int]]
    fit_window: tuple[float, float] | None
    tolerance: float
    slope_range: tuple[float, float] | None
    grid: dict | None
    xi_grid: np.ndarray | None
    out_dir: str
    seed: int
    raw: dict = field(repr=False, default_factory=dict)


def _reject_unknown(table: dict, allowed: set, path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}{key}'")


def _parse_datum(table: dict, n: int, path: str) -> Datum:
    _reject_unknown(table, _DATUM_KEYS, path)
    kind = table.get("kind")
    if kind == "zero":
        return zero_datum(n)
    if kind == "gaussian":
        center = table.get("center")
        return gaussian(n, float(table.get("amplitude", 1.0)),
                        float(table.get("width", 1.0)),
                        tuple(center) if center is not None else None)
    if kind == "gaussian_combo":
        amps = table.get("amplitudes")
        widths = table.get("widths")
        if not amps or not widths or len(amps) != len(widths):
            raise ConfigError(f"'{path}amplitudes' and '{path}widths' must be "
                              "lists of equal length")
        terms = tuple(GaussianTerm(float(a), float(w)) for a, w in zip(amps, widths))
        return Datum(n=n, terms=terms, label="gaussian-combo")
    if kind == "moment_killed":
        widths = table.get("widths", (1.0, math.sqrt(2.0), 2.0))
        return moment_killed(n, float(table.get("amplitude", 1.0)), widths)
    raise ConfigError(f"'{path}kind' must be one of zero, gaussian, "
                      f"gaussian_combo, moment_killed (got {kind!r})")


def _parse_times(table: dict, path: str) -> np.ndarray:
    _reject_unknown(table, _TIME_KEYS, path)
    try:
        start = float(table["start"])
        stop = float(table["stop"])
        count = int(table["count"])
    except KeyError as exc:
        raise ConfigError(f"missing key '{path}{exc.args[0]}'") from None
    if not (0 < start < stop and count >= 2):
        raise ConfigError(f"'{path}' needs 0 < start < stop and count >= 2")
    spacing = table.get("spacing", "log")
    if spacing == "log":
        return np.logspace(math.log10(start), math.log10(stop), count)
    if spacing == "linear":
        return np.linspace(start, stop, count)
    raise ConfigError(f"'{path}spacing' must be 'log' or 'linear'")


def parse_config(text: str) -> Config:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    _reject_unknown(raw, _TOP_KEYS, "")

    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"'scenario' must be one of {', '.join(SCENARIOS)} "
                          f"(got {scenario!r})")
    model_tbl = raw.get("model")
    if not isinstance(model_tbl, dict):
        raise ConfigError("missing [model] table")
    _reject_unknown(model_tbl, _MODEL_KEYS, "model.")
    try:
        params = ModelParams(**{k: (int(v) if k == "dim" else float(v))
                                for k, v in model_tbl.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [model]: {exc}") from None

    needs_data = scenario in ("linear-decay", "profile-error", "improved-error",
                              "nonlinear-decay", "b0-study")
    data = None
    if needs_data:
        data_tbl = raw.get("data")
        if not isinstance(data_tbl, dict):
            raise ConfigError("missing [data] tables")
        _reject_unknown(data_tbl, {"psi0", "psi1", "psi2"}, "data.")
        slots = []
        for name in ("psi0", "psi1", "psi2"):
            sub = data_tbl.get(name)
            if not isinstance(sub, dict):
                raise ConfigError(f"missing [data.{name}]")
            slots.append(_parse_datum(sub, params.dim, f"data.{name}."))
        data = tuple(slots)

    times = None
    if scenario in ("linear-decay", "profile-error", "improved-error", "b0-study"):
        tbl = raw.get("time")
        if not isinstance(tbl, dict):
            raise ConfigError("missing [time] table")
        times = _parse_times(tbl, "time.")
    elif "time" in raw:
        raise ConfigError("[time] is only used by radial scenarios")

    norms = [(0.0, 0)]
    if "norms" in raw:
        tbl = raw["norms"]
        _reject_unknown(tbl, _NORM_KEYS, "norms.")
        entries = tbl.get("entries")
        if not isinstance(entries, list) or not entries:
            raise ConfigError("'norms.entries' must be a nonempty list")
        norms = []
        for i, ent in enumerate(entries):
            if not isinstance(ent, dict) or set(ent) - {"sigma", "j"}:
                raise ConfigError(f"'norms.entries[{i}]' must be "
                                  "{sigma = ..., j = ...}")
            norms.append((float(ent.get("sigma", 0.0)), int(ent.get("j", 0))))

    fit_window = None
    tolerance = 0.05
    slope_range = None
    if "fit" in raw:
        tbl = raw["fit"]
        _reject_unknown(tbl, _FIT_KEYS, "fit.")
        if "window" in tbl:
            w = tbl["window"]
            if not (isinstance(w, list) and len(w) == 2):
                raise ConfigError("'fit.window' must be [t_min, t_max]")
            fit_window = (float(w[0]), float(w[1]))
        tolerance = float(tbl.get("tolerance", tolerance))
        if "slope_range" in tbl:
            sr = tbl["slope_range"]
            if not (isinstance(sr, list) and len(sr) == 2):
                raise ConfigError("'fit.slope_range' must be [lo, hi]")
            slope_range = (float(sr[0]), float(sr[1]))

    grid = None
    if scenario == "nonlinear-decay":
        tbl = raw.get("grid")
        if not isinstance(tbl, dict):
            raise ConfigError("missing [grid] table for the solver scenario")
        _reject_unknown(tbl, _GRID_KEYS, "grid.")
        try:
            grid = {
                "n": int(tbl["n"]), "N": int(tbl["N"]), "L": float(tbl["L"]),
                "dt": float(tbl["dt"]), "t_end": float(tbl["t_end"]),
                "snap_every": int(tbl.get("snap_every", 8)),
                "nl_scale": float(tbl.get("nl_scale", 1.0)),
            }
        except KeyError as exc:
            raise ConfigError(f"missing key 'grid.{exc.args[0]}'") from None
        if grid["n"] != params.dim:
            raise ConfigError("grid.n must equal model.dim")
        n_steps = round(grid["t_end"] / grid["dt"])
        if abs(n_steps * grid["dt"] - grid["t_end"]) > 1e-9 * grid["t_end"]:
            raise ConfigError("'grid.t_end' must be an integer multiple of 'grid.dt'")
    elif "grid" in raw:
        raise ConfigError("[grid] is only used by the nonlinear-decay scenario")

    xi_grid = None
    if scenario == "dispersion-dump":
        tbl = raw.get("xi", {"start": 1e-3, "stop": 1e3, "count": 61})
        _reject_unknown(tbl, _XI_KEYS, "xi.")
        xi_grid = np.concatenate(([0.0], np.logspace(
            math.log10(float(tbl.get("start", 1e-3))),
            math.log10(float(tbl.get("stop", 1e3))),
            int(tbl.get("count", 61)))))
    elif "xi" in raw:
        raise ConfigError("[xi] is only used by dispersion-dump")

    out_dir = "out"
    if "output" in raw:
        _reject_unknown(raw["output"], _OUTPUT_KEYS, "output.")
        out_dir = str(raw["output"].get("dir", out_dir))
    out_dir = os.environ.get("CTSP_OUTPUT_DIR", out_dir)

    return Config(
        scenario=scenario, params=params, data=data, times=times, norms=norms,
        fit_window=fit_window, tolerance=tolerance, slope_range=slope_range,
        grid=grid, xi_grid=xi_grid, out_dir=out_dir,
        seed=int(raw.get("seed", 0)), raw=raw,
    )


# ----------------------------------------------------------------------
# canonical serialization (round-trip support and config hashing)
# ----------------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k} = {_toml_value(x)}" for k, x in v.items()) + "}"
    raise TypeError(f"cannot serialize {type(v)!r}")


def serialize_config(raw: dict) -> str:
    """Canonical TOML for the parsed config dictionary."""
    lines = []
    scalars = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    for key in sorted(scalars):
        lines.append(f"{key} = {_toml_value(scalars[key])}")

    def emit_table(name: str, tbl: dict):
        subs = {k: v for k, v in tbl.items() if isinstance(v, dict)}
        plain = {k: v for k, v in tbl.items() if not isinstance(v, dict)}
        if plain or not subs:
            lines.append("")
            lines.append(f"[{name}]")
            for k in sorted(plain):
                lines.append(f"{k} = {_toml_value(plain[k])}")
        for k in sorted(subs):
            emit_table(f"{name}.{k}", subs[k])

    for key in sorted(k for k, v in raw.items() if isinstance(v, dict)):
        emit_table(key, raw[key])
    return "\n".join(lines) + "\n"


def config_hash(raw: dict) -> str:
    """Hash of the canonical config, excluding the output location."""
    body = {k: v for k, v in raw.items() if k != "output"}
    return hashlib.sha256(serialize_config(body).encode()).hexdigest()


# ----------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if isinstance(x, (float, np.floating))
                              else str(x) for x in row) + "\n")


def _pool_map(fn, items):
    threads = int(os.environ.get("CTSP_THREADS", "0") or 0)
    if threads <= 1:
        return [fn(x) for x in items]
    with cf.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------

def _norm_label(sigma: float, j: int) -> str:
    return f"s{sigma:g}_j{j}"


def _scenario_linear_decay(cfg: Config, out: str) -> dict:
    p = cfg.params
    results = []
    passed = True
    window = cfg.fit_window or (float(cfg.times[0]), float(cfg.times[-1]))
    for sigma, j in cfg.norms:
        spec = SobolevSpec(s=sigma, n=p.dim, j=j)
        vals = _pool_map(lambda t: hs_norm_linear(t, spec, cfg.data, p), cfg.times)
        label = _norm_label(sigma, j)
        write_csv(os.path.join(out, f"linear_{label}.csv"),
                  ["t (model time)", "norm (field units)"],
                  zip(cfg.times, vals))
        fit = fit_decay_rate(list(zip(cfg.times, vals)), window)
        q = RateQuery(alpha=p.alpha, n=p.dim, j=j, sigma=sigma)
        theory = theoretical_rate(q)
        ok = abs(fit.slope - theory) <= cfg.tolerance
        passed &= ok
        results.append({
            "norm": label, "slope": fit.slope, "r2": fit.r2,
            "window": list(fit.window), "n_points": fit.n_points,
            "theory": theory, "hypotheses_met": hypotheses_met(q),
            "tolerance": cfg.tolerance, "pass": ok,
        })
    return {"results": results, "passed": passed}


def _scenario_profile_error(cfg: Config, out: str) -> dict:
    p = cfg.params
    kind = kind_for(p.alpha)
    results = []
    passed = True
    for sigma, j in cfg.norms:
        spec = SobolevSpec(s=sigma, n=p.dim, j=j)
        sol = _pool_map(lambda t: hs_norm_linear(t, spec, cfg.data, p), cfg.times)
        err = _pool_map(lambda t: hs_norm_error(t, spec, cfg.data, kind, p), cfg.times)
        ratio = [e / s if s > 0 else math.inf for e, s in zip(err, sol)]
        label = _norm_label(sigma, j)
        write_csv(os.path.join(out, f"profile_error_{label}.csv"),
                  ["t (model time)", "solution_norm", "error_norm", "ratio"],
                  zip(cfg.times, sol, err, ratio))
        monotone = all(b < a for a, b in zip(ratio[:-1], ratio[1:]))
        passed &= monotone
        results.append({"norm": label, "ratio_first": ratio[0],
                        "ratio_last": ratio[-1], "monotone_decreasing": monotone,
                        "pass": monotone})
    return {"results": results, "passed": passed}


def _scenario_improved_error(cfg: Config, out: str) -> dict:
    p = cfg.params
    kind = kind_for(p.alpha)
    window = cfg.fit_window or (float(cfg.times[0]), float(cfg.times[-1]))
    results = []
    passed = True
    for sigma, j in cfg.norms:
        spec = SobolevSpec(s=sigma, n=p.dim, j=j)
        sol = _pool_map(lambda t: hs_norm_linear(t, spec, cfg.data, p), cfg.times)
        err = _pool_map(lambda t: hs_norm_error(t, spec, cfg.data, kind, p), cfg.times)
        ratio = [e / s for e, s in zip(err, sol)]
        label = _norm_label(sigma, j)
        write_csv(os.path.join(out, f"improved_error_{label}.csv"),
                  ["t (model time)", "ratio (error/solution)"],
                  zip(cfg.times, ratio))
        fit = fit_decay_rate(list(zip(cfg.times, ratio)), window)
        theory = improved_error_increment(p.alpha)
        ok = abs(fit.slope - theory) <= cfg.tolerance
        passed &= ok
        results.append({"norm": label, "slope": fit.slope, "r2": fit.r2,
                        "theory": theory, "tolerance": cfg.tolerance, "pass": ok})
    return {"results": results, "passed": passed}


def _scenario_nonlinear_decay(cfg: Config, out: str) -> dict:
    p = cfg.params
    g = cfg.grid
    grid = SpectralGrid(n=g["n"], N=g["N"], L=g["L"])
    state = initial_state(grid, cfg.data)
    series = {key: [] for key in cfg.norms}
    times = []
    snap = g["snap_every"]
    counter = [0]

    def observer(s):
        counter[0] += 1
        if counter[0] % snap == 0:
            times.append(s.t)
            for sigma, j in cfg.norms:
                series[(sigma, j)].append(grid_hs_norm(s, sigma, j))

    integrate(state, g["t_end"], g["dt"], p, nl_scale=g["nl_scale"], observer=observer)
    results = []
    passed = True
    window = cfg.fit_window or (g["t_end"] / 10.0, g["t_end"])
    for sigma, j in cfg.norms:
        label = _norm_label(sigma, j)
        vals = series[(sigma, j)]
        write_csv(os.path.join(out, f"nonlinear_{label}.csv"),
                  ["t (model time)", "norm (field units)"],
                  zip(times, vals))
        fit = fit_decay_rate(list(zip(times, vals)), window)
        q = RateQuery(alpha=p.alpha, n=p.dim, j=j, sigma=sigma)
        try:
            theory = theoretical_rate(q)
            in_hypotheses = hypotheses_met(q)
        except InadmissibleRateError:
            theory = None
            in_hypotheses = False
        if cfg.slope_range is not None:
            lo, hi = cfg.slope_range
        elif theory is not None:
            lo, hi = theory - cfg.tolerance, theory + cfg.tolerance
        else:
            raise ConfigError("no tabulated rate for this query; "
                              "set fit.slope_range explicitly")
        ok = lo <= fit.slope <= hi
        passed &= ok
        results.append({"norm": label, "slope": fit.slope, "r2": fit.r2,
                        "window": list(fit.window), "theory": theory,
                        "slope_range": [lo, hi],
                        "hypotheses_met": in_hypotheses, "pass": ok})
    return {"results": results, "passed": passed}


def _scenario_b0_study(cfg: Config, out: str) -> dict:
    p = cfg.params
    b0 = compute_b0(cfg.data, p)
    kind = kind_for(p.alpha)
    rows = []
    for sigma, j in cfg.norms:
        spec = SobolevSpec(s=sigma, n=p.dim, j=j)
        vals = _pool_map(
            lambda t: hs_norm_profile(t, spec, kind, b0.value, p), cfg.times)
        for t, v in zip(cfg.times, vals):
            rows.append((t, sigma, j, v))
    write_csv(os.path.join(out, "b0_profile_norms.csv"),
              ["t (model time)", "sigma", "j", "profile_norm (scaled by B0)"], rows)
    return {
        "results": [{
            "b0_linear_part": b0.linear_part,
            "b0_nonlinear_part": b0.nonlinear_part,
            "b0_value": b0.value,
        }],
        "passed": True,
    }


def dump_dispersion(cfg: Config, out: str) -> str:
    p = cfg.params
    eps0, n0 = zone_thresholds(p)
    rows = []
    for xi in cfg.xi_grid:
        r = char_roots(p, float(xi))
        zone = classify_zone(float(xi), eps0, n0)
        err1 = err2 = ""
        for case in (1, 2):
            try:
                a2, _ = asymptotic_roots(p, float(xi), case)
                err = abs(r.lambda2 - a2)
                if case == 1:
                    err1 = err
                else:
                    err2 = err
            except ValueError:
                pass
        rows.append((xi, zone.value, r.lambda1, r.lambda2.real, r.lambda2.imag,
                     r.lambda3.real, r.lambda3.imag, r.discriminant, err1, err2))
    path = os.path.join(out, "dispersion.csv")
    write_csv(path, ["xi (1/length)", "zone", "lambda1", "re_lambda2", "im_lambda2",
                     "re_lambda3", "im_lambda3", "discriminant",
                     "case1_err", "case2_err"], rows)
    return path


_SCENARIO_FNS = {
    "linear-decay": _scenario_linear_decay,
    "profile-error": _scenario_profile_error,
    "improved-error": _scenario_improved_error,
    "nonlinear-decay": _scenario_nonlinear_decay,
    "b0-study": _scenario_b0_study,
}


def run(cfg: Config) -> dict:
    """Execute the scenario; returns the report dictionary."""
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    if cfg.scenario == "dispersion-dump":
        dump_dispersion(cfg, out)
        body = {"results": [{"file": "dispersion.csv"}], "passed": True}
    else:
        body = _SCENARIO_FNS[cfg.scenario](cfg, out)
    report = {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "config_sha256": config_hash(cfg.raw),
        "code_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        **body,
    }
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _load(path: str) -> Config:
    with open(path, "r") as fh:
        return parse_config(fh.read())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ctsp", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "validate", "dispersion"):
        sp = sub.add_parser(verb)
        sp.add_argument("config")
    rp = sub.add_parser("rates")
    rp.add_argument("--alpha", type=float, required=True)
    rp.add_argument("--n", type=int, required=True)
    rp.add_argument("--j", type=int, default=0)
    rp.add_argument("--sigma", type=float, default=0.0)
    rp.add_argument("--variant", default="solution",
                    choices=[v.value for v in Variant])
    args = parser.parse_args(argv)

    if args.verb == "rates":
        q = RateQuery(alpha=args.alpha, n=args.n, j=args.j, sigma=args.sigma,
                      variant=Variant(args.variant))
        try:
            rate = theoretical_rate(q)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        flag = "" if hypotheses_met(q) else "  [outside theorem hypotheses]"
        print(f"{rate + 0.0:.12g}{flag}")
        return 0

    try:
        cfg = _load(args.config)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3

    if args.verb == "validate":
        print("ok")
        return 0
    if args.verb == "dispersion":
        if cfg.scenario != "dispersion-dump":
            print("config error: 'dispersion' verb needs scenario = "
                  "\"dispersion-dump\"", file=sys.stderr)
            return 3
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = dump_dispersion(cfg, cfg.out_dir)
        print(path)
        return 0

    try:
        report = run(cfg)
    except DivergenceError as exc:
        print(f"runtime divergence: {exc}", file=sys.stderr)
        return 4
    except QuadratureError as exc:
        print(f"runtime failure ({cfg.scenario}): {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    if not report["passed"]:
        print("tolerance failure", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
