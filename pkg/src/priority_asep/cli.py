"""Command-line entry point.

Commands: ``verify``, ``simulate-asep``, ``simulate-shock``, ``shock-theorem``
and ``report``. Parameters come from flags and optionally from a
``key=value`` file given with ``--config``; flags win.

Exit codes: 0 success, 1 check failure, 2 dimension cap exceeded,
3 statistical-quality failure, 64 configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from .generator import DimensionCapError, RateParams, build_H, check_dimension
from .model import Config, Lattice, parse_config
from .qcalc import QContext, parse_scalar
from .report import CheckReport
from .sparse import format_scalar

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CAP = 2
EXIT_STATISTICS = 3
EXIT_CONFIG = 64

CHECKS = ("detailed-balance", "partition", "symmetry", "duality", "intertwining", "shock-evolution", "currents")
COMMANDS = ("verify", "simulate-asep", "simulate-shock", "shock-theorem", "report")

# option name -> help text; every value is read as a string and converted later
OPTIONS = {
    "n": "number of particle species",
    "L": "number of sites (window [1, L])",
    "window": "explicit window bounds 'lo,hi'",
    "q": "asymmetry: p/q or integer for exact checks, decimal or integer for simulation",
    "w": "rate prefactor",
    "lambda": "shock density offset",
    "c": "comma-separated duality parameters c_1..c_n",
    "t-max": "time horizon",
    "replicas": "number of independent replicas",
    "seed": "base seed",
    "thinning": "sampling interval",
    "checks": "comma-separated checks, or 'all'",
    "threads": "worker processes for replicas",
    "out": "output directory",
    "counts": "particle numbers of species 1..n (priority-process initial sector)",
    "init": "initial configuration literal, e.g. 'L=[1,4] eta=1,1,0,0'",
    "positions": "comma-separated marker positions",
    "types": "comma-separated marker types (1..n)",
    "events": "maximal number of events per replica",
    "burn-in": "fraction of the run discarded before stationary estimates",
    "margin": "minimal marker distance from the window edge",
}

DEFAULTS: Dict[str, Dict[str, str]] = {
    "verify": {"n": "1", "L": "3", "q": "2", "w": "1", "lambda": "0", "checks": "all", "out": "."},
    "simulate-asep": {"n": "1", "L": "4", "q": "2", "w": "1", "t-max": "10000", "replicas": "1", "seed": "0",
                      "burn-in": "0.5", "threads": "1", "out": "."},
    "simulate-shock": {"n": "1", "q": "2", "w": "1", "lambda": "0", "t-max": "1000", "replicas": "100",
                       "seed": "0", "thinning": "10", "burn-in": "0.5", "margin": "0", "threads": "1", "out": "."},
    "shock-theorem": {"n": "2", "window": "-199,200", "q": "2", "w": "1", "lambda": "0", "t-max": "20",
                      "replicas": "200", "seed": "0", "margin": "50", "threads": "1", "out": "."},
    "report": {"n": "1", "q": "2", "w": "1", "lambda": "0", "out": "."},
}


class ConfigError(ValueError):
    pass


def read_config_file(path: str) -> Dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="priority-asep", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key=value file; flags override it")
    for name, text in OPTIONS.items():
        ap.add_argument(f"--{name}", dest=name.replace("-", "_"), help=text)
    return ap


def resolve(args: argparse.Namespace) -> Dict[str, str]:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        cfg.update(read_config_file(args.config))
    for name in OPTIONS:
        val = getattr(args, name.replace("-", "_"))
        if val is not None:
            cfg[name] = val
    return cfg


# -- conversions --------------------------------------------------------------

def _int(cfg, key) -> int:
    try:
        return int(cfg[key])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"--{key} needs an integer") from exc


def _float(cfg, key) -> float:
    try:
        return float(cfg[key])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"--{key} needs a number") from exc


def _int_list(cfg, key) -> Optional[List[int]]:
    if key not in cfg or cfg[key] == "":
        return None
    try:
        return [int(v) for v in cfg[key].split(",")]
    except ValueError as exc:
        raise ConfigError(f"--{key} needs comma-separated integers") from exc


def exact_q(text: str) -> Fraction:
    try:
        val = parse_scalar(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse q={text!r}") from exc
    if isinstance(val, float):
        raise ConfigError("exact commands need a rational q such as 3/2")
    return val


def float_q(text: str) -> float:
    if "/" in text:
        raise ConfigError("simulation commands need a decimal q; p/q is reserved for exact checks")
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse q={text!r}") from exc


def lattice_of(cfg) -> Lattice:
    if cfg.get("window"):
        bounds = _int_list(cfg, "window")
        if len(bounds) != 2:
            raise ConfigError("--window needs 'lo,hi'")
        return Lattice(*bounds)
    return Lattice(1, _int(cfg, "L"))


def header_of(command: str, cfg: Dict[str, str]) -> Dict[str, str]:
    return {"command": command, **{k: cfg[k] for k in sorted(cfg) if k not in ("out", "config")}}


def out_dir(cfg) -> Path:
    path = Path(cfg["out"])
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from exc
    return path


# -- verify ---------------------------------------------------------------------

def _colour_sectors(n: int, max_markers: int):
    for cc in itertools.product(range(max_markers + 1), repeat=n):
        if 1 <= sum(cc) <= max_markers:
            yield cc


def run_checks(lattice: Lattice, n: int, ctx: QContext, w, lam, checks, cvec=None) -> List[CheckReport]:
    from .algebra import verify_duality, verify_duality_family, verify_q_continuity, verify_symmetry
    from .generator import verify_continuity
    from .measures import check_detailed_balance, reversibility_residual, reversible_measure, verify_partition
    from .shocks import build_G, verify_intertwining, verify_shock_evolution, verify_shock_rates

    check_dimension(lattice, n)
    p = RateParams(w, ctx, n)
    H = build_H(lattice, p)
    out = []
    for name in checks:
        if name == "detailed-balance":
            m = reversible_measure(lattice, n, ctx)
            rep = check_detailed_balance(H, m)
            res = reversibility_residual(H, m).max_abs()
            out.append(rep.merge(CheckReport("reversibility", res, rep.tolerance, {"reversibility": res})))
        elif name == "partition":
            out.append(verify_partition(lattice, n, ctx))
        elif name == "symmetry":
            out.append(verify_symmetry(H, lattice, n, ctx))
        elif name == "duality":
            rep = verify_duality(H, lattice, n, ctx)
            if cvec is not None:
                rep = rep.merge(verify_duality_family(H, lattice, n, ctx, cvec))
            out.append(rep)
        elif name == "intertwining":
            out.append(verify_intertwining(H, lattice, n, ctx, w))
        elif name == "shock-evolution":
            rep = CheckReport("shock-evolution")
            excluded = 0
            for cc in _colour_sectors(n, min(2, lattice.size - 2)):
                evo = verify_shock_evolution(lattice, n, cc, lam, ctx, w)
                excluded += evo.details["boundary-states-skipped"]
                evo.message = ""
                rep = rep.merge(evo)
                rep = rep.merge(verify_shock_rates(build_G(lattice, n, cc, lam, ctx, w), lam, ctx, w))
            rep.details["boundary-states-skipped"] = excluded
            rep.message = f"{excluded} boundary-touching marker configurations excluded"
            out.append(rep)
        elif name == "currents":
            out.append(verify_continuity(H, lattice, p).merge(verify_q_continuity(H, lattice, p)))
        else:
            raise ConfigError(f"unknown check {name!r}")
    return out


def cmd_verify(cfg: Dict[str, str]) -> int:
    import csv

    n = _int(cfg, "n")
    lattice = lattice_of(cfg)
    q = exact_q(cfg["q"])
    w = exact_q(cfg["w"])
    lam = exact_q(cfg["lambda"])
    names = [s.strip() for s in cfg["checks"].split(",") if s.strip()]
    if "all" in names:
        names = list(CHECKS)
    unknown = [s for s in names if s not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks: {', '.join(unknown)}")
    cvec = _int_list(cfg, "c")
    if cvec is not None and len(cvec) != n:
        raise ConfigError("--c needs one value per species")
    if n < 1:
        raise ConfigError("--n must be at least 1")
    ctx = QContext.exact(q)
    reports = run_checks(lattice, n, ctx, w, lam, names, cvec)
    path = out_dir(cfg) / "verify.csv"
    with open(path, "w", newline="") as fh:
        for key, val in header_of("verify", cfg).items():
            fh.write(f"# {key}={val}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["check", "n", "L", "q", "status", "max_violation"])
        for r in reports:
            wr.writerow([r.name, n, lattice.size, format_scalar(q), r.status, format_scalar(r.max_violation)])
    for r in reports:
        print(r)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


# -- simulations -----------------------------------------------------------------

def _sim_params(cfg, n, window, t_max, replicas, thinning, margin=0):
    from .sim import SimParams

    events = _int(cfg, "events") if cfg.get("events") else None
    return SimParams(n=n, window=window, w=_float(cfg, "w"), q=float_q(cfg["q"]), t_max=t_max, replicas=replicas,
                     seed=_int(cfg, "seed"), thinning=thinning, margin=margin, max_events=events,
                     threads=_int(cfg, "threads"))


def _initial_config(cfg, lattice: Lattice, n: int) -> Config:
    if cfg.get("init"):
        conf = parse_config(cfg["init"], n)
        if conf.lattice != lattice:
            raise ConfigError("--init window differs from --window/--L")
        return conf
    cnt = _int_list(cfg, "counts")
    if cnt is None:
        raise ConfigError("simulate-asep needs --counts or --init")
    if len(cnt) != n or any(v < 0 for v in cnt) or sum(cnt) > lattice.size:
        raise ConfigError("--counts needs n nonnegative numbers fitting the window")
    # step initial condition: highest species on the left
    values = [a for a in range(n, 0, -1) for _ in range(cnt[a - 1])]
    values += [0] * (lattice.size - len(values))
    return Config(lattice, bytes(values), n)


def cmd_simulate_asep(cfg: Dict[str, str]) -> int:
    import csv

    from .measures import canonical_measure
    from .model import counts, enumerate_configs
    from .sim import exact_stationary_current, measure_currents, run_replicas, stationary_histogram, total_variation
    from .sim import write_summary_csv

    n = _int(cfg, "n")
    lattice = lattice_of(cfg)
    init = _initial_config(cfg, lattice, n)
    t_max = _float(cfg, "t-max")
    thinning = _float(cfg, "thinning") if cfg.get("thinning") else t_max / 1000
    params = _sim_params(cfg, n, lattice, t_max, _int(cfg, "replicas"), thinning)
    # with an event budget the end time is unknown, so currents cover the whole run
    burn = _float(cfg, "burn-in") if params.max_events is None else 0.0
    small = (n + 1) ** lattice.size <= 4096
    trajs = run_replicas("asep", params, init, keep_snapshots=True, histogram=small, flux_from=burn * t_max,
                         track_markers=False)
    header = header_of("simulate-asep", cfg)
    out = out_dir(cfg)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        for key, val in header.items():
            fh.write(f"# {key}={val}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["replica", "time", "eta"])
        for tr in trajs:
            for time, snap in zip(tr.times, tr.snapshots):
                wr.writerow([tr.replica, repr(float(time)), "".join(str(v) for v in snap)])

    rows = [("events", float(sum(tr.events for tr in trajs)), "", "", "")]
    N = counts(init).N[1:]
    ctx = QContext.floating(params.q)
    if small:
        pooled: Dict[bytes, float] = {}
        for tr in trajs:
            for key, val in tr.histogram.items():
                pooled[key] = pooled.get(key, 0.0) + val
        total = sum(pooled.values())
        emp = {k: v / total for k, v in pooled.items()}
        exact = canonical_measure(lattice, N, ctx)
        ref = {c.eta: w for c, w in zip(enumerate_configs(lattice, n), exact.weights) if w}
        rows.append(("tv_stationary", total_variation(emp, ref), "", 0.0, ""))
    if all(tr.flux_time > 0 for tr in trajs):
        p = RateParams(params.w, ctx, n)
        for alpha in range(1, n + 1):
            for kind in ("transfer", "expected"):
                ests = measure_currents(trajs, alpha, kind)
                for k, est in zip(lattice.bonds, ests):
                    pred = float(exact_stationary_current(lattice, N, alpha, k, p)) if small else ""
                    z = est.z(pred) if pred != "" and est.se > 0 else ""
                    rows.append((f"current_{kind}_a{alpha}_k{k}", est.value, est.se, pred, z))
    else:
        print("warning: no recorded time after burn-in; currents omitted", file=sys.stderr)
    write_summary_csv(rows, out / "summary.csv", header)
    for row in rows[:2]:
        print(f"{row[0]}: {row[1]}")
    return EXIT_OK


def _shock_config(cfg, n: int, ctx: QContext):
    from .shocks import ShockConfig

    types = _int_list(cfg, "types")
    positions = _int_list(cfg, "positions")
    if types is None:
        types = [n] * (len(positions) if positions else 1)
    if positions is None:
        positions = list(range(len(types)))
    lam = float(cfg["lambda"]) if not ctx.is_exact else exact_q(cfg["lambda"])
    return ShockConfig(tuple(positions), tuple(types), n, lam, ctx, float(cfg["w"]) if not ctx.is_exact else
                       exact_q(cfg["w"]))


def cmd_simulate_shock(cfg: Dict[str, str]) -> int:
    from .shocks import shock_predictions, stationary_gap_law
    from .sim import (completed, estimate_gap_law, estimate_velocity_diffusion, run_replicas, write_gaps_csv,
                      write_summary_csv, write_trajectory_csv)

    n = _int(cfg, "n")
    q = float_q(cfg["q"])
    ctx = QContext.floating(q)
    s = _shock_config(cfg, n, ctx)
    window = lattice_of(cfg) if cfg.get("window") else None
    params = _sim_params(cfg, n, window, _float(cfg, "t-max"), _int(cfg, "replicas"), _float(cfg, "thinning"),
                         _int(cfg, "margin"))
    trajs = run_replicas("shock", params, s)
    good, discarded = completed(trajs)
    header = header_of("simulate-shock", cfg)
    out = out_dir(cfg)
    write_trajectory_csv(trajs, out / "trajectory.csv", header)
    pred = shock_predictions(s)
    rows = [("discarded_fraction", discarded, "", 0.0, "")]
    if len(good) >= 30:
        for i in range(s.K):
            est = estimate_velocity_diffusion(good, marker=i)
            v, D = float(pred["v"][i]), float(pred["D"][i])
            rows.append((f"v_{i + 1}", est["v"].value, est["v"].se, v, est["v"].z(v)))
            rows.append((f"D_{i + 1}", est["D"].value, est["D"].se, D, est["D"].z(D)))
            rows.append((f"D_endpoint_{i + 1}", est["D_endpoint"].value, est["D_endpoint"].se, D,
                         est["D_endpoint"].z(D)))
    else:
        print(f"warning: {len(good)} completed replicas, need 30 for velocity and diffusion", file=sys.stderr)
    burn = _float(cfg, "burn-in")
    for i in range(1, s.K):
        p_pred = float(stationary_gap_law(s, i).p)
        try:
            fit = estimate_gap_law(good, i, p_pred, burn)
        except ValueError as exc:
            print(f"warning: gap {i}: {exc}", file=sys.stderr)
            continue
        rows.append((f"p_{i}", fit.p_hat, fit.p_se, p_pred, (fit.p_hat - p_pred) / fit.p_se if fit.p_se else ""))
        rows.append((f"ks_{i}", fit.ks_predicted, "", fit.ks_critical, ""))
        rows.append((f"ks_fitted_{i}", fit.ks_fitted, "", fit.ks_critical, ""))
        rows.append((f"gap_samples_{i}", float(fit.samples), "", "", ""))
        write_gaps_csv(fit, out / ("gaps.csv" if i == 1 else f"gaps_{i}.csv"), header)
    write_summary_csv(rows, out / "summary.csv", header)
    for row in rows:
        print(f"{row[0]}: {row[1]}")
    return EXIT_STATISTICS if discarded >= 0.01 else EXIT_OK


def cmd_shock_theorem(cfg: Dict[str, str]) -> int:
    from .sim import shock_theorem_check, write_profile_csv, write_summary_csv

    n = _int(cfg, "n")
    q = float_q(cfg["q"])
    s = _shock_config(cfg, n, QContext.floating(q))
    window = lattice_of(cfg)
    t = _float(cfg, "t-max")
    params = _sim_params(cfg, n, window, t, _int(cfg, "replicas"), t, _int(cfg, "margin"))
    rep = shock_theorem_check(params, s)
    header = header_of("shock-theorem", cfg)
    out = out_dir(cfg)
    write_profile_csv(rep.gating, out / "profile.csv", header)
    if rep.relative is not None:
        write_profile_csv(rep.absolute, out / "profile_absolute.csv", header)
    g = rep.gating
    rows = [
        ("max_abs_z", g.max_abs_z, "", 3.0, ""),
        ("max_abs_diff", g.max_abs_diff, "", 0.0, ""),
        ("max_abs_z_absolute", rep.absolute.max_abs_z, "", 3.0, ""),
        ("marker_shift_asep", rep.marker_shift_a.value, rep.marker_shift_a.se, "", ""),
        ("marker_shift_shock", rep.marker_shift_b.value, rep.marker_shift_b.se, "", ""),
        ("discarded_asep", rep.discarded_a, "", 0.0, ""),
        ("discarded_shock", rep.discarded_b, "", 0.0, ""),
    ]
    write_summary_csv(rows, out / "summary.csv", header)
    for row in rows:
        print(f"{row[0]}: {row[1]}")
    if rep.discarded_a >= 0.01 or rep.discarded_b >= 0.01:
        return EXIT_STATISTICS
    return EXIT_OK if rep.passed() else EXIT_CHECK_FAILED


def cmd_report(cfg: Dict[str, str]) -> int:
    from .shocks import shock_predictions, stationary_gap_law, write_predictions_csv

    n = _int(cfg, "n")
    text = cfg["q"]
    ctx = QContext.floating(float_q(text)) if "." in text or "e" in text.lower() else QContext.exact(exact_q(text))
    s = _shock_config(cfg, n, ctx)
    write_predictions_csv(s, out_dir(cfg) / "predictions.csv", header_of("report", cfg))
    pred = shock_predictions(s)
    print("i  rho_i  v_i  D_i  p_i")
    for i in range(s.K + 1):
        v = format_scalar(pred["v"][i - 1]) if i else "-"
        d = format_scalar(pred["D"][i - 1]) if i else "-"
        p = format_scalar(stationary_gap_law(s, i).p) if 1 <= i < s.K else "-"
        print(f"{i}  {format_scalar(pred['rho'][i])}  {v}  {d}  {p}")
    return EXIT_OK


HANDLERS = {
    "verify": cmd_verify,
    "simulate-asep": cmd_simulate_asep,
    "simulate-shock": cmd_simulate_shock,
    "shock-theorem": cmd_shock_theorem,
    "report": cmd_report,
}


def _attach_values(argv: List[str]) -> List[str]:
    """Glue ``--flag -5,5`` into ``--flag=-5,5`` so negative lists are not read as options."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and argv[i + 1][:1] == "-" \
                and argv[i + 1][1:2].isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = _attach_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve(args)
        return HANDLERS[args.command](cfg)
    except DimensionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ValueError, TypeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
