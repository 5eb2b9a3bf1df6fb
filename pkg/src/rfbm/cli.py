"""Command-line entry point: ``rfbm <subcommand> [flags]``.

Every subcommand prints a JSON payload. With ``--out STEM`` the payload goes
to ``STEM.json``, tabular data to ``STEM.csv`` and a run manifest to
``STEM.manifest.json``; ``rfbm replay STEM.manifest.json`` re-runs it and
compares digests.

Exit codes: 0 success, 1 domain/numerical error, 2 usage error.
"""

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from . import __version__, kernels
from .asymptotics import criterion_integral, derive_constants, family, piterbarg_tail
from .errors import RegimeWarning, RfbmError
from .fbm import sample_fbm_circulant, sample_fbm_dense_oracle
from .field import berman_trials
from .grid import grid_vs_continuum_experiment
from .manifest import RunManifest, compare_outputs, dumps, manifest_path, write_json
from .pickands import (DEFAULT_THETAS, default_pickands, estimate_pickands,
                       estimate_pickands_theta)
from .storage import (BURN_IN_FACTOR, default_window, lil_experiment, simulate_reflected,
                      simulate_stationary, sup_tail_probability)

WINDOW_CONVENTION = """\
WINDOW CONVENTION (read this): --interval-T is the absolute length of the
time interval [0, T] over which the supremum of Q is taken. The leading-order
tail formula is parameterized differently: its T multiplies the level, i.e.
it approximates P(sup over [0, T*u] of Q > u). This command converts with
T_formula = interval_T / level and reports both numbers. Mixing the two
conventions is off by a factor of the level u.
"""

MANIFEST_SKIP = {"command", "out", "config", "func", "manifest"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _hurst_pickands(a):
    return a.pickands if a.pickands is not None else default_pickands(a.hurst)


# --- subcommands --------------------------------------------------------------

def cmd_constants(a):
    return derive_constants(a.hurst).as_dict(), {}


def cmd_sample_fbm(a):
    sampler = sample_fbm_dense_oracle if a.method == "dense" else sample_fbm_circulant
    path = sampler(a.n, a.dt, a.hurst, a.seed)
    payload = {"hurst": path.hurst, "n": a.n, "dt": path.dt, "method": a.method,
               "horizon": path.horizon, "terminal": float(path.values[-1])}
    return payload, {".csv": path.to_csv}


def cmd_queue_sim(a):
    window = a.window if a.window is not None else default_window(1.0, a.hurst)
    if a.mode == "reflected":
        burn = a.burn_in if a.burn_in is not None else BURN_IN_FACTOR * window
        qp = simulate_reflected(a.q0, a.horizon, a.dt, a.hurst, a.seed, burn_in=burn)
    else:
        qp = simulate_stationary(a.horizon, a.dt, window, a.hurst, a.seed)
    payload = {"mode": qp.mode, "hurst": qp.hurst, "dt": qp.dt, "points": len(qp.values),
               "window": qp.window if qp.window is not None else window,
               "burn_in": qp.burn_in, "mean": float(qp.values.mean()),
               "max": float(qp.values.max())}
    return payload, {".csv": qp.to_csv}


def cmd_tail_prob(a):
    window = a.window if a.window is not None else default_window(max(a.level, 1.0), a.hurst)
    est = sup_tail_probability(a.interval_T, a.level, a.dt, window, a.hurst, a.seed, a.reps)
    k = derive_constants(a.hurst)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeWarning)
        asym = piterbarg_tail(a.interval_T / a.level, a.level, k, _hurst_pickands(a))
    payload = dict(est.summary())
    payload.update({
        "hurst": a.hurst, "interval_T": a.interval_T, "level": a.level, "dt": a.dt,
        "window": window, "formula_T": a.interval_T / a.level, "asymptotic": asym,
        "ratio_mc_to_asymptotic": est.value / asym if asym > 0 else math.nan,
        "regime_warning": any(issubclass(w.category, RegimeWarning) for w in caught),
    })
    return payload, {}


def cmd_pickands(a):
    thetas = a.theta or list(DEFAULT_THETAS)
    if len(thetas) >= 3 and not a.no_extrapolate and a.method == "ratio":
        est = estimate_pickands(a.hurst, a.seed, a.reps, thetas, a.span)
        return est.as_dict(), {}
    rows = [estimate_pickands_theta(a.hurst, th, a.span, a.reps, a.seed, a.method).as_dict()
            for th in thetas]
    return (rows[0] if len(rows) == 1 else {"levels": rows}), {}


def cmd_criterion(a):
    pick = a.pickands if a.pickands is not None else 1.0
    fam = family(a.hurst, a.p, pick)
    t0 = a.t0 if a.t0 is not None else max(math.e ** math.e, 2.0 * fam.s_min)
    rep = criterion_integral(fam, t0, a.t_max, method=a.method)
    out = rep.as_dict()
    out.update({"hurst": a.hurst, "p": a.p, "pickands": pick})
    return out, {}


def cmd_lil(a):
    fam = family(a.hurst, a.p, _hurst_pickands(a))
    rec, summary = lil_experiment(fam, a.horizon, a.dt, a.hurst, a.seed, t_start=a.t_start,
                                  window=a.window, h_mode=a.h_mode)
    return summary, {".csv": rec.to_csv}


def cmd_grid_check(a):
    thetas = a.theta or [1.0, 0.3, 0.1]
    exp = grid_vs_continuum_experiment(a.T, thetas, a.v, a.hurst, a.seed, a.reps, a.refine)
    out = exp.as_dict()
    out["violations_total"] = sum(r.violations for r in exp.rows)
    return out, {}


def cmd_berman_check(a):
    dims = a.dims or [2, 3]
    recs = berman_trials(dims, a.instances, a.seed)
    excess = [r["excess"] for r in recs]
    out = {
        "instances": len(recs),
        "dims": dims,
        "tolerance": a.tolerance,
        "max_excess": max(excess),
        "violations": sum(e > a.tolerance for e in excess),
    }
    return out, {}


COMMANDS = {
    "constants": cmd_constants,
    "sample-fbm": cmd_sample_fbm,
    "queue-sim": cmd_queue_sim,
    "tail-prob": cmd_tail_prob,
    "pickands": cmd_pickands,
    "criterion": cmd_criterion,
    "lil": cmd_lil,
    "grid-check": cmd_grid_check,
    "berman-check": cmd_berman_check,
}


def build_parser():
    parser = _Parser(prog="rfbm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"rfbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, epilog=None, seed=True):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="flat JSON file of flag values; flags override it")
        p.add_argument("--out", metavar="STEM", help="write STEM.json, STEM.csv and a manifest")
        if seed:
            p.add_argument("--seed", type=_seed, default=0, help="64-bit root seed")
        return p

    p = add("constants", "Derived model constants as JSON.", seed=False)
    p.add_argument("--hurst", type=float, required=True)

    p = add("sample-fbm", "Sample one fBm path (CSV t,value).")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--n", type=int, default=1024, help="grid points including t=0")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--method", choices=["circulant", "dense"], default="circulant")

    p = add("queue-sim", "Simulate a storage path (CSV t,Q).")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--mode", choices=["reflected", "stationary"], default="stationary")
    p.add_argument("--q0", type=float, default=0.0)
    p.add_argument("--window", type=float, help="lag window W (default 8*tau0)")
    p.add_argument("--burn-in", type=float, help="reflected mode burn-in (default 5*W)")

    p = add("tail-prob", "Monte Carlo P(sup over [0, T] of Q > u) with the leading-order "
            "formula alongside.", epilog=WINDOW_CONVENTION)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--interval-T", dest="interval_T", type=float, required=True,
                   help="ABSOLUTE interval length T (see window convention below)")
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--window", type=float)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--pickands", type=float, help="Pickands constant (default: estimate)")

    p = add("pickands", "Pickands constant estimates.")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--theta", type=float, action="append",
                   help="grid spacing; repeat for several (default 0.4 0.2 0.1)")
    p.add_argument("--span", type=float)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--method", choices=["ratio", "truncated"], default="ratio")
    p.add_argument("--no-extrapolate", action="store_true",
                   help="report each theta instead of the theta -> 0 fit")

    p = add("criterion", "Finite-window dichotomy integral and its classification.",
            epilog=WINDOW_CONVENTION, seed=False)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t0", type=float)
    p.add_argument("--t-max", dest="t_max", type=float, default=1e9)
    p.add_argument("--method", choices=["quadrature", "analytic"], default="quadrature")
    p.add_argument("--pickands", type=float, help="Pickands constant (default 1)")

    p = add("lil", "Crossing process and iterated-logarithm statistics on one path.")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1e5)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--t-start", dest="t_start", type=float)
    p.add_argument("--window", type=float)
    p.add_argument("--h-mode", dest="h_mode", choices=["asymptotic", "exact"],
                   default="asymptotic")
    p.add_argument("--pickands", type=float)

    p = add("grid-check", "Grid maxima against a common fine lattice.")
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--v", type=float, default=3.0)
    p.add_argument("--theta", type=float, action="append")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--refine", type=int, default=32)

    p = add("berman-check", "Berman comparison bound on random correlation pairs.")
    p.add_argument("--dims", type=int, action="append", choices=[2, 3, 4])
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-6)

    p = sub.add_parser("replay", help="Re-run a manifest and compare output digests.")
    p.add_argument("manifest")
    p.add_argument("--out", metavar="STEM", help="replay stem (default: <stem>.replay)")

    return parser, sub.choices


def _config_arg(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv):
    parser, subs = build_parser()
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    cfg_path = _config_arg(argv)
    if cfg_path and command in subs:
        # config values become defaults, so required flags may come from the file
        sub = subs[command]
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            sub.error(f"cannot read config {cfg_path}: {exc}")
        if not isinstance(cfg, dict):
            sub.error("config must be a flat JSON object")
        known = {a.dest for a in sub._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        bad = sorted(set(cfg) - known - {"seed"} | (set(cfg) & {"config", "out"}))
        if bad:
            sub.error(f"unknown config keys: {', '.join(bad)}")
        if "seed" in cfg:
            try:
                cfg["seed"] = _seed(str(cfg["seed"]))
            except argparse.ArgumentTypeError as exc:
                sub.error(str(exc))
        for action in sub._actions:
            if action.dest in cfg:
                action.required = False
        sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def run_command(command, params, out=None):
    """Run one subcommand from a parameter dict; returns (payload, manifest or None)."""
    ns = argparse.Namespace(**params)
    payload, files = COMMANDS[command](ns)
    if out is None:
        return payload, None
    manifest = RunManifest(command, params, int(params.get("seed", 0)), __version__,
                           kernels.BACKEND)
    json_path = Path(f"{out}.json")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    write_json(json_path, payload)
    manifest.add_output(json_path, out)
    for suffix, writer in files.items():
        path = Path(f"{out}{suffix}")
        writer(path)
        manifest.add_output(path, out)
    manifest.write(out)
    return payload, manifest


def replay(manifest_file, out=None):
    original = RunManifest.load(manifest_file)
    stem = str(manifest_file)
    if stem.endswith(".manifest.json"):
        stem = stem[: -len(".manifest.json")]
    out = out or f"{stem}.replay"
    if Path(out).resolve() == Path(stem).resolve():
        raise ValueError("replay stem must differ from the original stem")
    _, again = run_command(original.command, original.parameters, out)
    problems = compare_outputs(original, again)
    return {"identical": not problems, "mismatched": problems,
            "manifest": str(manifest_path(out))}


def main(argv=None):
    args = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        if args.command == "replay":
            payload = replay(args.manifest, args.out)
            sys.stdout.write(dumps(payload))
            return 0 if payload["identical"] else 1
        params = {k: v for k, v in vars(args).items() if k not in MANIFEST_SKIP}
        payload, _ = run_command(args.command, params, args.out)
    except (RfbmError, ValueError) as exc:
        print(f"rfbm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(dumps(payload))
    return 0


if __name__ == "__main__":
    sys.exit(main())
