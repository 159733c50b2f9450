"""Command-line interface: ``unclab <command> [options]``.

Exit status: 0 success, 1 a reported invariant failed, 2 usage or I/O
error.  Reports are JSON (validated against ``report.schema.json``) or
CSV; numbers carry 17 significant digits and reports contain no clock
readings unless ``--timings`` is given, so identical configurations give
byte-identical output.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from . import deficit as df
from . import funcrep as fr
from . import gaussfit as gf
from . import io as uio
from . import spectral as sp
from . import stabilitylab as sl
from . import suites
from . import verify as vf
from .errors import UnclabError
from .exprdsl import EvaluationError, ParseError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_TOL = {
    "nonnegativity": 1e-8,
    "fourier-deficit-symmetry": 1e-6,
    "transversality": 1e-6,
    "decomposition-identity": 1e-6,
    "second-variation-chain": 1e-6,
    "projection-consistency": 1e-6,
    "debruijn-identity": 1e-10,
}

GRAMMAR_HELP = """expression grammar (^ binds tightest and is right-associative, 2^3^2 = 512):
  expr  = term {("+"|"-") term}      term  = unary {("*"|"/") unary}
  unary = "-" unary | power          power = atom ["^" literal-exponent]
  atom  = number | pi | x | x1..x3 | r | exp|sin|cos|abs|sqrt "(" expr ")" | "(" expr ")"
"""


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _alpha_range(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI") from None
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError("need 0 < LO < HI")
    return (lo, hi)


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v
    return parse


def _number_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text):
    name, sep, values = text.partition("=")
    if not sep or not name or not values:
        raise argparse.ArgumentTypeError("expected name=v1,v2,...")
    out = []
    for v in values.split(","):
        v = v.strip()
        try:
            out.append(int(v))
        except ValueError:
            try:
                out.append(float(v))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad value {v!r} for {name}") from None
    return name.strip(), out


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="PATH", help="function document (JSON)")
    src.add_argument("--expr", metavar="SRC", help="function given as an expression")
    g.add_argument("--dim", type=int, choices=(1, 2, 3), help="dimension of --expr (default 1)")
    g.add_argument("--L", type=_positive(float), dest="L", help="grid half-width or radial extent")
    g.add_argument("--N", type=_positive(int), dest="N", help="points per axis")
    g.add_argument("--modes", type=int, metavar="K",
                   help="sample 1-D input as a Hermite series h_0..h_K (debruijn: spectrum size)")
    g.add_argument("--alpha-range", type=_alpha_range, metavar="LO:HI",
                   help="width range of the Gaussian search (default 1e-4:1e4)")
    g.add_argument("--zero-tol", type=_positive(float), metavar="T",
                   help="projection tolerance and zero-detection threshold (default 1e-8)")
    g.add_argument("--tol", "--tolerance", type=_positive(float), dest="tol", metavar="T",
                   help="replace every invariant tolerance")
    g.add_argument("--normalize", action="store_true", default=None,
                   help="scale the input to unit L2 norm")
    g.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    g.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    g.add_argument("--seed", type=int, help="seed for randomized families (default 0)")
    g.add_argument("--fourier-check", action="store_true", default=None,
                   help="also recompute the deficit on the Fourier side")
    g.add_argument("--trace", action="store_true", default=None,
                   help="include the full width-search trace in projection output")
    g.add_argument("--timings", action="store_true", default=None,
                   help="add wall-clock timings (makes output run-dependent)")
    g.add_argument("--config", metavar="PATH",
                   help="JSON file of option values; command-line flags win")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="unclab",
        description="Uncertainty-principle deficit, nearest-Gaussian projection and stability scans.",
        epilog=GRAMMAR_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"unclab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_,
                              epilog=GRAMMAR_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    add("deficit", "deficit, norms and diagnostics of a function")
    add("project", "nearest Gaussian in L2 and orthogonality residuals")
    p = add("verify", "run the built-in invariant suite")
    p.add_argument("--suite", choices=vf.SUITES, help="run only this module's checks")
    p = add("scan", "stability-ratio scan over a family of functions")
    p.add_argument("--family", choices=sorted(sl.FAMILIES), help="test family")
    p.add_argument("--param", type=_param, action="append", metavar="NAME=V1,V2",
                   help="parameter values (repeatable); defaults depend on the family")
    p.add_argument("--C1", type=float, dest="C1", help="candidate linear constant (default 0)")
    p.add_argument("--c4", type=float, help="candidate quadratic constant (default 0)")
    p = add("sharpness", "dilation sharpness quotient Q(lambda)")
    p.add_argument("--lambdas", type=_number_list, metavar="L1,L2,...",
                   help="dilation factors (default 1,2,4,8,16,32,64)")
    add("debruijn", "Hermite-sum identity and de Bruijn distance bound (1-D)")
    return parser


DEFAULTS = {
    "dim": 1, "format": "json", "seed": 0, "alpha_range": (1e-4, 1e4), "zero_tol": 1e-8,
    "normalize": False, "fourier_check": False, "trace": False, "timings": False,
    "lambdas": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], "C1": 0.0, "c4": 0.0,
}

# options that only some commands read; they are left out of the others' config echo
COMMAND_ONLY = {
    "fourier_check": {"deficit"},
    "trace": {"project"},
    "lambdas": {"sharpness"},
    "C1": {"scan"}, "c4": {"scan"}, "family": {"scan"}, "param": {"scan"},
    "suite": {"verify"},
}

# default point count of a 1-D expression sampled for the Fourier-side check;
# the grid is made self-dual so the transform lands on an equally fine grid
FOURIER_CHECK_N = 32768


def resolve(args, parser):
    """Merge ``--config`` values under the command-line flags, then defaults."""
    cfg = vars(args).copy()
    if cfg.get("config"):
        try:
            doc = json.loads(Path(cfg["config"]).read_text())
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config {cfg['config']}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {cfg['config']} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in doc.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise UsageError(f"unknown config key {key!r}")
            if cfg[key] is None:
                if key == "alpha_range" and isinstance(value, str):
                    value = _alpha_range(value)
                if key == "param" and isinstance(value, dict):
                    value = [(k, list(v)) for k, v in value.items()]
                cfg[key] = value
    for key, value in DEFAULTS.items():
        if cfg.get(key) is None:
            cfg[key] = value
    for key, commands in COMMAND_ONLY.items():
        if cfg["command"] not in commands:
            cfg.pop(key, None)
    if cfg["input"] and cfg["expr"]:
        raise UsageError("--input and --expr are mutually exclusive")
    return cfg


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _overrides(cfg):
    L, N = cfg.get("L"), cfg.get("N")
    if cfg.get("fourier_check") and cfg.get("modes") is None and cfg["dim"] == 1 and L is None:
        N = N or FOURIER_CHECK_N
        L = sp.self_dual_half_width(N)
    return {"half_width": L, "n_points": N, "n_modes": cfg.get("modes")}


def load_input(cfg, default=None):
    if cfg.get("expr"):
        u = uio.function_from_dict({"kind": "expr", "source": cfg["expr"], "dim": cfg["dim"]},
                                   **_overrides(cfg))
    elif cfg.get("input"):
        u = uio.load_function(cfg["input"], **_overrides(cfg))
    elif default is not None:
        u = default()
    else:
        raise UsageError("give the function with --input PATH or --expr SRC")
    if cfg["normalize"]:
        u = fr.normalize(u)
    return u


def _tol(cfg, name):
    return cfg["tol"] if cfg.get("tol") is not None else DEFAULT_TOL[name]


def _check(name, citation, measured, threshold, relation="<="):
    measured = float(measured)
    ok = measured <= threshold if relation == "<=" else measured >= threshold
    return {"name": name, "citation": citation, "measured": measured,
            "threshold": float(threshold), "relation": relation, "passed": bool(ok)}


def _config_echo(cfg):
    echo = {}
    for key in sorted(cfg):
        value = cfg[key]
        if key in ("command",) or value is None:
            continue
        if key == "param":
            value = {k: v for k, v in value}
        echo[key] = value
    return echo


def _report(cfg, results, checks, notes=None):
    report = {
        "tool": "unclab",
        "version": __version__,
        "command": cfg["command"],
        "config": _config_echo(cfg),
        "results": results,
        "checks": checks,
        "tolerance_budget": {c["name"]: c["threshold"] for c in checks},
        "passed": all(c["passed"] for c in checks),
    }
    if notes:
        report["notes"] = notes
    return report


# --------------------------------------------------------------------------
# commands; each returns (report, csv_header, csv_rows)
# --------------------------------------------------------------------------

def cmd_deficit(cfg):
    u = load_input(cfg)
    b = df.compute_deficit(u)
    notes = []
    results = {"representation": u.spec.to_dict(), "breakdown": b.to_dict()}
    checks = [_check("nonnegativity", "deficit is nonnegative",
                     -b.deficit / (1.0 + b.moment_sq * b.grad_sq), _tol(cfg, "nonnegativity"))]
    if cfg["fourier_check"]:
        if u.kind == "hermite":
            s = sp.hermite_spectrum(u, u.spec.n_modes)
            d_hat = sp.spectrum_deficit(sp.hermite_fourier(s))
        elif u.kind in ("grid1d", "gridnd"):
            n = u.spec.n_points
            if n & (n - 1):
                raise UsageError("the Fourier path needs a power-of-two point count")
            pair = sp.fourier(u)
            d_hat = df.deficit(pair.u_hat)
            if not math.isclose(pair.u_hat.spec.half_width, u.spec.half_width, rel_tol=1e-12):
                notes.append("the grid is not self-dual; the transformed grid has a different "
                             "spacing and the Fourier-side deficit carries its own discretization error")
        else:
            raise UsageError("--fourier-check needs a grid or Hermite input")
        results["fourier_deficit"] = d_hat
        checks.append(_check("fourier-deficit-symmetry", "deficit is Fourier invariant",
                             abs(d_hat - b.deficit) / (1.0 + abs(b.deficit)),
                             _tol(cfg, "fourier-deficit-symmetry")))
    row = b.to_dict()
    header = list(row)
    return _report(cfg, results, checks, notes), header, [[row[k] for k in header]]


def _project(cfg, u):
    return gf.project(u, tol=cfg["zero_tol"], alpha_range=tuple(cfg["alpha_range"]))


def cmd_project(cfg):
    u = load_input(cfg)
    p = _project(cfg, u)
    scale = 1.0 + df.delta_norm(u) ** 2
    results = {"representation": u.spec.to_dict(), "projection": p.to_dict(trace=cfg["trace"]),
               "delta_norm_sq": scale - 1.0}
    checks = [_check("transversality", "orthogonality conditions at the nearest Gaussian",
                     max(abs(p.r0), abs(p.r1), abs(p.r2)) / scale, _tol(cfg, "transversality"))]
    notes = []
    if p.at_range_boundary:
        notes.append("the best width lies at the edge of the search range")
    if p.edge_decay > 1e-8:
        notes.append("the fitted Gaussian is cut off by the box; enlarge --L")
    rows = [[a, f] for a, f in p.alpha_trace]
    return _report(cfg, results, checks, notes), ["alpha", "objective"], rows


def cmd_verify(cfg):
    res = vf.run_checks(cfg.get("suite"), cfg.get("tol"))
    checks = [r.to_dict(timings=cfg["timings"]) for r in res]
    header = ["suite", "name", "citation", "measured", "threshold", "relation", "passed"]
    rows = [[c["suite"], c["name"], c["citation"], c["measured"], c["threshold"],
             c["relation"], c["passed"]] for c in checks]
    results = {"suite": cfg.get("suite") or "all", "count": len(checks)}
    return _report(cfg, results, checks), header, rows


RECORD_COLUMNS = ["family", "dim", "parameters", "deficit", "distance_sq", "ratio",
                  "d2_at_vstar", "chain_lower", "chain_lower_half_n", "d_hat", "vstar_norm",
                  "decomposition_residual", "is_zero", "sharpened_margin"]


def cmd_scan(cfg):
    family = cfg.get("family")
    if not family:
        raise UsageError("scan needs --family")
    grid = dict(sl.DEFAULT_GRIDS[family])
    if cfg.get("param"):
        grid = {name: values for name, values in cfg["param"]}
    if family == "random-hermite" and "seed" not in grid:
        grid["seed"] = [cfg["seed"]]
    scan = sl.ratio_scan(family, grid, dim=cfg["dim"])
    C1, c4 = cfg["C1"], cfg["c4"]
    margins = [sl.sharpened_margin(r, C1, c4) for r in scan.records]
    fitted = sl.fit_sharpened_constants(scan.records)
    records = []
    for r, m in zip(scan.records, margins):
        d = r.to_dict()
        d["sharpened_margin"] = m
        records.append(d)
    summary = scan.summary()
    summary.update(fitted.to_dict())
    summary["candidate"] = {"C1": C1, "c4": c4, "min_margin": min(margins)}
    applicable = [r for r in scan.records if not r.is_zero]
    chain_slack = min((r.d2_at_vstar - r.chain_lower for r in applicable), default=0.0)
    notes = []
    if cfg["dim"] > 1 and applicable:
        alt = min(r.d2_at_vstar - r.chain_lower_half_n for r in applicable)
        notes.append(f"chain bound with factor n/2 instead of n^2/2: minimum slack {alt:.17g} "
                     f"(reported, not asserted)")
    checks = [
        _check("ratio-nonnegative", "stability ratio is nonnegative",
               min(r.ratio for r in scan.records), 0.0, ">="),
        _check("decomposition-identity", "expansion around the nearest Gaussian",
               scan.max_decomposition_residual, _tol(cfg, "decomposition-identity")),
        _check("second-variation-chain", "second variation dominates the AM-GM bound",
               -chain_slack, _tol(cfg, "second-variation-chain")),
    ]
    results = {"summary": summary, "records": records}
    rows = [[d[c] for c in RECORD_COLUMNS] for d in records]
    return _report(cfg, results, checks, notes), RECORD_COLUMNS, rows


def cmd_sharpness(cfg):
    u = load_input(cfg, default=suites.reference_function)
    curve = sl.sharpness_curve(u, cfg["lambdas"])
    scaled = curve.scaled()
    band = [s for lam, s in zip(curve.lambdas, scaled) if 4.0 <= lam <= 64.0]
    results = {"lambdas": list(curve.lambdas), "quotients": list(curve.quotients),
               "quotient_times_lambda_sq": list(scaled), "deficits": list(curve.deficits),
               "max_projection_mismatch": curve.max_projection_mismatch}
    checks = [
        _check("quotient-positive", "Q(lambda) > 0", min(curve.quotients), 0.0, ">="),
        _check("projection-consistency", "dilated nearest Gaussian matches a fresh projection",
               curve.max_projection_mismatch, _tol(cfg, "projection-consistency")),
    ]
    if len(band) >= 2:
        checks.append(_check("lambda-squared-band", "Q(lambda) lambda^2 within a factor 2 on [4, 64]",
                             max(band) / min(band), 2.0))
    rows = [[lam, q, s] for lam, q, s in zip(curve.lambdas, curve.quotients, scaled)]
    return _report(cfg, results, checks), ["lambda", "Q", "Q_lambda_sq"], rows


def cmd_debruijn(cfg):
    u = load_input(cfg, default=suites.reference_function)
    if u.dim != 1 or u.kind not in ("hermite", "grid1d"):
        raise UsageError("debruijn needs a one-dimensional grid or Hermite input")
    modes = cfg.get("modes")
    n_modes = (modes + 1) if modes is not None else sp.DEFAULT_MODES + 1
    if u.kind == "hermite":
        s = sp.hermite_spectrum(u, max(n_modes, u.spec.n_modes))
    else:
        s = sp.hermite_spectrum(u, n_modes)
    chk = sp.debruijn_check(s)
    bound = sp.debruijn_distance_bound(s)
    results = {"coefficients": s.coefficients.tolist(), "residual": s.residual,
               "hermite_sum": chk.to_dict(), "distance_bound": bound.to_dict()}
    if s.residual == 0.0:
        identity = _check("debruijn-identity", "Hermite-sum identity on a pure spectrum",
                          abs(chk.margin), _tol(cfg, "debruijn-identity"))
    else:
        identity = _check("debruijn-inequality", "Hermite-sum inequality with a residual",
                          chk.margin, -_tol(cfg, "debruijn-identity"), ">=")
    checks = [identity,
              _check("debruijn-distance-bound", "product of spreads exceeds the distance bound",
                     bound.margin, 0.0, ">=")]
    rows = [[k, c] for k, c in enumerate(s.coefficients)]
    return _report(cfg, results, checks), ["k", "coefficient"], rows


COMMANDS = {
    "deficit": cmd_deficit, "project": cmd_project, "verify": cmd_verify,
    "scan": cmd_scan, "sharpness": cmd_sharpness, "debruijn": cmd_debruijn,
}


def _emit(cfg, report, header, rows):
    if cfg["format"] == "csv":
        text = uio.csv_text(header, rows)
    else:
        text = uio.dumps(report) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve(args, parser)
        report, header, rows = COMMANDS[cfg["command"]](cfg)
        if cfg["timings"]:
            report["timings"] = {"total_seconds": time.perf_counter() - t0}
        _emit(cfg, report, header, rows)
    except (UsageError, ParseError, EvaluationError, UnclabError, OSError) as exc:
        print(f"unclab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in report["checks"]:
        if not c["passed"]:
            print(f"unclab {args.command}: check failed: {c['name']} measured "
                  f"{c['measured']:.17g} {c['relation']} {c['threshold']:.17g} violated",
                  file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
