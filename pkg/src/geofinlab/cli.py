"""Command-line entry point: ``geofinlab <group> <command> [options]``.

Every command prints (or writes with ``--output``) a JSON report carrying
``"schema": "v1"``, an echo of the resolved parameters, the results and an
overall ``pass`` flag. Parameters resolve in the order built-in default <
``--config`` file < explicit flag. Exit status: 0 all assertions pass,
1 an assertion failed, 2 invalid input, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
import time
from fractions import Fraction

import numpy as np

from . import acceptance, cantor, geometry, lattice, leafwise, margulis
from .errors import DomainError, GenerationFailure, ResourceError
from .runtime import thread_count

SCHEMA = "v1"
EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_RESOURCE = 0, 1, 2, 3

# options that never enter the config echo, so reports stay byte-identical
# across output paths and thread counts
_PLUMBING = {"config", "output", "format", "threads", "timing", "group", "command"}


class UsageError(DomainError):
    pass


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def _real(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    if s in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def _reals(text, n=None) -> list:
    items = text if isinstance(text, list) else str(text).split(",")
    vals = [_real(x) for x in items]
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {len(vals)}")
    return vals


def _complexes(text, n) -> list:
    items = text if isinstance(text, list) else str(text).split(",")
    try:
        vals = [complex(str(x).replace(" ", "").replace("i", "j")) for x in items]
    except ValueError:
        raise UsageError(f"bad complex list: {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"expected {n} comma-separated entries, got {len(vals)}")
    return vals


def _ints(text) -> list:
    items = text if isinstance(text, list) else str(text).split(",")
    try:
        return [int(x) for x in items]
    except ValueError:
        raise UsageError(f"bad integer list: {text!r}") from None


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def _positive(p, *names):
    for name in names:
        if p[name] is None or p[name] < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be a positive integer")


# ---------------------------------------------------------------------------
# command handlers: each takes the resolved parameter dict and returns
# (results, passed, csv_text_or_None)
# ---------------------------------------------------------------------------

def geom_line_dist(p):
    l1 = geometry.GeodesicLine(*_reals(p["l1"], 2))
    l2 = geometry.GeodesicLine(*_reals(p["l2"], 2))
    res = geometry.line_distance(l1, l2)
    return {"distance": res.distance, "relation": res.relation}, True, None


def geom_qr(p):
    g = np.array(_complexes(p["matrix"], 4)).reshape(2, 2)
    if np.all(g.imag == 0):
        g = g.real
    k, t, s = geometry.qr_decompose(g)
    err = float(np.abs(k @ geometry.a_matrix(t) @ geometry.u_matrix(s) - g).max())
    return {"k": k, "t": t, "s": s, "reconstruction_error": err}, err <= 1e-10, None


def geom_psi(p):
    v = np.array(_complexes(p["v"], 2))
    w = geometry.to_hermitian(_reals(p["w"], 4)) if p["w"] is not None else geometry.W0_MATRIX
    psi = geometry.psi_form(v, w)
    out = {"psi": psi}
    ok = True
    if p["w"] is None:
        out["closed_form"] = geometry.psi_closed_form(v)
        if abs(psi) > 0:
            h = geometry.stabilizing_element(v)
            achieved = float(np.linalg.norm(h @ v) ** 2)
            out["minimizer"] = h
            out["minimized_norm_sq"] = achieved
            ok = abs(achieved - abs(psi)) <= 1e-6 * max(1.0, abs(psi))
    return out, ok, None


def geom_regulate(p):
    v = np.array(_reals(p["v"], 4))
    k, kp, t = geometry.hyperbolic_regulation(v)
    image = kp @ geometry.lorentz_a(t) @ k @ v
    residual = float(np.abs(image - geometry.W0).max())
    norm = float(np.linalg.norm(v))
    ok = residual <= 1e-9 * max(1.0, norm) and math.cosh(t) <= norm * (1 + 1e-12)
    return {"k": k, "k_prime": kp, "t": t, "residual": residual, "cosh_t": math.cosh(t), "norm": norm}, ok, None


def geom_tube(p):
    return {"volume": geometry.tube_volume(p["area"], p["t0"])}, True, None


def lattice_mod8(p):
    count = lattice.mod8_solubility(p["a"])
    return {"count": count}, count == 0, None


def lattice_enumerate(p):
    bound = p["norm_bound"] if p["norm_bound"] is not None else 3 * math.sqrt(p["a"])
    rep = lattice.lattice_report(p["a"], bound, include_negative=p["include_negative"])
    csv = "m1,m2,m3,m4\n" + "".join(",".join(map(str, m)) + "\n" for m in rep["vectors"])
    return rep, rep["gap_holds"], csv


def lattice_gap(p):
    holds, witness = lattice.norm_gap_check(p["a"], include_negative=p["include_negative"])
    return {"gap_holds": holds, "witness": list(witness.m) if witness is not None else None}, holds, None


def lattice_separation(p):
    out = {"separation": lattice.separation_constant(p["a"], p["c0"], p["c"])}
    if p["area"] is not None:
        out["volume_lower_bound"] = lattice.volume_lower_bound(p["a"], p["area"], p["c0"], p["c"])
    return out, True, None


def _family(p) -> cantor.IntervalFamily:
    if p.get("family"):
        data = _load_json(p["family"])
        # accept a `cantor synth` report as well as a bare family
        if isinstance(data, dict) and "family" in data.get("results", {}):
            data = data["results"]["family"]
        return cantor.IntervalFamily.from_dict(data)
    if p.get("aprime") is None or p.get("count") is None:
        raise UsageError("give --family FILE or --aprime and --count")
    _positive(p, "count")
    return cantor.synth_family(p["aprime"], p["count"], p["seed"])


def cantor_synth(p):
    _positive(p, "count")
    fam = cantor.synth_family(p["aprime"], p["count"], p["seed"])
    rep = cantor.check_separation(fam)
    return {"family": fam.to_dict(), "separation_ok": rep.ok}, rep.ok, None


def cantor_check(p):
    fam = _family(p)
    rep = cantor.check_separation(fam, p.get("target"))
    return {"ok": rep.ok, "violations": rep.violations}, rep.ok, None


def cantor_run(p):
    _positive(p, "count", "depth", "samples")
    desc = {k: p[k] for k in ("aprime", "count", "seed", "depth", "samples")}
    for k in ("box_depth", "prob_level"):
        if p[k] is not None:
            desc[k] = p[k]
    rep = cantor.run_experiment(desc, threads=p["threads"])
    ok = (
        rep["invariant_violations"] == 0
        and rep["box_estimate"] >= rep["lower_bound"] - 0.05
        and rep["max_path_prob"] <= rep["path_prob_bound"]
    )
    csv = "level,surviving_count\n" + "".join(f"{k},{c}\n" for k, c in enumerate(rep["surviving_counts"]))
    return rep, ok, csv


def cantor_boxdim(p):
    _positive(p, "depth")
    if p["middle_thirds"]:
        fam = cantor.middle_thirds_family(p["depth"])
    else:
        fam = _family(p)
    rep = cantor.box_dimension_estimate(fam, p["depth"])
    out = rep.to_dict()
    ok = True
    if p["middle_thirds"]:
        out["reference"] = math.log(2) / math.log(3)
        ok = abs(rep.box_estimate - out["reference"]) <= 0.02
    elif rep.lower_bound is not None:
        ok = rep.box_estimate >= rep.lower_bound - 0.05
    return out, ok, rep.to_csv()


def cantor_treeprob(p):
    fam = _family(p)
    dist = cantor.level_distribution(fam, p["level"])
    total = sum(dist.values())
    top = float(max(dist.values()))
    out = {"level": p["level"], "max_prob": top, "total": total, "support": len(dist)}
    ok = total == 1
    if fam.aprime is not None:
        out["bound"] = cantor.path_probability_bound(p["level"], fam.aprime)
        ok = ok and top <= out["bound"]
    return out, ok, None


def _source(p) -> leafwise.DigitSource:
    if p.get("source"):
        return leafwise.DigitSource.from_dict(_load_json(p["source"]))
    return leafwise.DigitSource.bernoulli(p["bernoulli"])


def leafwise_dimension(p):
    src = _source(p)
    out = {"dimension": leafwise.dimension(src), "entropy_rate": leafwise.entropy_rate(src)}
    if p["mass_level"]:
        out["mass_slope_dimension"] = leafwise.mass_slope_dimension(src, p["mass_level"])
    return out, True, None


def leafwise_entropy(p):
    _positive(p, "steps", "samples")
    src = _source(p)
    rep = leafwise.run_chain(src, p["steps"], p["samples"], p["seed"])
    tol = max(4 * rep.stderr, 1e-12)
    return rep.to_dict(), abs(rep.estimate - rep.target) <= tol, None


def leafwise_l1(p):
    src = _source(p)
    levels = _ints(p["levels"])
    curve = [[n, leafwise.un_l1_error(src, n)] for n in levels]
    vals = [c[1] for c in curve]
    ok = all(x >= y for x, y in zip(vals, vals[1:]))
    csv = "n,l1_error\n" + "".join(f"{n},{e!r}\n" for n, e in curve)
    return {"dimension": leafwise.dimension(src), "l1_curve": curve}, ok, csv


def leafwise_iterate(p):
    src = _source(p)
    dist = leafwise.iterate_chain(src, p["length"], p["state"])
    return {
        "distribution": dist,
        "uniformity_gap": leafwise.uniformity_gap(dist),
        "entropy_deficit": leafwise.entropy_deficit(dist),
    }, True, None


def _chain(p):
    """Chain, heights and constants from ``--chain FILE`` or ``--drift N``;
    explicit ``--t0/--t1`` override values in the descriptor."""
    beta = None
    if p.get("chain"):
        data = _load_json(p["chain"])
        chain = margulis.FiniteChain.from_dict(data)
        if "alpha" not in data:
            raise UsageError("chain descriptor needs 'alpha'")
        alpha = np.asarray(data["alpha"], dtype=float)
        beta = np.asarray(data["beta"], dtype=float) if data.get("beta") is not None else None
        t0 = p["t0"] if p["t0"] is not None else data.get("T0")
        t1 = p["t1"] if p["t1"] is not None else data.get("T1")
    elif p.get("drift"):
        if p["drift"] < 2:
            raise UsageError("--drift needs at least 2 states")
        chain, alpha = margulis.drift_chain(p["drift"], p["p_down"])
        t0 = p["t0"] if p["t0"] is not None else 0.5
        t1 = p["t1"] if p["t1"] is not None else 1.0
    else:
        raise UsageError("give --chain FILE or --drift N")
    if t0 is None or t1 is None:
        raise UsageError("T0 and T1 are required")
    if alpha.shape != (chain.n_states,):
        raise UsageError("alpha must have one entry per state")
    return chain, alpha, beta, float(t0), float(t1)


def margulis_check(p):
    chain, alpha, _, t0, t1 = _chain(p)
    eps = p["eps"] if p["eps"] is not None else margulis.bad_set_measure(chain, alpha, t0, t1)
    cert = margulis.certify(chain, alpha, t0, t1, eps)
    return cert.to_dict(), cert.certified, None


def margulis_tail(p):
    chain, alpha, _, t0, t1 = _chain(p)
    res = margulis.verify_tail(chain, alpha, t0, t1, p["eps"], corrected=p["corrected"], t_max=p["t_max"])
    out = {"ok": res.ok, "worst_ratio": res.worst_ratio, "worst_t": res.worst_t,
           "rows": [list(r) for r in res.rows]}
    return out, res.ok, res.to_csv()


def margulis_combine(p):
    chain, alpha, beta, t0, t1 = _chain(p)
    if beta is None:
        raise UsageError("combine needs 'beta' in the chain descriptor")
    res = margulis.max_combine(chain, alpha, beta, t0, t1, p["eps"])
    out = {
        "gamma": res.gamma,
        "certificate": res.certificate.to_dict(),
        "eps": res.eps,
        "alpha_bad_mass": res.alpha_bad,
        "beta_semi_bad_mass": res.beta_semi_bad,
        "hypotheses": res.hypotheses,
    }
    return out, res.ok, None


def margulis_repdecay(p):
    _positive(p, "trials")
    ms = _ints(p["m"])
    if any(m < 1 for m in ms):
        raise UsageError("--m values must be positive")
    worst = margulis.rep_decay_sweep(ms, p["trials"], p["seed"], p["weight"])
    cw = margulis.REP_DECAY_CW
    return {"m": ms, "weight": p["weight"], "deficit": worst, "frozen_cw": cw}, worst <= cw, None


def run_suite_command(p):
    results = acceptance.run_suite(p["name"], threads=p["threads"])
    out = {
        "criteria": [r.to_dict(timing=p["timing"]) for r in results],
        "passed": sum(r.passed for r in results),
        "total": len(results),
    }
    return out, all(r.passed for r in results), None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

# (group, command) -> (handler, [(flag, type, default, help)], csv_capable)
COMMANDS: dict = {}


def _register(group, name, handler, options, csv=False):
    COMMANDS[(group, name)] = (handler, options, csv)


_SEED = ("seed", int, 0, "random seed")

_register("geom", "line-dist", geom_line_dist, [
    ("l1", str, None, "endpoints x,y of the first line (inf allowed)"),
    ("l2", str, None, "endpoints x,y of the second line"),
])
_register("geom", "qr", geom_qr, [("matrix", str, None, "entries a,b,c,d of g (complex allowed)")])
_register("geom", "psi", geom_psi, [
    ("v", str, None, "vector x,y in C^2"),
    ("w", str, None, "Lorentz coordinates of w (default w0)"),
])
_register("geom", "regulate", geom_regulate, [("v", str, None, "Lorentz vector with Q(v) = -1")])
_register("geom", "tube", geom_tube, [
    ("area", float, None, "area of the base surface"),
    ("t0", float, None, "tube radius"),
])
_register("lattice", "mod8", lattice_mod8, [("a", int, None, "form parameter A")])
_register("lattice", "enumerate", lattice_enumerate, [
    ("a", int, None, "form parameter A"),
    ("norm_bound", float, None, "Euclidean norm bound (default 3 sqrt A)"),
    ("include_negative", bool, True, "also list -w0"),
], csv=True)
_register("lattice", "gap", lattice_gap, [
    ("a", int, None, "form parameter A"),
    ("include_negative", bool, True, "also accept -w0"),
])
_register("lattice", "separation", lattice_separation, [
    ("a", float, None, "form parameter A"),
    ("c0", float, math.log(2), "plane-distance constant"),
    ("c", float, 1.0, "volume constant"),
    ("area", float, None, "surface area for the volume lower bound"),
])
_register("cantor", "synth", cantor_synth, [
    ("aprime", float, None, "separation A'"),
    ("count", int, None, "number of intervals"),
    _SEED,
])
_register("cantor", "check", cantor_check, [
    ("family", str, None, "interval family JSON file"),
    ("aprime", float, None, "separation A' (with --count: synthesize)"),
    ("count", int, None, "number of intervals"),
    ("target", float, None, "separation to check against (default: family's own)"),
    _SEED,
])
_register("cantor", "run", cantor_run, [
    ("aprime", float, None, "separation A'"),
    ("count", int, None, "number of intervals"),
    ("depth", int, 30, "sampling depth"),
    ("samples", int, 10**5, "number of sampled paths"),
    ("box_depth", int, None, "box-counting depth (default min(depth, 12))"),
    ("prob_level", int, None, "exact-tree level (default min(depth, 8))"),
    _SEED,
], csv=True)
_register("cantor", "boxdim", cantor_boxdim, [
    ("family", str, None, "interval family JSON file"),
    ("aprime", float, None, "separation A'"),
    ("count", int, None, "number of intervals"),
    ("depth", int, 12, "box-counting depth"),
    ("middle_thirds", bool, False, "use the middle-thirds control family"),
    _SEED,
], csv=True)
_register("cantor", "treeprob", cantor_treeprob, [
    ("family", str, None, "interval family JSON file"),
    ("aprime", float, None, "separation A'"),
    ("count", int, None, "number of intervals"),
    ("level", int, 8, "tree level m"),
    _SEED,
])
_SOURCE = [
    ("source", str, None, "source descriptor JSON file"),
    ("bernoulli", float, 0.5, "Bernoulli source with P(0) = q when no file is given"),
]
_register("leafwise", "dimension", leafwise_dimension, _SOURCE + [
    ("mass_level", int, 0, "also report the mass-slope dimension at this level"),
])
_register("leafwise", "entropy", leafwise_entropy, _SOURCE + [
    ("steps", int, 32, "chain steps"),
    ("samples", int, 10**5, "Monte Carlo samples"),
    _SEED,
])
_register("leafwise", "l1", leafwise_l1, _SOURCE + [("levels", str, "4,8,16,24", "digit counts n")], csv=True)
_register("leafwise", "iterate", leafwise_iterate, _SOURCE + [
    ("length", int, 8, "number of digits"),
    ("state", int, None, "start state (default: source start law)"),
])
_CHAIN = [
    ("chain", str, None, "chain descriptor JSON file"),
    ("drift", int, None, "use the reflected drift chain with this many states"),
    ("p_down", float, 0.75, "down probability of the drift chain"),
    ("t0", float, None, "drift constant T0"),
    ("t1", float, None, "oscillation constant T1"),
    ("eps", float, None, "bad-set budget (default: measured)"),
]
_register("margulis", "check", margulis_check, _CHAIN)
_register("margulis", "tail", margulis_tail, _CHAIN + [
    ("corrected", bool, False, "use the T1/T0-corrected bound"),
    ("t_max", float, None, "largest t to check"),
], csv=True)
_register("margulis", "combine", margulis_combine, _CHAIN)
_register("margulis", "repdecay", margulis_repdecay, [
    ("m", str, "1,2,3,4,5,6,7,8,9,10,11,12", "scales m"),
    ("trials", int, 1000, "random vectors"),
    ("weight", int, 2, "representation weight"),
    _SEED,
])


def _bool(text) -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_common(parser):
    parser.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of parameter defaults")
    parser.add_argument("--output", default=argparse.SUPPRESS, help="write the report here (atomically)")
    parser.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker count (default: GEOFINLAB_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geofinlab", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    sub_by_group = {}
    for (group, name), (_, options, _) in COMMANDS.items():
        if group not in sub_by_group:
            gp = groups.add_parser(group)
            sub_by_group[group] = gp.add_subparsers(dest="command", required=True)
        cp = sub_by_group[group].add_parser(name)
        for flag, typ, _, help_text in options:
            conv = _bool if typ is bool else typ
            kwargs = {"help": help_text, "default": argparse.SUPPRESS, "type": conv}
            if typ is bool:
                kwargs["nargs"] = "?"
                kwargs["const"] = True
            cp.add_argument("--" + flag.replace("_", "-"), dest=flag, **kwargs)
        _add_common(cp)
    sp = groups.add_parser("suite", help="run the acceptance battery")
    sp.add_argument("name", help="|".join(acceptance.SUITES))
    sp.add_argument("--timing", action="store_true", default=argparse.SUPPRESS,
                    help="include wall times (reports are then not byte-reproducible)")
    _add_common(sp)
    return parser


_NEG_VALUE = re.compile(r"^-(\d|\.\d|inf)")


def _join_negative_values(argv):
    """Turn ``--flag -1,1`` into ``--flag=-1,1`` so argparse does not take the
    value for an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEG_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def resolve(ns: argparse.Namespace):
    """Merge defaults, the ``--config`` file and explicit flags."""
    given = vars(ns).copy()
    if ns.group == "suite":
        options = [("name", str, None, ""), ("timing", bool, False, "")]
        key = ("suite", None)
    else:
        options = COMMANDS[(ns.group, ns.command)][1]
        key = (ns.group, ns.command)
    params = {flag: default for flag, _, default, _ in options}
    if "config" in given:
        cfg = _load_json(given["config"])
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        known = set(params) | {"format", "threads", "output"}
        for k, v in cfg.items():
            k = k.replace("-", "_")
            if k not in known:
                raise UsageError(f"unknown config key {k!r}")
            params[k] = v
    for k, v in given.items():
        if k not in ("group", "command", "config"):
            params[k] = v
    for flag, typ, _, _ in options:
        v = params.get(flag)
        if v is None or typ is str:
            continue
        try:
            params[flag] = _bool(v) if typ is bool else typ(v)
        except (TypeError, ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"bad value for {flag}: {v!r}") from None
    params.setdefault("format", "json")
    params["threads"] = thread_count(params.get("threads"))
    return key, params


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".geofinlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dispatch(key, params):
    """Run a resolved command; returns ``(report_dict, csv_text, passed)``."""
    start = time.perf_counter()
    if key[0] == "suite":
        if params["name"] not in acceptance.SUITES:
            raise UsageError(f"unknown suite {params['name']!r}; choose from {', '.join(acceptance.SUITES)}")
        handler, csv_ok, title = run_suite_command, False, f"suite {params['name']}"
    else:
        handler, _, csv_ok = COMMANDS[key]
        title = f"{key[0]} {key[1]}"
    if params["format"] == "csv" and not csv_ok:
        raise UsageError(f"{title} has no CSV output")
    results, passed, csv_text = handler(params)
    report = {
        "schema": SCHEMA,
        "command": title,
        "config": {k: v for k, v in sorted(params.items()) if k not in _PLUMBING},
        "results": results,
        "pass": bool(passed),
    }
    if params.get("timing"):
        report["wall_time"] = time.perf_counter() - start
    return _jsonable(report), csv_text, bool(passed)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        key, params = resolve(ns)
        report, csv_text, passed = dispatch(key, params)
    except ResourceError as exc:
        print(f"geofinlab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GenerationFailure as exc:
        print(f"geofinlab: generation failed: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, ValueError) as exc:
        print(f"geofinlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = csv_text if params["format"] == "csv" else json.dumps(report, indent=2, sort_keys=True) + "\n"
    if params.get("output"):
        _write_atomic(params["output"], text)
    else:
        sys.stdout.write(text)
    if key[0] == "suite":
        for crit in report["results"]["criteria"]:
            status = "PASS" if crit["pass"] else "FAIL"
            print(f"criterion {crit['number']:2d} {status}  {crit['title']}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
