"""Batch front end: ``run``, ``sweep``, ``adjudicate`` and ``schema``.

Exit codes: 0 pass, 1 check failure, 2 config error, 3 numerical budget not met.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import berezin as bz
from . import checks as ck
from . import config as cfgmod
from .fock import FockSpace, WeightVector
from .quadrature import ToleranceNotMet
from .symbols import SymbolSyntaxError, UnsupportedForm, flatten_resolvents, parse_symbol

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


# ---------------------------------------------------------------- records

def _clean(x):
    """JSON-safe copy: complex -> [re, im], numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def record(suite, check, params, values, method, errors, tolerance=None, passed=None, kind="check"):
    return {"suite": suite, "check": check, "kind": kind, "params": params, "values": values,
            "method": method, "errors": errors, "tolerance": tolerance, "passed": passed}


# ---------------------------------------------------------------- suite builders
# Each builder returns a list of zero-argument callables; each callable returns records.

def _space(cfg, D=None):
    return FockSpace(cfg["space"]["n"], cfg["space"]["D"] if D is None else D, cfgmod.weights(cfg))


def _relation_params(seed, n):
    rng = np.random.default_rng([seed, 1])

    def vec():
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        return v / np.linalg.norm(v) * np.sqrt(rng.uniform())

    def real():
        return float(rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 2.0))

    lam, mu = real(), real()
    while abs(lam + mu) < 0.5:
        mu = real()
    return {"lam": lam, "mu": mu, "nu": float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)),
            "lam_c": complex(lam, rng.uniform(-1, 1)), "mu_c": complex(mu, rng.uniform(-1, 1)),
            "f": vec(), "g": vec()}


def suite_relations(cfg):
    sp = _space(cfg)
    p = _relation_params(cfg["seed"], sp.n)
    eps = ck.EpsilonModel(cfg["tolerances"]["eps_c"])

    def one(rid):
        def run():
            if rid <= 4:
                params = {"lam": p["lam_c"], "mu": p["mu_c"], "nu": p["nu"], "f": p["f"]}
                rep = ck.check_relation(rid, params, sp, tol=cfg["tolerances"]["machine"])
            else:
                params = {k: p[k] for k in ("lam", "mu", "f", "g")}
                rep = ck.check_relation(rid, params, sp, eps=eps)
            return [record("relations", rep.relation, rep.params, {"residual": rep.residual, **rep.extras},
                           "operator-norm" if rid <= 4 else "block-norm",
                           {"truncation_model": "eps(D)" if rid > 4 else "none"}, rep.tolerance, rep.passed)]
        return run
    return [one(r) for r in range(1, 7)]


def suite_relations_halving(cfg):
    Ds = tuple(cfg["grid"]["Ds"])
    fam = ck.calibration_family(cfg["seed"], cfg["grid"]["draws"])

    def one(i, p):
        def run():
            out = []
            for rid in (5, 6):
                prof = ck.relation_d_sweep(rid, p, 1, None, Ds)
                out.append(record("relations-halving", f"relation-{rid}", {"draw": i, **p}, prof,
                                  "block-norm", {"floor": ck.HALVING_FLOOR}, 2.0, prof["passed"]))
            return out
        return run
    return [one(i, p) for i, p in enumerate(fam)]


def _grid_pairs(cfg):
    return [(cfgmod.to_complex(l), cfgmod.to_vector(z)) for l in cfg["grid"]["lam"] for z in cfg["grid"]["z"]]


def suite_laplace(cfg):
    sp = _space(cfg)
    tol = cfg["tolerances"]["laplace"]
    q = cfg["quadrature"]

    def one(lam, z):
        def run():
            r = ck.laplace_representation_residual((lam, z), sp, epsrel=q["semi_epsrel"], budget=q["semi_budget"])
            return [record("laplace", r["form"], {"lam": lam, "z": z, "D": sp.D, "test_degree": r["test_degree"]},
                           {"residual": r["residual"]}, "semi-infinite-gk15",
                           {"quadrature": r["quad_error"]}, tol, r["residual"] <= tol)]
        return run
    return [one(l, z) for l, z in _grid_pairs(cfg)]


def suite_neumann(cfg):
    sp = _space(cfg)

    def one(lam0, z):
        def run():
            lam = lam0 + 0.1 * abs(lam0.real)
            r = ck.neumann_series_residual(lam0, lam, z, sp)
            bound = 1.05 * r["q"]
            return [record("neumann", "geometric-ratio", {"lam0": lam0, "lam": lam, "z": z, "D": sp.D},
                           r, "operator-norm", {"floor": 1e-15}, bound, r["max_ratio"] <= bound)]
        return run
    return [one(l, z) for l, z in _grid_pairs(cfg)]


def suite_power(cfg):
    sp = _space(cfg)
    tol = cfg["tolerances"]["power"]

    def one(lam0, z, k):
        def run():
            r = ck.power_formula_residual(lam0, z, sp, k)
            params = {"lam0": lam0, "z": z, "k": k, "D": sp.D}
            return [record("power", "concrete-derived", params, {"residual": r["concrete_derived"]},
                           "cauchy-contour", {"radius": r["radius"], "points": r["points"]}, tol,
                           r["concrete_derived"] <= tol),
                    record("power", "printed-coefficient", params,
                           {"concrete": r["concrete_printed"], "abstract": r["abstract_printed"]},
                           "cauchy-contour", {"radius": r["radius"], "points": r["points"]}, tol, None,
                           kind="report")]
        return run
    return [one(l, z, k) for l, z in _grid_pairs(cfg) for k in (2, 3, 4)]


def suite_shift(cfg):
    t = cfgmod.weights(cfg)
    n = t.n
    Ds = tuple(cfg["grid"]["Ds"])
    eps = ck.EpsilonModel(cfg["tolerances"]["eps_c"])
    tol_b = cfg["tolerances"]["berezin_shift"]
    items = []
    for lam, z in _grid_pairs(cfg):
        for w in cfg["grid"]["w"]:
            w = cfgmod.to_vector(w)

            def run(lam=lam, z=z, w=w):
                params = {"lam": lam, "z": z, "w": w}
                prof = ck.shift_d_sweep((lam, z), w, n, t, Ds)
                bounds = [eps(D, z, w, t) for D in Ds]
                within = all(r <= b for r, b in zip(prof["residuals"], bounds))
                b = bz.berezin_shift_residual(lam, z, np.zeros(n), w, t)
                return [record("shift", "matrix-halving", params, {**prof, "eps": bounds, "within_eps": within},
                               "block-norm", {"floor": ck.HALVING_FLOOR}, 2.0, prof["passed"] and within),
                        record("shift", "berezin-closed-form", params,
                               {"residual": b["residual"], "swapped_residual": b["swapped_residual"]},
                               "closed-form", {"faddeeva": 1e-15}, tol_b, b["residual"] <= tol_b)]
            items.append(run)
    return items


def suite_threeway(cfg):
    fx = bz.threeway_fixtures()
    idx = cfg["grid"].get("fixtures") or list(range(len(fx)))
    items = []
    for i in idx:
        if i >= len(fx):
            raise cfgmod.ConfigError([f"$.grid.fixtures: index {i} out of range (have {len(fx)})"])

        def run(i=i):
            r = bz.threeway(fx[i])
            vals = {"operator": r["operator"]["value"], "closed_form": r["closed_form"]["value"],
                    "convolution": r["convolution"]["value"] if r["convolution"] else None,
                    "op_vs_closed": r["op_vs_closed"], "closed_vs_conv": r.get("closed_vs_conv"),
                    "op_vs_conv": r.get("op_vs_conv"), "printed_deviation": r["printed_deviation"],
                    "convention": r["convention"]}
            errs = {"operator": r["operator"]["errors"], "closed_form": r["closed_form"]["errors"],
                    "convolution": r["convolution"]["errors"] if r["convolution"] else None}
            return [record("berezin-threeway", f"fixture-{i}", fx[i], vals, "operator|closed-form|convolution",
                           errs, {"op_closed": r["budget_op_closed"], "closed_conv": r.get("budget_closed_conv"),
                                  "op_conv": r.get("budget_op_conv")}, r["agree"])]
        items.append(run)
    return items


def _parsed_symbols(cfg, n):
    out = []
    for s in cfg["symbols"]:
        try:
            out.append((s, parse_symbol(s, n)))
        except SymbolSyntaxError as e:
            raise cfgmod.ConfigError([f"$.symbols: {s!r}: {e}"]) from e
    return out


def suite_berezin_symbol(cfg):
    t = cfgmod.weights(cfg)
    tol = cfg["tolerances"]["symbol_backends"]
    q = cfg["quadrature"]["gauss_q"]
    items = []
    for text, expr in _parsed_symbols(cfg, t.n):
        for w in cfg["grid"]["w"]:
            w = cfgmod.to_vector(w)

            def run(text=text, expr=expr, w=w):
                conv = bz.berezin_symbol(expr, w, t, "convolution", q=q)
                try:
                    flatten_resolvents(expr)
                    other = bz.berezin_symbol(expr, w, t, "closed-form")
                except UnsupportedForm:
                    other = bz.berezin_symbol(expr, w, t, "tensor", q=60) if t.n <= 2 else None
                if other is None:
                    return [record("berezin-symbol", "backends", {"symbol": text, "w": w},
                                   {"convolution": conv.value}, "convolution", conv.errors, tol, None, "report")]
                d = abs(conv.value - other.value)
                return [record("berezin-symbol", "backends", {"symbol": text, "w": w},
                               {"convolution": conv.value, other.method: other.value, "difference": d},
                               f"convolution|{other.method}", {"convolution": conv.errors, other.method: other.errors},
                               tol, d <= tol)]
            items.append(run)
    return items


def suite_gelfand(cfg):
    draws = bz.gelfand_fuzz(cfg["seed"], max(cfg["grid"]["draws"], 1))
    alphas = tuple(float(a) for a in np.geomspace(1.0, cfg["grid"]["alpha_max"], 33))

    def one(i, d):
        def run():
            line = bz.AffineLine(d["line"].x, d["line"].y, alphas)
            r = bz.gelfand_limit(d["desc"], line, d["t"])
            ok = r["tag"] == ("constant" if r["case"] == "sigma-zero" else "decays")
            vals = {"case": r["case"], "tag": r["tag"], "limit": r["limit"], "sigma": r["sigma"],
                    "slope": r.get("slope"), "max_deviation": r.get("max_deviation"),
                    "alpha_max": alphas[-1]}
            return [record("gelfand", f"draw-{i}", {"lam": d["desc"].lam, "z": d["desc"].z, "x": line.x,
                                                    "y": line.y, "t": d["t"].t},
                           vals, "closed-form", {"fit": "least squares on last half"}, -0.8, ok)]
        return run
    return [one(i, d) for i, d in enumerate(draws)]


def suite_c0(cfg):
    t = cfgmod.weights(cfg)
    if t.n != 1:
        return []
    items = []
    for text, expr in _parsed_symbols(cfg, 1):
        def run(text=text, expr=expr):
            r = bz.c0_decay_check(expr, cfg["grid"]["radii"], t)
            if r["spans_phase_space"]:
                ok, expect = r["decreasing"] and r["below_threshold"], "decays"
            else:
                ok, expect = r["non_decaying"], "non-decaying"
            return [record("c0-decay", text, {"radii": r["radii"], "expect": expect}, r, "closed-form",
                           {"angles": 256}, r["threshold"], ok)]
        items.append(run)
    return items


def suite_series(cfg):
    sp = _space(cfg)
    M = cfg["grid"]["M_max"]
    items = []
    for lam, z in _grid_pairs(cfg):
        if lam.real <= 0:
            continue

        def run(lam=lam, z=z):
            r = ck.series_expansion_residual((lam, z), sp, M)
            within = all(a <= b for a, b in zip(r["residuals"], r["tail_bounds"]))
            mono = all(b <= a for a, b in zip(r["residuals"][:-1], r["residuals"][1:]))
            return [record("series", "tail-bound", {"lam": lam, "z": z, "D": sp.D, "M_max": M},
                           {**r, "within_bound": within, "nonincreasing": mono}, "semi-infinite-gk15",
                           {"quadrature": r["quad_error"]}, "tail_bounds", within and mono)]
        items.append(run)
    return items


def adjudication_records(topic, cfg):
    t1 = WeightVector((1.0,))
    out = []
    if topic == "dilation":
        for text in ["1", "R(1;[1])"]:
            for rho in cfg["grid"]["rho"]:
                r = bz.dilation_adjudicate(parse_symbol(text, 1), rho, [0.3 + 0.1j], t1)
                out.append(r | {"symbol": text})
    elif topic == "l2norm":
        for k in (1, 2, 3):
            out.append(bz.moment_check([1.0], t1, k))
    elif topic == "berezin-sign":
        out.append(bz.sign_adjudicate())
    else:
        raise cfgmod.ConfigError([f"unknown adjudication topic {topic!r}"])
    recs = []
    for r in out:
        params = {k: r[k] for k in ("rho", "symbol", "k", "params") if k in r}
        vals = {k: r[k] for k in ("measured", "candidates", "deviations", "winner", "margin", "decisive",
                                  "published_value", "ratio_to_M1_power") if k in r}
        recs.append(record("adjudicate", topic, params, vals, r.get("rhs_backend", "quadrature"),
                           {"budget": r["budget"]}, 10.0, r["decisive"], kind="adjudication")
                    | {"cited_location": r.get("cited_location")})
    return recs


def suite_adjudicate(cfg):
    return [lambda topic=t: adjudication_records(topic, cfg) for t in ("dilation", "l2norm", "berezin-sign")]


SUITES = {
    "relations": suite_relations, "relations-halving": suite_relations_halving, "laplace": suite_laplace,
    "neumann": suite_neumann, "power": suite_power, "shift": suite_shift,
    "berezin-threeway": suite_threeway, "berezin-symbol": suite_berezin_symbol, "gelfand": suite_gelfand,
    "c0-decay": suite_c0, "series": suite_series, "adjudicate": suite_adjudicate,
}


# ---------------------------------------------------------------- execution

class BudgetFailure(RuntimeError):
    pass


def _guard(suite, fn, timing):
    def run():
        t0 = time.perf_counter()
        try:
            recs = fn()
        except ToleranceNotMet as e:
            recs = [record(suite, "tolerance-not-met", {}, {"estimate": e.estimate}, "semi-infinite-gk15",
                           {"quadrature": e.error}, None, False, "budget")]
        except ck.ParameterDomainError as e:
            recs = [record(suite, "domain-error", {}, {"message": str(e)}, "none", {}, None, False)]
        dt = time.perf_counter() - t0
        if timing:
            for r in recs:
                r["timing"] = {"seconds": dt / max(len(recs), 1)}
        return recs
    return run


def run_suite(cfg: dict, threads: int = 1, timing: bool = False) -> list[dict]:
    work = []
    for name in cfg["suites"]:
        work += [_guard(name, fn, timing) for fn in SUITES[name](cfg)]
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as ex:
        chunks = list(ex.map(lambda f: f(), work))      # map keeps submission order
    chash = cfgmod.digest(cfg)
    out = []
    for recs in chunks:
        for r in recs:
            r = _clean(r)
            r["provenance"] = {"config_hash": chash, "seed": cfg["seed"]}
            r["digest"] = cfgmod.digest({k: v for k, v in r.items() if k != "timing"})
            out.append(r)
    return out


def _key(r):
    return json.dumps([r["suite"], r["check"], r["params"]], sort_keys=True)


def _scalar(r):
    v = r["values"]
    for k in ("residual", "max_ratio", "difference", "slope", "max_deviation", "final_ratio", "measured"):
        if isinstance(v.get(k), (int, float)):
            return v[k]
    if isinstance(v.get("residuals"), list) and v["residuals"]:
        return v["residuals"][-1]
    return None


def sweep(cfg: dict, axis: str, values, threads: int = 1, timing: bool = False) -> list[dict]:
    rows, series = [], {}
    for val in values:
        c = cfgmod.validate(cfgmod.set_path(cfg, axis, val))
        for r in run_suite(c, threads, timing):
            r["sweep"] = {"axis": axis, "value": _clean(val)}
            rows.append(r)
            series.setdefault(_key(r), []).append(_scalar(r))
    if axis == "space.D":
        for key, col in series.items():
            if len(col) < 2 or any(x is None for x in col):
                continue
            suite, check, params = json.loads(key)
            mono = all(b <= a * (1 + 1e-12) or b <= ck.HALVING_FLOOR for a, b in zip(col[:-1], col[1:]))
            rows.append(_clean(record("sweep", f"monotone:{suite}/{check}", {"axis": axis, "of": params},
                                      {"column": col, "values": list(values)}, "d-sweep", {}, None, mono)))
    return rows


def exit_code(records) -> int:
    if any(r["kind"] == "budget" for r in records):
        return EXIT_BUDGET
    if any(r["kind"] in ("check", "budget") and r["passed"] is False for r in records):
        return EXIT_FAIL
    return EXIT_OK


CSV_FIELDS = ["suite", "check", "kind", "method", "passed", "value", "tolerance", "params", "errors", "sweep"]


def emit(records, fmt: str, stream):
    if fmt == "jsonl":
        for r in records:
            stream.write(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n")
        return
    w = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({"suite": r["suite"], "check": r["check"], "kind": r["kind"], "method": r["method"],
                    "passed": r["passed"], "value": _scalar(r), "tolerance": json.dumps(r["tolerance"]),
                    "params": json.dumps(r["params"], sort_keys=True),
                    "errors": json.dumps(r["errors"], sort_keys=True),
                    "sweep": json.dumps(r.get("sweep"), sort_keys=True) if "sweep" in r else ""})


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("RESOLVENT_LAB_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise cfgmod.ConfigError([f"RESOLVENT_LAB_THREADS={env!r} is not an integer"])
    return 1


def _parse_values(text: str):
    try:
        v = json.loads(f"[{text}]")
    except json.JSONDecodeError:
        v = [s.strip() for s in text.split(",")]
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resolvent-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write records here instead of stdout")
    common.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, help="worker threads (default: $RESOLVENT_LAB_THREADS or 1)")
    common.add_argument("--timing", action="store_true", help="add per-record timing (excluded from digests)")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", parents=[common], help="run the suites selected in a config")
    r.add_argument("config")
    s = sub.add_parser("sweep", parents=[common], help="rerun a config over values of one dotted key")
    s.add_argument("config")
    s.add_argument("--axis", required=True, help="dotted config key, e.g. space.D or grid.alpha_max")
    s.add_argument("--values", required=True, help="comma-separated JSON values")
    a = sub.add_parser("adjudicate", parents=[common], help="report a convention adjudication")
    a.add_argument("topic", choices=["dilation", "l2norm", "berezin-sign"])
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "schema":
        print(json.dumps(cfgmod.schema(), indent=2))
        return EXIT_OK
    try:
        threads = _threads(args.threads)
        if args.verb == "adjudicate":
            cfg = cfgmod.validate({"version": 1, "suites": ["adjudicate"]})
        else:
            cfg = cfgmod.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise cfgmod.ConfigError(["--seed must be an unsigned 64-bit integer"])
            cfg["seed"] = args.seed
        if args.verb == "run":
            recs = run_suite(cfg, threads, args.timing)
        elif args.verb == "sweep":
            recs = sweep(cfg, args.axis, _parse_values(args.values), threads, args.timing)
        else:
            recs = [_clean(r) for r in adjudication_records(args.topic, cfg)]
    except cfgmod.ConfigError as e:
        for m in e.messages:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    buf = io.StringIO()
    emit(recs, args.format, buf)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return exit_code(recs)


if __name__ == "__main__":
    sys.exit(main())
