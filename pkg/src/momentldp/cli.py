"""Command line interface: ``momentldp {rate,scan,simulate,selftest}``.

Exit codes: 0 success, 1 error, 2 certified-infinite rate.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import math
import sys
import warnings

import numpy as np

from .config import RunConfig, parse_point
from .errors import InvalidConfig, MomentLDPError
from .moment import chamber_decompose, moment_map
from .rate import (Certificate, RateResult, rate_AN, rate_bipartite_pure, rate_contracted,
                   rate_cramer, rate_keyl_closed, rate_maximally_mixed, rate_numeric)
from .regions import parse_region
from .representations import Standard, TensorProduct, TorusRep, weight_data
from .selftest import SUITES, run_selftest
from .simulate import (_torus_weight_law, bound_prefactor, estimate_mu, exact_mu,
                       infimum_rate, wilson_interval)
from .states import maximally_mixed

METHODS = ("numeric", "an", "keyl", "cramer", "mixed", "contracted", "bipartite")
EXIT_OK, EXIT_ERROR, EXIT_INFINITE = 0, 1, 2


# ---------------------------------------------------------------------------
# number formatting


def fmt(v):
    """Shortest round-trip text for a float; ``inf`` literal for infinities."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _json_clean(o):
    """Replace float infinities by the ``"inf"`` literal."""
    if isinstance(o, dict):
        return {k: _json_clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_json_clean(v) for v in o]
    if isinstance(o, (float, np.floating)) and math.isinf(o):
        return "inf" if o > 0 else "-inf"
    return o


def dumps(obj) -> str:
    return json.dumps(_json_clean(obj), default=_json_default, indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# rate dispatch


def _closed(value, method, rep, x) -> RateResult:
    """RateResult for a closed-form value; infinite values get a separation certificate."""
    if math.isinf(value):
        cd = chamber_decompose(x) if x is not None else None
        sep = weight_data(rep).polytope.separating_direction(cd.x0_cartan) if cd else None
        if sep is not None:
            cert = Certificate("diverged", beta=sep[0], slope=sep[1], margin=sep[1])
        else:
            cert = Certificate("closed_form")
        return RateResult(math.inf, None, cert, 0, [], method)
    return RateResult(float(value), None, Certificate("closed_form"), 0, [], method)


def _bipartite_parts(cfg: RunConfig, x):
    rep = cfg.representation
    if not (isinstance(rep, TensorProduct) and len(rep.parts) == 2
            and all(isinstance(p, Standard) for p in rep.parts)):
        raise InvalidConfig("bipartite needs a tensor product of two standard representations")
    w, v = np.linalg.eigh(cfg.state)
    if w[-2] > 1e-10:
        raise InvalidConfig("bipartite needs a pure state (rank one density matrix)")
    d1, d2 = rep.parts[0].d, rep.parts[1].d
    psi = v[:, -1].reshape(d1, d2)
    cd = chamber_decompose(x)
    c = cd.x0_cartan
    return psi, cd.h.parts[0], cd.h.parts[1], c[:d1], c[d1:]


def compute_rate(cfg: RunConfig, x, method: str) -> RateResult:
    rep, rho, opts = cfg.representation, cfg.state, cfg.optimizer
    if method == "numeric":
        return rate_numeric(rep, rho, x, opts)
    if method == "an":
        return rate_AN(rep, rho, x, opts)
    if method == "keyl":
        if not isinstance(rep, Standard):
            raise InvalidConfig("keyl needs a standard representation")
        cd = chamber_decompose(x)
        return _closed(rate_keyl_closed(rho, cd.h, cd.x0_cartan), "keyl", rep, x)
    if method == "cramer":
        if not isinstance(rep, TorusRep):
            raise InvalidConfig("cramer needs a torus representation")
        return rate_cramer(_torus_weight_law(rep, rho), x.cartan_coords(), opts)
    if method == "mixed":
        if np.abs(rho - maximally_mixed(rep.dim)).max() > 1e-10:
            raise InvalidConfig("mixed needs the maximally mixed state")
        return _closed(rate_maximally_mixed(rep, chamber_decompose(x).x0_cartan), "mixed", rep, x)
    if method == "contracted":
        val, h = rate_contracted(rep, rho, chamber_decompose(x).x0_cartan, opts)
        return _closed(val, "contracted", rep, x)
    if method == "bipartite":
        psi, h1, h2, x1, x2 = _bipartite_parts(cfg, x)
        return _closed(rate_bipartite_pure(psi, h1, h2, x1, x2), "bipartite", rep, x)
    raise InvalidConfig(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def cross_check_method(cfg: RunConfig, method: str):
    """A second applicable method, or None."""
    rep, rho = cfg.representation, cfg.state
    if method == "numeric":
        if isinstance(rep, Standard):
            return "keyl"
        if isinstance(rep, TorusRep):
            return "cramer"
        return "an"
    if method in ("an", "keyl", "cramer", "bipartite"):
        return "numeric"
    if method == "mixed":
        return "numeric"
    if method == "contracted":
        if np.abs(rho - maximally_mixed(rep.dim)).max() <= 1e-10:
            return "mixed"
        return None
    return None


def _contracted_keyl(cfg, x):
    # orbit-minimized Keyl rate: spectrum of rho against x0
    rho = cfg.state
    w, v = np.linalg.eigh(rho)
    h = v[:, ::-1]
    return rate_keyl_closed(rho, h, chamber_decompose(x).x0_cartan)


def rate_record(cfg: RunConfig, x, method: str, cross: bool = True) -> dict:
    res = compute_rate(cfg, x, method)
    rec = res.to_dict()
    rec["tolerances"] = {"gradient_tolerance": cfg.optimizer.gradient_tolerance,
                         "boundary_tolerance": 1e-9, "state_tolerance": 1e-10}
    rec["optimizer"] = cfg.optimizer.to_dict()
    cd = chamber_decompose(x)
    rec["point"] = {"chamber": [float(c) for c in cd.x0_cartan]}
    cm = cross_check_method(cfg, method) if cross else None
    xc = None
    if cm is None and method == "contracted" and isinstance(cfg.representation, Standard):
        cm, xv = "keyl_spectrum", _contracted_keyl(cfg, x)
        xc = {"method": cm, "value": xv}
    elif cm is not None:
        try:
            other = compute_rate(cfg, x, cm)
            xc = {"method": cm, "value": other.value}
        except (MomentLDPError, ValueError) as exc:
            xc = {"method": cm, "error": str(exc)}
    if xc is not None and "value" in xc:
        a, b = res.value, xc["value"]
        xc["abs_diff"] = 0.0 if (math.isinf(a) and math.isinf(b)) else abs(a - b)
    rec["cross_check"] = xc
    return rec, res


# ---------------------------------------------------------------------------
# commands


def _config(args) -> RunConfig:
    if not args.config:
        raise InvalidConfig("--config is required for this command")
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.optimizer = dataclasses.replace(cfg.optimizer, seed=args.seed % (2 ** 63))
    if args.workers is not None:
        if args.workers < 1:
            raise InvalidConfig("--workers must be positive")
        cfg.workers = args.workers
    if args.format:
        cfg.output_format = args.format
    if args.out:
        cfg.output_path = args.out
    return cfg


def _floats(s, what):
    try:
        return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidConfig(f"bad {what} {s!r}") from exc


def cmd_rate(args) -> int:
    cfg = _config(args)
    if args.x is not None:
        x = parse_point({"cartan": _floats(args.x, "--x")}, cfg.group)
    elif cfg.point is not None:
        x = cfg.point
    else:
        x = moment_map(cfg.representation, cfg.state)
    method = args.method or "numeric"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec, res = rate_record(cfg, x, method)
    rec["command"] = "rate"
    if cfg.output_format == "csv":
        xc = rec["cross_check"] or {}
        text = csv_text(["method", "value", "certificate", "evaluations", "flags",
                         "cross_method", "cross_value", "gradient_tolerance"],
                        [[method, res.value, res.certificate.kind, res.evaluations,
                          ";".join(res.flags), xc.get("method", ""), xc.get("value"),
                          cfg.optimizer.gradient_tolerance]])
    else:
        text = dumps(rec)
    _emit(text, cfg.output_path)
    return EXIT_INFINITE if res.is_infinite else EXIT_OK


def parse_grid(spec: str, dim: int):
    """``lo:hi:n`` per Cartan coordinate, coordinates separated by ``;``."""
    axes = []
    for part in spec.split(";"):
        try:
            lo, hi, n = part.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError as exc:
            raise InvalidConfig(f"bad grid axis {part!r}; expected lo:hi:n") from exc
        if n < 1 or (n > 1 and not hi > lo):
            raise InvalidConfig(f"bad grid axis {part!r}")
        axes.append(np.linspace(lo, hi, n) if n > 1 else np.array([lo]))
    if len(axes) != dim:
        raise InvalidConfig(f"grid has {len(axes)} axes, the Cartan dimension is {dim}")
    return axes


def _default_scan_method(rep):
    if isinstance(rep, TorusRep):
        return "cramer"
    if isinstance(rep, Standard):
        return "keyl"
    return "numeric"


def cmd_scan(args) -> int:
    cfg = _config(args)
    spec = args.grid or cfg.grid
    if not spec:
        raise InvalidConfig("scan needs --grid or a 'grid' entry in the config")
    rep = cfg.representation
    axes = parse_grid(spec, cfg.group.cartan_dim)
    lo, hi = weight_data(rep).polytope.bounding_box(inflate=0.1)
    for i, ax in enumerate(axes):
        if ax.min() < lo[i] - 1e-12 or ax.max() > hi[i] + 1e-12:
            raise InvalidConfig(f"grid axis {i} leaves the weight box [{lo[i]}, {hi[i]}] inflated by 10%")
    method = args.method or _default_scan_method(rep)
    rows = []
    from .lie import DualVector
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for pt in itertools.product(*axes):
            x = DualVector.from_cartan(cfg.group, np.array(pt))
            res = compute_rate(cfg, x, method)
            rows.append(list(pt) + [res.value, res.certificate.kind, res.evaluations, method,
                                    cfg.optimizer.gradient_tolerance])
    header = [f"c{i}" for i in range(len(axes))] + ["value", "certificate", "evaluations",
                                                    "method", "gradient_tolerance"]
    if cfg.output_format == "json":
        text = dumps({"command": "scan", "columns": header, "rows": rows})
    else:
        text = csv_text(header, rows)
    _emit(text, cfg.output_path)
    return EXIT_OK


def _m_list(s):
    out = []
    for part in str(s).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out or any(m < 1 for m in out):
        raise InvalidConfig(f"bad m list {s!r}")
    return out


def simulate_report(cfg: RunConfig, m_list, region, samples: int):
    rep, rho = cfg.representation, cfg.state
    inf_rate = infimum_rate(rep, rho, region)
    can_exact = region.chamber_only or isinstance(rep, TorusRep)
    rows = []
    for m in m_list:
        ex = exact_mu(rep, rho, m, region) if can_exact else None
        if samples > 0:
            mu, ci = estimate_mu(rep, rho, m, region, samples, seed=cfg.seed + m, workers=cfg.workers)
            test = ci[1]
        else:
            if ex is None:
                raise InvalidConfig("this region needs --samples > 0")
            mu, ci, test = ex, (ex, ex), ex
        ref = ex if ex is not None else mu
        lower_only = False
        if ref > 0:
            rate = -math.log(ref) / m
        elif ex is None:
            rate, lower_only = -math.log(wilson_interval(0, samples)[1]) / m, True
        else:
            rate = math.inf
        rhs = bound_prefactor(rep, m) * math.exp(-m * inf_rate.value) if math.isfinite(inf_rate.value) else 0.0
        rows.append({"m": m, "mu_hat": mu, "ci_low": ci[0], "ci_high": ci[1], "mu_exact": ex,
                     "empirical_rate": rate, "rate_is_lower_bound": lower_only,
                     "inf_rate": inf_rate.value, "bound_rhs": rhs, "bound_holds": bool(test <= rhs)})
    seq = [(r["m"], r["mu_exact"] if r["mu_exact"] is not None else r["mu_hat"], r) for r in rows]
    tail = [s for s in seq if s[0] >= 4]
    if can_exact:
        nondecr = all(b[1] >= a[1] - 1e-12 for a, b in zip(tail, tail[1:]))
    else:
        nondecr = all(b[2]["ci_high"] >= a[2]["ci_low"] for a, b in zip(tail, tail[1:]))
    j0 = chamber_decompose(moment_map(rep, rho)).x0_cartan
    summary = {
        "region": region.to_spec(),
        "samples": samples, "seed": cfg.seed, "workers": cfg.workers,
        "inf_rate": inf_rate.value, "inf_rate_is_lower_bound": inf_rate.lower_bound,
        "lln": {"region_contains_moment": region.contains(j0),
                "nondecreasing_from_m4": nondecr,
                "final_mu": seq[-1][1], "final_exceeds_0.9": seq[-1][1] > 0.9,
                "source": "exact" if can_exact else "monte_carlo"},
        "upper_bound": {"violations": sum(not r["bound_holds"] for r in rows),
                        "holds": all(r["bound_holds"] for r in rows),
                        "test": "wilson_upper_95" if samples > 0 else "exact"},
    }
    return rows, summary


SIM_COLUMNS = ["m", "mu_hat", "ci_low", "ci_high", "mu_exact", "empirical_rate",
               "rate_is_lower_bound", "inf_rate", "bound_rhs", "bound_holds"]


def cmd_simulate(args) -> int:
    cfg = _config(args)
    sim = cfg.simulate
    raw = args.m_list if args.m_list is not None else sim.get("m_list", "1-8")
    if isinstance(raw, list):
        raw = ",".join(str(v) for v in raw)
    m_list = _m_list(raw)
    region_spec = args.region or sim.get("region")
    if not region_spec:
        raise InvalidConfig("simulate needs --region or simulate.region in the config")
    region = parse_region(region_spec)
    samples = int(args.samples if args.samples is not None else sim.get("samples", 0))
    rows, summary = simulate_report(cfg, m_list, region, samples)
    if cfg.output_format == "json":
        _emit(dumps({"command": "simulate", "rows": rows, "summary": summary}), cfg.output_path)
    else:
        _emit(csv_text(SIM_COLUMNS, [[r[c] for c in SIM_COLUMNS] for r in rows]), cfg.output_path)
        text = dumps(summary)
        if cfg.output_path:
            _emit(text, cfg.output_path + ".summary.json")
        else:
            sys.stderr.write(text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.config:
        seed = RunConfig.load(args.config).seed if args.seed is None else seed
    suites = None if not args.suites else [s.strip() for s in args.suites.split(",")]
    perturb = tuple(s.strip() for s in (args.inject or "").split(",") if s.strip())
    for name in (suites or []) + list(perturb):
        if name not in SUITES:
            raise InvalidConfig(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    results = run_selftest(seed=seed, suites=suites, perturb=perturb)
    recs = []
    for r in results:
        d = r.to_dict()
        d.pop("seconds")
        recs.append(d)
    failed = [r for r in results if not r.passed]
    if (args.format or "json") == "csv":
        text = csv_text(["name", "checks", "failures", "max_residual", "tolerance", "passed"],
                        [[d["name"], d["checks"], d["failures"], d["max_residual"], d["tolerance"],
                          "true" if d["passed"] else "false"] for d in recs])
    else:
        text = dumps({"command": "selftest", "seed": seed, "suites": recs,
                      "passed": not failed, "failures": [r.name for r in failed]})
    _emit(text, args.out)
    return EXIT_ERROR if failed else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momentldp",
                                description="Rate functions and measurement simulation for moment-map estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--workers", type=int, help="override the configured worker count")
        sp.add_argument("--out", metavar="PATH", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="output format")

    sp = sub.add_parser("rate", help="rate function at one point")
    common(sp)
    sp.add_argument("--method", choices=METHODS)
    sp.add_argument("--x", help="Cartan coordinates of the point, comma separated "
                                "(default: config point, else the moment map of the state)")
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("scan", help="rate function on a grid of Cartan points")
    common(sp)
    sp.add_argument("--method", choices=METHODS)
    sp.add_argument("--grid", metavar="SPEC", help="lo:hi:n per coordinate, separated by ';'")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("simulate", help="outcome measures, decay rates and the upper bound")
    common(sp)
    sp.add_argument("--m-list", dest="m_list", metavar="LIST", help="e.g. 2,4,6 or 2-12")
    sp.add_argument("--region", metavar="SPEC",
                    help="everything | ball:c1,c2:r | halfspace:n1,n2:t | not:<region>")
    sp.add_argument("--samples", type=int, help="Monte Carlo samples per m (0: exact only)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("selftest", help="run the built-in invariant suites")
    common(sp)
    sp.add_argument("--suites", help="comma separated subset of: " + ", ".join(SUITES))
    sp.add_argument("--inject", metavar="SUITES",
                    help="corrupt the named suites to check that failures are reported")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MomentLDPError, ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
