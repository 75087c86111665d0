"""Per-run invariant checks and the on-disk artifacts (trace.csv, report.json)."""
import csv
import json
import math

import numpy as np

from . import diagnostics as dg
from .engine import TRACE_COLUMNS, effective_weakness, window_maxima
from .hilbert import norm
from .sets import contains

CSV_FLOAT = "{:.17g}"


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in trace.steps:
            w.writerow([s.n, s.alpha] + [CSV_FLOAT.format(getattr(s, c)) for c in TRACE_COLUMNS[2:]])


def read_trace_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in TRACE_COLUMNS}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _stripe_checks(cfg, trace, checks, details):
    ref = np.array(cfg.extras["reference_point"])
    expect = [np.array([-1.0, 1.0]), np.array([0.0, 1.0])]
    its = trace.iterates
    ok = (len(its) == 3 and trace.stop_reason == "in_intersection"
          and all(np.max(np.abs(its[i + 1] - e)) <= 1e-12 for i, e in enumerate(expect)))
    checks["stripe_iterates"] = bool(ok)
    gap = norm(trace.x_final - ref)
    checks["stripe_limit_differs_from_reference"] = abs(gap - 1.0) <= 1e-12
    details["reference_point"] = ref
    details["distance_to_reference"] = gap


def cap_lines_checks(cfg, trace):
    """The cap-lines invariants, keyed by short names; also returns details."""
    m = cfg.extras["m"]
    tau = np.asarray(cfg.extras["tau"])
    N = len(trace)
    norms = trace.norms()
    tail_sq = math.fsum(tau[m:N] ** 2)
    checks = {
        "cap_tail_tau_sq": tail_sq < 0.25 and cfg.extras["tail_tau_sq_bound"] < 0.25,
    }
    if N > m:
        floor = norms[m + 1:] ** 2 - 0.75 * norms[m] ** 2
        checks["cap_norm_floor"] = bool(floor.min() >= -1e-9)
        pred = norms[m:N] * np.sqrt(1.0 - tau[m:N] ** 2)
        ident = float(np.abs(norms[m + 1:N + 1] - pred).max())
        checks["cap_norm_identity"] = ident <= 1e-10
    else:
        ident = 0.0
    checks["cap_zero_flags"] = trace.flag_count == 0
    w = np.asarray(cfg.extras["tangent"])
    verdict = dg.detect_convergence(trace, [w])
    osc = verdict.oscillations[0]
    checks["cap_no_norm_convergence"] = not verdict.norm_cauchy
    checks["cap_tangent_oscillation"] = osc >= 0.1 * norms[m]
    sin = dg.check_sin_summability(trace, math.sqrt(3.0) / 2.0 * norms[m])
    checks["cap_sin_summability"] = sin.ok
    details = {
        "m": m,
        "tail_tau_sq": tail_sq,
        "tail_tau_sq_bound": cfg.extras["tail_tau_sq_bound"],
        "x_norm_m": norms[m],
        "min_norm_ratio_sq": float((norms[m + 1:] ** 2).min() / norms[m] ** 2) if N > m else None,
        "max_identity_residual": ident,
        "tangent_oscillation": osc,
        "flag_count": trace.flag_count,
    }
    return {k: bool(v) for k, v in checks.items()}, details


def quasi_periodic_window_bound(trace, M):
    """Smallest window maximum of the effective weakness, times ``6 M``
    (at least 1 when the bound holds)."""
    te = effective_weakness(trace)
    mx = window_maxima(te, M)
    return float(mx.min() * 6 * M) if len(mx) else None


def build_report(cfg, trace):
    checks, details = {}, {}
    ref = cfg.a_ref
    ref_common = ref is not None and all(contains(c, ref) for c in cfg.family)
    if ref_common:
        checks["energy"] = dg.check_energy(trace).ok
        checks["fejer"] = dg.check_fejer(trace).ok
        checks["law_of_cosines"] = dg.check_law_of_cosines(trace).ok
    if not cfg.policy.dictated:
        checks["weakness_inequality"] = trace.flag_count == 0

    functionals = list(np.eye(cfg.dim)) if cfg.dim <= 16 else []
    if "tangent" in cfg.extras:
        functionals.append(np.asarray(cfg.extras["tangent"]))
    verdict = dg.detect_convergence(trace, functionals)

    name = cfg.name
    if name == "stripe_example" and "reference_point" in cfg.extras:
        _stripe_checks(cfg, trace, checks, details)
    elif name == "cap_lines" and "tau" in cfg.extras:
        cc, cd = cap_lines_checks(cfg, trace)
        checks.update(cc)
        details.update(cd)
    elif name == "ball_interior" and "ball_radius" in cfg.extras:
        rep = dg.check_rate_bound(trace, cfg.family, cfg.extras["ball_center"],
                                  cfg.extras["ball_radius"], cfg.schedule)
        checks["rate_bound"] = rep.ok
        checks["norm_convergence"] = verdict.norm_cauchy
        details["rate_violations"] = rep.violations
        details["rate_bound_final"] = rep.bound[-1]
    elif name.startswith("quasi_periodic") and "M" in cfg.extras:
        M = cfg.extras["M"]
        ratio = quasi_periodic_window_bound(trace, M)
        checks["window_weakness_bound"] = ratio is None or ratio >= 1.0
        details["window_bound_ratio"] = ratio
        if cfg.extras.get("symmetric"):
            checks["norm_convergence"] = verdict.norm_cauchy

    failed = [k for k, v in checks.items() if not v]
    return {
        "name": name,
        "stop_reason": trace.stop_reason,
        "steps": len(trace),
        "limit": trace.x_final,
        "final_dist_max": trace.final_dist_max,
        "flag_count": trace.flag_count,
        "convergence": {
            "norm_cauchy": verdict.norm_cauchy,
            "weak_proxy": verdict.weak_proxy,
            "oscillations": verdict.oscillations,
            "residual_floor": verdict.residual_floor,
            "tail_diameter": verdict.tail_diameter,
            "note": verdict.label,
        },
        "details": details,
        "checks": checks,
        "failed_checks": failed,
    }
