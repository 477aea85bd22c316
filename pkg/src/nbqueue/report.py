"""
Report builders behind the command-line interface.

Each builder takes a RunSpec and returns a Report: an ordered list of row
dicts with a fixed column list, plus diagnostics. Formatting to csv, markdown
or json is separate so that every subcommand shares the same writers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Optional

import numpy as np

from .asymptotics import classical_approx, hedge_from_regime, robust_approx
from .errors import ConvergenceError, ModelError
from .exact import pollaczek_metrics, roots_metrics, spitzer_metrics
from .metrics import METHODS, StationaryMetrics
from .model import QueueInstance, regime_instance
from .oracles import MarkovConfig, SimConfig, markov_stationary, simulate
from .roots import count_zeros, find_roots_bl, find_roots_fixed_point

FORMATS = ("csv", "markdown", "json")
SPREADS = ("sd", "root-sd")

TABLE_COLUMNS = ("s", "rho", "mean_exact", "mean_classical", "mean_robust",
                 "sd_exact", "sd_classical", "sd_robust", "status")
HEDGE_COLUMNS = ("delta", "n", "beta_ratio", "sigma_ratio")
COMPARE_COLUMNS = ("method", "mean", "sd", "p0", "err_mean", "err_sd", "err_p0", "status")
ROOTS_COLUMNS = ("method", "k", "re", "im", "residual", "iterations", "status", "radius_factor")

EXACT_METHODS = ("spitzer", "pollaczek", "roots")
# cross-method tolerance on (mean, p0, variance) for the pass/fail column of compare
CROSS_TOL = {"spitzer": 1e-7, "pollaczek": 1e-7, "roots": 1e-7, "markov": 1e-6}


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one CLI run.

    ``spread`` selects the dispersion columns of ``table``: ``"sd"`` is the
    standard deviation, ``"root-sd"`` its square root (the fourth root of the
    variance), which is the scale some published tables use.
    """

    command: str
    beta: float = 1.0
    delta: tuple = (0.6,)
    s_list: tuple = ()
    n_range: Optional[tuple] = None
    methods: tuple = METHODS
    output: str = "csv"
    tol: float = 1e-12
    seed: Optional[int] = None
    a: Optional[float] = None
    b: Optional[float] = None
    spread: str = "sd"
    periods: int = 1_000_000
    jobs: int = 1

    def __post_init__(self):
        if self.command not in ("table", "hedge", "compare", "roots"):
            raise ModelError(f"unknown command {self.command!r}")
        if self.output not in FORMATS:
            raise ModelError(f"unknown format {self.output!r}")
        if self.spread not in SPREADS:
            raise ModelError(f"unknown spread {self.spread!r}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ModelError("tol must be a positive number")
        if self.command in ("table", "compare", "roots") and not self.s_list:
            raise ModelError(f"{self.command} needs at least one capacity s")
        if any(int(s) != s or s < 1 for s in self.s_list):
            raise ModelError("capacities must be positive integers")
        if self.command == "compare":
            bad = [m for m in self.methods if m not in METHODS]
            if bad:
                raise ModelError(f"unknown methods {bad}")
            if not self.methods:
                raise ModelError("no methods enabled")
        if self.command == "hedge":
            if self.n_range is None:
                raise ModelError("hedge needs an n range")
            lo, hi, step = self.n_range
            if not (lo > 1 and hi > lo and step > 0):
                raise ModelError("n range must satisfy 1 < n_min < n_max and step > 0")
        if (self.a is None) != (self.b is None):
            raise ModelError("give both a and b or neither")
        if self.a is None:
            for d in self.delta:
                if not 0.5 < d < 1.0:
                    raise ModelError(f"delta must lie in (1/2, 1), got {d}")
            if not self.beta > 0:
                raise ModelError("beta must be > 0")

    def instance(self, s: int) -> QueueInstance:
        if self.a is not None:
            return QueueInstance.from_ab(self.a, self.b, s)
        return regime_instance(s, self.beta, self.delta[0])[0]


@dataclass
class Report:
    command: str
    columns: tuple
    rows: list
    diagnostics: dict = field(default_factory=dict)
    failed: bool = False


# -- table -------------------------------------------------------------------


def _spread(var: float, kind: str) -> float:
    sd = math.sqrt(max(var, 0.0))
    return sd if kind == "sd" else math.sqrt(sd)


def _table_row(spec: RunSpec, s: int):
    row = dict.fromkeys(TABLE_COLUMNS)
    row["s"] = s
    diag = {"s": s}
    try:
        inst = spec.instance(s)
        row["rho"] = inst.rho
        ex = spitzer_metrics(inst, tol=spec.tol)
        po = pollaczek_metrics(inst, tol=min(1e-13, spec.tol))
        cl = classical_approx(inst)
        rb = robust_approx(inst)
    except ModelError as exc:
        row["status"] = f"invalid: {exc}"
        return row, diag, True
    except (ConvergenceError, ArithmeticError) as exc:
        row["status"] = f"failed: {exc}"
        return row, diag, True
    row.update(mean_exact=ex.mean, mean_classical=cl.mean, mean_robust=rb.mean)
    row.update(
        sd_exact=_spread(ex.variance, spec.spread),
        sd_classical=_spread(cl.variance, spec.spread),
        sd_robust=_spread(rb.variance, spec.spread),
    )
    d_mean = abs(ex.mean - po.mean)
    d_var = abs(ex.variance - po.variance)
    ok = d_mean <= 1e-7 and d_var <= 1e-6
    row["status"] = "ok" if ok else "crosscheck_mismatch"
    diag.update(a=inst.a, b=inst.b, mu=inst.mu, sigma=inst.sigma, p0_exact=ex.p0,
                p0_classical=cl.p0, p0_robust=rb.p0, pollaczek_mean_delta=d_mean,
                pollaczek_variance_delta=d_var, spitzer_K=ex.info["K"],
                pollaczek_nodes=po.info["nodes"], beta_n=rb.info["beta_n"],
                sigma_tilde=rb.info["sigma_tilde"])
    return row, diag, not ok


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _table_task(args):
    return _table_row(*args)


def table(spec: RunSpec) -> Report:
    """One row per capacity: load, exact/classical/robust mean and spread."""
    out = _map(_table_task, [(spec, int(s)) for s in spec.s_list], spec.jobs)
    columns = TABLE_COLUMNS if spec.spread == "sd" else tuple(
        c.replace("sd_", "rsd_") for c in TABLE_COLUMNS)
    rows = [dict(zip(columns, r.values())) for r, _, _ in out]
    return Report("table", columns, rows, {"rows": [d for _, d, _ in out]},
                  failed=any(f for _, _, f in out))


# -- hedge -------------------------------------------------------------------


def hedge(spec: RunSpec) -> Report:
    """beta_n / beta and sigma_tilde / sigma along the regime for each delta."""
    lo, hi, step = spec.n_range
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(count)
    rows = []
    for d in spec.delta:
        for n in grid:
            hp = hedge_from_regime(float(n), spec.beta, d)
            rows.append({"delta": d, "n": float(n), "beta_ratio": hp.beta_n / hp.beta,
                         "sigma_ratio": hp.sigma_tilde / hp.sigma_n})
    return Report("hedge", HEDGE_COLUMNS, rows, {"points": len(rows)})


# -- compare -----------------------------------------------------------------


def _run_method(method: str, inst: QueueInstance, spec: RunSpec) -> StationaryMetrics:
    if method == "spitzer":
        return spitzer_metrics(inst, tol=spec.tol)
    if method == "pollaczek":
        return pollaczek_metrics(inst, tol=min(1e-13, spec.tol))
    if method == "roots":
        return roots_metrics(inst)
    if method == "markov":
        return markov_stationary(inst, MarkovConfig(tol=spec.tol))
    if method == "montecarlo":
        seed = 0 if spec.seed is None else spec.seed
        return simulate(inst, SimConfig(seed=seed, periods=spec.periods))
    if method == "classical":
        return classical_approx(inst)
    if method == "robust":
        return robust_approx(inst)
    raise ModelError(f"unknown method {method!r}")


def _pairwise(results: dict) -> dict:
    out = {}
    names = [m for m in results if isinstance(results[m], StationaryMetrics)]
    for i, m1 in enumerate(names):
        for m2 in names[i + 1:]:
            r1, r2 = results[m1], results[m2]
            d = {"mean": abs(r1.mean - r2.mean), "p0": abs(r1.p0 - r2.p0)}
            if r1.variance is not None and r2.variance is not None:
                d["variance"] = abs(r1.variance - r2.variance)
            out[f"{m1}-{m2}"] = d
    return out


def _verdict(method: str, res: StationaryMetrics, ref: Optional[StationaryMetrics]) -> str:
    if ref is None or method in ("classical", "robust"):
        return "ok"
    if method == "montecarlo":
        ci = res.info["ci95"]
        inside = all(ci[k][0] <= getattr(ref, k) <= ci[k][1] for k in ("mean", "p0"))
        return "pass" if inside else "fail"
    tol = CROSS_TOL[method]
    good = abs(res.mean - ref.mean) <= tol and abs(res.p0 - ref.p0) <= tol
    if res.variance is not None and ref.variance is not None:
        good &= abs(res.variance - ref.variance) <= 10 * tol
    return "pass" if good else "fail"


def compare(spec: RunSpec) -> Report:
    """Every enabled method on one instance, with deltas and cross-checks."""
    s = int(spec.s_list[0])
    inst = spec.instance(s)
    results, errors = {}, {}
    for m in spec.methods:
        try:
            results[m] = _run_method(m, inst, spec)
        except (ModelError, ConvergenceError, ArithmeticError) as exc:
            errors[m] = f"{type(exc).__name__}: {exc}"
    ref_name = next((m for m in ("pollaczek", "spitzer", "roots") if m in results), None)
    ref = results.get(ref_name)
    rows = []
    for m in spec.methods:
        if m in errors:
            rows.append({**dict.fromkeys(COMPARE_COLUMNS), "method": m, "status": "error"})
            continue
        r = results[m]
        err_sd = None
        if r.variance is not None and "variance" in r.err and r.variance > 0:
            err_sd = r.err["variance"] / (2.0 * math.sqrt(r.variance))
        rows.append({"method": m, "mean": r.mean, "sd": r.sd, "p0": r.p0,
                     "err_mean": r.err.get("mean"), "err_sd": err_sd, "err_p0": r.err.get("p0"),
                     "status": _verdict(m, r, ref if m != ref_name else None)})
    diag = {
        "instance": {"a": inst.a, "b": inst.b, "s": inst.s, "rho": inst.rho},
        "reference": ref_name,
        "pairwise": _pairwise(results),
        "errors": errors,
        "details": {m: r.as_dict() for m, r in results.items()},
    }
    failed = bool(errors) or any(r["status"] == "fail" for r in rows)
    return Report("compare", COMPARE_COLUMNS, rows, diag, failed=failed)


# -- roots -------------------------------------------------------------------


def roots(spec: RunSpec) -> Report:
    """Zeros inside the unit disk from both finders, with the series radius test."""
    inst = spec.instance(int(spec.s_list[0]))
    fp = find_roots_fixed_point(inst)
    bl = find_roots_bl(inst)
    q = bl.info["radius_factor"]
    rows = []
    for rs in (fp, bl):
        if len(rs) == 0:
            rows.append({"method": rs.method, "k": None, "re": None, "im": None, "residual": None,
                         "iterations": None, "status": rs.status, "radius_factor": q})
        for k, (z, res, it) in enumerate(zip(rs.roots, rs.residuals, rs.iterations), start=1):
            rows.append({"method": rs.method, "k": k, "re": float(z.real), "im": float(z.imag),
                         "residual": float(res), "iterations": int(it), "status": rs.status,
                         "radius_factor": q})
    diag = {"instance": {"a": inst.a, "b": inst.b, "s": inst.s, "rho": inst.rho},
            "bl": {k: v for k, v in bl.info.items()}}
    if fp.complete and bl.complete:
        diag["max_root_delta"] = float(np.max(np.abs(fp.roots - bl.roots))) if inst.s > 1 else 0.0
    if inst.s > 1:
        diag["zeros_inside_unit_disk"] = count_zeros(inst, 1.0 - 1e-9)
    return Report("roots", ROOTS_COLUMNS, rows, diag, failed=fp.status != "ok")


BUILDERS = {"table": table, "hedge": hedge, "compare": compare, "roots": roots}


def build(spec: RunSpec) -> Report:
    return BUILDERS[spec.command](spec)


# -- formatting --------------------------------------------------------------


def _fmt_csv(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _fmt_md(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return str(v)
        return str(Decimal(repr(float(v))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))
    return str(v)


def to_csv(rep: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rep.columns)
    for r in rep.rows:
        w.writerow([_fmt_csv(r[c]) for c in rep.columns])
    return buf.getvalue()


def to_markdown(rep: Report) -> str:
    lines = ["| " + " | ".join(rep.columns) + " |",
             "|" + "|".join("---:" for _ in rep.columns) + "|"]
    for r in rep.rows:
        lines.append("| " + " | ".join(_fmt_md(r[c]) for c in rep.columns) + " |")
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return x


def to_json(rep: Report, spec: RunSpec) -> str:
    doc = {"spec": _jsonable(asdict(spec)), "results": _jsonable(rep.rows),
           "diagnostics": _jsonable(rep.diagnostics)}
    return json.dumps(doc, indent=2) + "\n"


def render(rep: Report, spec: RunSpec) -> str:
    if spec.output == "csv":
        return to_csv(rep)
    if spec.output == "markdown":
        return to_markdown(rep)
    return to_json(rep, spec)


def parse_list(text: str, kind=float) -> tuple:
    try:
        return tuple(kind(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ModelError(f"cannot parse list {text!r}") from exc
