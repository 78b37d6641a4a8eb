"""Monte Carlo study: simulate, fuzzify, fit with every method, tabulate."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import kuma
from .bayes import McmcOptions, PriorPair, hpd_interval, mh_sample, posterior_mean, tierney_kadane_both
from .errors import FuzzyKumaError
from .fuzzy import FuzzyInformationSystem, default_fis, fuzzify
from .kuma import KumaParams
from .likelihood import LikelihoodForm
from .mle import DISTANT_START, FitOptions, asymptotic_ci, fit_em, fit_newton_raphson

__all__ = ["METHODS", "StudyConfig", "StudyRow", "StudyReport", "run_study", "coverage_and_width"]

METHODS = ("NR", "EM", "MCMC", "TK")


@dataclass(frozen=True)
class StudyConfig:
    true_params: KumaParams = KumaParams(2.0, 3.0)
    sample_sizes: tuple = (50, 75, 100, 150, 200)
    replications: int = 20000
    methods: tuple = METHODS
    level: float = 0.95
    seed: int = 0
    fis: FuzzyInformationSystem | None = field(default_factory=default_fis)
    priors: PriorPair = PriorPair()
    form: LikelihoodForm = LikelihoodForm.EXACT
    mcmc: McmcOptions = McmcOptions(chains=4, draws_per_chain=3000, burn_in=1000)
    init: KumaParams = DISTANT_START

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("sample sizes must be positive")
        object.__setattr__(self, "sample_sizes", sizes)
        methods = tuple(str(m).upper() for m in self.methods)
        unknown = set(methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in methods))
        object.__setattr__(self, "form", LikelihoodForm.parse(self.form))


@dataclass(frozen=True)
class StudyRow:
    method: str
    n: int
    bias_a: float
    bias_b: float
    mse_a: float
    mse_b: float
    coverage_a: float
    coverage_b: float
    mean_width_a: float
    mean_width_b: float
    failure_count: int


CSV_COLUMNS = tuple(f.name for f in fields(StudyRow))


@dataclass
class StudyReport:
    rows: list
    # (method, n) -> array of shape (k, 2) of successful estimates; kept for standard errors
    estimates: dict = field(default_factory=dict)
    truth: KumaParams = KumaParams(2.0, 3.0)

    def row(self, method: str, n: int) -> StudyRow:
        for r in self.rows:
            if r.method == method and r.n == n:
                return r
        raise KeyError((method, n))

    def mse_se(self, method: str, n: int) -> np.ndarray:
        """Monte Carlo standard error of the two MSE entries."""
        est = self.estimates[(method, n)]
        sq = (est - self.truth.as_array()) ** 2
        return sq.std(axis=0, ddof=1) / math.sqrt(len(sq)) if len(sq) > 1 else np.full(2, np.inf)

    def bias_se(self, method: str, n: int) -> np.ndarray:
        est = self.estimates[(method, n)]
        return est.std(axis=0, ddof=1) / math.sqrt(len(est)) if len(est) > 1 else np.full(2, np.inf)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_text(self) -> str:
        return _text_tables(self)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "nan" if not np.isfinite(v) else f"{v:.10g}"


def coverage_and_width(intervals, truth: float):
    """Fraction of intervals containing ``truth`` and their mean length."""
    intervals = list(intervals)
    if not intervals:
        raise ValueError("no intervals")
    hits = sum(1 for iv in intervals if iv.lower <= truth <= iv.upper)
    width = sum(iv.upper - iv.lower for iv in intervals)
    return hits / len(intervals), width / len(intervals)


def _seeds(cfg: StudyConfig, n: int, r: int):
    ss = np.random.SeedSequence([int(cfg.seed), int(n), int(r)])
    s_sample, s_fuzz, s_mcmc = ss.spawn(3)
    return s_sample, s_fuzz, int(s_mcmc.generate_state(1)[0])


def _replicate(job):
    """One replication: returns ``{method: (estimate(2,), intervals or None) | None}``."""
    cfg, n, r = job
    s_sample, s_fuzz, s_mcmc = _seeds(cfg, n, r)
    x = kuma.sample(n, cfg.true_params, s_sample)
    data = fuzzify(x, cfg.fis, s_fuzz)
    out = {}
    mle = None
    opts = FitOptions(init=cfg.init, form=cfg.form)
    for name, fitter in (("NR", fit_newton_raphson), ("EM", fit_em)):
        if name not in cfg.methods and not (name == "NR" and {"MCMC", "TK"} & set(cfg.methods)):
            continue
        try:
            res = fitter(data, opts)
            if not res.converged:
                raise FuzzyKumaError("no convergence")
            if mle is None:
                mle = res.params
            if name in cfg.methods:
                out[name] = (res.params.as_array(), asymptotic_ci(res, cfg.level))
        except (FuzzyKumaError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            if name in cfg.methods:
                out[name] = None
    if "TK" in cfg.methods:
        try:
            est = tierney_kadane_both(data, cfg.priors, cfg.form, init=mle)
            out["TK"] = (est.as_array(), None)
        except (FuzzyKumaError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            out["TK"] = None
    if "MCMC" in cfg.methods:
        try:
            m = cfg.mcmc
            mopts = McmcOptions(m.chains, m.draws_per_chain, m.burn_in, m.step_scale, s_mcmc)
            draws = mh_sample(data, cfg.priors, mopts, cfg.form, init=mle or KumaParams(1.0, 1.0))
            est = posterior_mean(draws)
            ivs = (hpd_interval(draws.pooled("a"), cfg.level), hpd_interval(draws.pooled("b"), cfg.level))
            out["MCMC"] = (est.as_array(), ivs)
        except (FuzzyKumaError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            out["MCMC"] = None
    return out


def _aggregate(cfg: StudyConfig, results) -> StudyReport:
    truth = cfg.true_params.as_array()
    rows, estimates = [], {}
    for n in cfg.sample_sizes:
        reps = results[n]
        for method in cfg.methods:
            ok = [rep[method] for rep in reps if rep.get(method) is not None]
            failures = len(reps) - len(ok)
            est = np.array([e for e, _ in ok]).reshape(-1, 2)
            estimates[(method, n)] = est
            if len(est):
                err = est - truth
                bias = err.mean(axis=0)
                mse = (err**2).mean(axis=0)
            else:
                bias = mse = np.full(2, np.nan)
            cov, wid = [np.nan, np.nan], [np.nan, np.nan]
            if ok and ok[0][1] is not None:
                for k in range(2):
                    cov[k], wid[k] = coverage_and_width([iv[k] for _, iv in ok], truth[k])
            rows.append(StudyRow(method, n, *bias, *mse, cov[0], cov[1], wid[0], wid[1], failures))
    return StudyReport(rows, estimates, cfg.true_params)


def run_study(cfg: StudyConfig, workers: int = 1, progress=None) -> StudyReport:
    """Run the study. Output does not depend on ``workers``: every replication
    owns seeds derived from ``(seed, n, r)`` and results are reduced in order."""
    jobs = [(cfg, n, r) for n in cfg.sample_sizes for r in range(cfg.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(jobs) // (8 * workers))
            outs = list(pool.map(_replicate, jobs, chunksize=chunk))
    else:
        outs = []
        for i, job in enumerate(jobs):
            outs.append(_replicate(job))
            if progress is not None:
                progress(i + 1, len(jobs))
    results = {n: [] for n in cfg.sample_sizes}
    for (_, n, _), o in zip(jobs, outs):
        results[n].append(o)
    return _aggregate(cfg, results)


def _cell(x, y, nd=4):
    if not (np.isfinite(x) and np.isfinite(y)):
        return "-"
    return f"{x:.{nd}f}({y:.{nd}f})"


def _text_tables(report: StudyReport) -> str:
    methods = {r.method for r in report.rows}
    sizes = sorted({r.n for r in report.rows})
    lines = []
    freq = [m for m in ("NR", "EM") if m in methods]
    if freq:
        lines.append("Table 1. ML estimates: bias (MSE) and 95% CI coverage (width)")
        hdr = f"{'n':>5}  {'method':<7}{'a: bias(MSE)':>20}{'b: bias(MSE)':>20}{'CI a: cov(width)':>22}{'CI b: cov(width)':>22}{'fail':>6}"
        lines += [hdr, "-" * len(hdr)]
        for n in sizes:
            for m in freq:
                r = report.row(m, n)
                lines.append(
                    f"{n:>5}  {m:<7}{_cell(r.bias_a, r.mse_a, 3):>20}{_cell(r.bias_b, r.mse_b, 3):>20}"
                    f"{_cell(r.coverage_a, r.mean_width_a):>22}{_cell(r.coverage_b, r.mean_width_b):>22}{r.failure_count:>6}"
                )
        lines.append("")
    if methods & {"MCMC", "TK"}:
        lines.append("Table 2. Bayes estimates: bias (MSE) under MCMC and TK, HPD coverage (width)")
        hdr = (f"{'n':>5}  {'MCMC a':>16}{'MCMC b':>16}{'TK a':>16}{'TK b':>16}"
               f"{'HPD a: cov(width)':>22}{'HPD b: cov(width)':>22}")
        lines += [hdr, "-" * len(hdr)]
        for n in sizes:
            mc = report.row("MCMC", n) if "MCMC" in methods else None
            tk = report.row("TK", n) if "TK" in methods else None
            na = float("nan")
            lines.append(
                f"{n:>5}  "
                f"{_cell(mc.bias_a if mc else na, mc.mse_a if mc else na, 3):>16}"
                f"{_cell(mc.bias_b if mc else na, mc.mse_b if mc else na, 3):>16}"
                f"{_cell(tk.bias_a if tk else na, tk.mse_a if tk else na, 3):>16}"
                f"{_cell(tk.bias_b if tk else na, tk.mse_b if tk else na, 3):>16}"
                f"{_cell(mc.coverage_a if mc else na, mc.mean_width_a if mc else na):>22}"
                f"{_cell(mc.coverage_b if mc else na, mc.mean_width_b if mc else na):>22}"
            )
    return "\n".join(lines) + "\n"
