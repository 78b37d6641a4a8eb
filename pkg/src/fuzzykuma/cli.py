"""Command-line interface.

    fuzzykuma fit-mle   --input data.csv [--method nr|em] [--form exact|paper] [--level 0.95]
    fuzzykuma fit-bayes --input data.csv [--estimator tk|mcmc|both] [--chains 20] [--burn-in 1000]
    fuzzykuma simulate  [--sizes 50,75,100,150,200] [--replications N] [--workers K]
    fuzzykuma fuzzify   --input crisp.csv [--output fuzzy.csv] [--seed S]

Exit status: 0 success, 1 input error, 2 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bayes import GammaPrior, McmcOptions, PriorPair, hpd_interval, mh_sample, posterior_mean, tierney_kadane_both
from .errors import DataFormatError, DegenerateObservationError, FitError, QuadratureError
from .fuzzy import default_fis, fuzzify
from .io import read_crisp_csv, read_fis, read_fuzzy_data, write_fuzzy_data
from .kuma import KumaParams
from .likelihood import LikelihoodForm
from .mle import FitOptions, asymptotic_ci, fit_em, fit_newton_raphson
from .sim import METHODS, StudyConfig, run_study

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _pair(text: str, what: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be two comma-separated numbers, got {text!r}") from None
    return x, y


def _prior(text):
    shape, rate = _pair(text, "prior")
    try:
        return GammaPrior(shape, rate)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _params(text):
    a, b = _pair(text, "parameters")
    try:
        return KumaParams(a, b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return vals


def _level(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _emit(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_sample(path):
    if not path:
        raise InputError("--input is required")
    return read_fuzzy_data(path)


def cmd_fit_mle(args) -> int:
    sample = _load_sample(args.input)
    form = LikelihoodForm.parse(args.form)
    fitter = {"nr": fit_newton_raphson, "em": fit_em}[args.method]
    opts = FitOptions(init=args.init, eps=args.eps, max_iter=args.max_iter, form=form)
    res = fitter(sample, opts)
    out = {
        "method": args.method,
        "form": form.value,
        "n": len(sample),
        "a_hat": res.params.a,
        "b_hat": res.params.b,
        "loglik": res.loglik,
        "converged": res.converged,
        "iterations": res.iterations,
        "level": args.level,
        "ci_a": None,
        "ci_b": None,
        "trace": [[p.a, p.b] for p in res.trace],
    }
    if res.converged:
        try:
            ci_a, ci_b = asymptotic_ci(res, args.level)
            out["ci_a"] = [ci_a.lower, ci_a.upper]
            out["ci_b"] = [ci_b.lower, ci_b.upper]
        except FitError as exc:
            out["ci_error"] = str(exc)
    _emit(_dump(out), args.output)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_fit_bayes(args) -> int:
    sample = _load_sample(args.input)
    form = LikelihoodForm.parse(args.form)
    priors = PriorPair(args.prior_a, args.prior_b)
    mle = fit_newton_raphson(sample, FitOptions(form=form))
    init = mle.params if mle.converged else None
    out = {
        "form": form.value,
        "n": len(sample),
        "estimator": args.estimator,
        "level": args.level,
        "priors": {
            "a": {"shape": priors.prior_a.shape, "rate": priors.prior_a.rate},
            "b": {"shape": priors.prior_b.shape, "rate": priors.prior_b.rate},
        },
        "metadata": {
            "chains": args.chains,
            "burn_in": args.burn_in,
            "draws_per_chain": args.draws,
            "seed": args.seed,
            "step_scale": args.step_scale,
        },
    }
    if args.estimator in ("tk", "both"):
        tk = tierney_kadane_both(sample, priors, form, init=init)
        out["tk"] = {"a": tk.a, "b": tk.b}
    if args.estimator in ("mcmc", "both"):
        opts = McmcOptions(args.chains, args.draws, args.burn_in, args.step_scale, args.seed)
        draws = mh_sample(sample, priors, opts, form, init=init)
        mean = posterior_mean(draws)
        ha = hpd_interval(draws.pooled("a"), args.level)
        hb = hpd_interval(draws.pooled("b"), args.level)
        out["mcmc"] = {
            "a": mean.a,
            "b": mean.b,
            "hpd_a": [ha.lower, ha.upper],
            "hpd_b": [hb.lower, hb.upper],
            "acceptance_rate": draws.acceptance_rate,
            "low_acceptance_warning": draws.low_acceptance,
            "diagnostics": draws.diagnostics(),
        }
    _emit(_dump(out), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    fis = None if args.crisp else (read_fis(args.fis) if args.fis else default_fis())
    cfg = StudyConfig(
        true_params=args.truth,
        sample_sizes=tuple(args.sizes),
        replications=args.replications,
        methods=tuple(m.upper() for m in args.methods.split(",")),
        level=args.level,
        seed=args.seed,
        fis=fis,
        priors=PriorPair(args.prior_a, args.prior_b),
        form=LikelihoodForm.parse(args.form),
        mcmc=McmcOptions(args.chains, args.draws, args.burn_in, args.step_scale, 0),
    )
    report = run_study(cfg, workers=args.workers)
    _emit(report.to_csv(), args.output)
    if args.table:
        Path(args.table).write_text(report.to_text())
    elif args.output:
        sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_fuzzify(args) -> int:
    if not args.input:
        raise InputError("--input is required")
    x = read_crisp_csv(args.input)
    fis = read_fis(args.fis) if args.fis else default_fis()
    sample = fuzzify(x, fis, args.seed)
    _emit(write_fuzzy_data(sample, fmt=args.format), args.output)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit status 2 is reserved for non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzykuma", description="Kumaraswamy estimation from fuzzy data")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("--input", required=True, help="fuzzy data file (CSV or JSON)")
        p.add_argument("--output", help="write here instead of standard output")
        p.add_argument("--form", choices=["exact", "paper"], default="exact")
        p.add_argument("--level", type=_level, default=0.95)

    def bayes_flags(p, chains, draws):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--chains", type=_positive_int, default=chains)
        p.add_argument("--draws", type=_positive_int, default=draws, help="draws per chain, burn-in included")
        p.add_argument("--burn-in", type=int, default=1000)
        p.add_argument("--step-scale", type=float, default=0.1)
        p.add_argument("--prior-a", type=_prior, default=GammaPrior(2.1, 1.7), metavar="SHAPE,RATE")
        p.add_argument("--prior-b", type=_prior, default=GammaPrior(1.3, 0.89), metavar="SHAPE,RATE")

    p = sub.add_parser("fit-mle", help="maximum-likelihood estimates and Wald intervals")
    common(p)
    p.add_argument("--method", choices=["nr", "em"], default="nr")
    p.add_argument("--init", type=_params, default=KumaParams(1.0, 1.0), metavar="A,B")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.set_defaults(func=cmd_fit_mle)

    p = sub.add_parser("fit-bayes", help="posterior means (TK and/or MCMC) and HPD intervals")
    common(p)
    p.add_argument("--estimator", choices=["tk", "mcmc", "both"], default="both")
    bayes_flags(p, chains=20, draws=3000)
    p.set_defaults(func=cmd_fit_bayes)

    p = sub.add_parser("simulate", help="Monte Carlo study; CSV report plus text tables")
    common(p, with_input=False)
    p.add_argument("--sizes", type=_int_list, default=[50, 75, 100, 150, 200])
    p.add_argument("--replications", type=_positive_int, default=2000)
    p.add_argument("--methods", default=",".join(m.lower() for m in METHODS))
    p.add_argument("--truth", type=_params, default=KumaParams(2.0, 3.0), metavar="A,B")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--table", help="write the text tables here")
    p.add_argument("--crisp", action="store_true", help="skip fuzzification (point observations)")
    p.add_argument("--fis", help="events of a custom fuzzy information system (fuzzy data format)")
    bayes_flags(p, chains=4, draws=3000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuzzify", help="encode crisp values as events of a fuzzy information system")
    p.add_argument("--input", required=True, help="single-column CSV of values in (0, 1)")
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--fis", help="events of a custom fuzzy information system (fuzzy data format)")
    p.set_defaults(func=cmd_fuzzify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        if args.command == "simulate":
            args.methods = ",".join(m.strip() for m in args.methods.split(","))
            unknown = {m.upper() for m in args.methods.split(",")} - set(METHODS)
            if unknown:
                raise InputError(f"unknown methods: {', '.join(sorted(unknown))}")
        return args.func(args)
    except (InputError, DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, DegenerateObservationError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
