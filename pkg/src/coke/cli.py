"""Command-line entry point: ``coke {simulate,fit,predict,diagnose}``.

Exit codes: 0 ok, 2 input error, 3 data degeneracy (empty treatment arm),
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import acw_cate, benchmark_grid, dr_cate, sr_pseudo_label
from .diagnostics import density_ratio_diag, effective_sample_size, efficient_score, fit_glr_nuisances, pearson, spearman
from .errors import EmptyArm, InvalidInput, NumericalFailure
from .io import ConfigError, load_model, parse_config, read_labeled, read_unlabeled, save_model, write_csv
from .kernel import KernelSpec
from .methods import BASE_METHODS
from .pipeline import CokeConfig, run_crossfit_detailed, run_detailed
from .simulation import KNOBS, SimConfig, sweep, write_results

EXIT_OK, EXIT_INPUT, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

CONFIG_KEYS = {
    "seed", "method", "crossfit", "clip",
    "kernel.family", "kernel.rho", "kernel.amplitude",
    "grid.mode", "grid.values", "grid.q", "lambda.nuisance", "lambda.imputation",
    "sim.n", "sim.n_t", "sim.p", "sim.q", "sim.s_b", "sim.s_r", "sim.c", "sim.noise_sd",
    "sim.n_eval", "sim.reps",
    "sweep.knob", "sweep.values", "sweep.methods", "sweep.couple_sizes", "sweep.timing",
}


class Settings:
    """Typed access to a parsed config, reporting bad values with their line number."""

    def __init__(self, text: str = ""):
        self.values = parse_config(text, CONFIG_KEYS)
        self.lines = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            key = raw.split("#", 1)[0].partition("=")[0].strip()
            if key in self.values:
                self.lines[key] = ln

    def _convert(self, key, default, conv, what):
        if key not in self.values:
            return default
        try:
            return conv(self.values[key])
        except ValueError:
            raise ConfigError([(self.lines[key], f"{key}: expected {what}, got {self.values[key]!r}")]) from None

    def float(self, key, default=None):
        return self._convert(key, default, float, "a number")

    def int(self, key, default=None):
        return self._convert(key, default, int, "an integer")

    def str(self, key, default=None):
        return self.values.get(key, default)

    def bool(self, key, default=False):
        def conv(v):
            if v.lower() in ("true", "yes", "1"):
                return True
            if v.lower() in ("false", "no", "0"):
                return False
            raise ValueError(v)
        return self._convert(key, default, conv, "true/false")

    def floats(self, key, default=None):
        return self._convert(key, default, lambda v: [float(x) for x in v.split(",") if x.strip()],
                             "comma-separated numbers")

    def strs(self, key, default=None):
        if key not in self.values:
            return default
        return [x.strip() for x in self.values[key].split(",") if x.strip()]

    def kernel(self) -> KernelSpec:
        try:
            return KernelSpec(self.str("kernel.family", "matern_exp"), self.float("kernel.rho", 5.0),
                              self.float("kernel.amplitude"))
        except InvalidInput as exc:
            raise ConfigError([(self.lines.get("kernel.family", 0), str(exc))]) from None

    def coke(self, seed: int) -> CokeConfig:
        values = self.floats("grid.values")
        mode = self.str("grid.mode", "explicit" if values else "theory")
        try:
            return CokeConfig(grid_mode=mode, grid=tuple(values) if values else None, q=self.int("grid.q"),
                              lam_nuisance=self.float("lambda.nuisance"),
                              lam_imputation=self.float("lambda.imputation"),
                              split_seed=seed, crossfit=self.bool("crossfit"))
        except InvalidInput as exc:
            raise ConfigError([(self.lines.get("grid.mode", self.lines.get("grid.values", 0)), str(exc))]) from None


def _load_settings(path) -> Settings:
    if path is None:
        return Settings()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read config: {exc}") from None
    return Settings(text)


def _seed(args, settings: Settings) -> int:
    return args.seed if args.seed is not None else settings.int("seed", 0)


def cmd_simulate(args) -> int:
    st = _load_settings(args.config)
    seed = _seed(args, st)
    base = SimConfig(
        n=st.int("sim.n", 1000), n_T=st.int("sim.n_t", 250), p=st.int("sim.p", 4), q=st.int("sim.q", 1),
        S_B=st.float("sim.s_b", 10.0), S_R=st.float("sim.s_r", 2.0), c=st.float("sim.c", 1.0),
        noise_sd=st.float("sim.noise_sd", 0.5), seed=seed, reps=st.int("sim.reps", 1),
        n_eval=st.int("sim.n_eval", 10_000),
    )
    knob = st.str("sweep.knob", "S_B")
    if knob not in KNOBS:
        raise ConfigError([(st.lines.get("sweep.knob", 0), f"sweep.knob must be one of {KNOBS}")])
    default_value = {"S_B": base.S_B, "S_B_q2": base.S_B, "S_R": base.S_R, "c": base.c, "n": base.n}[knob]
    values = st.floats("sweep.values", [default_value])
    methods = [args.method] if args.method else st.strs("sweep.methods", ["coke-cf", "coke", "sr", "dr-cf", "acw-cf"])
    rows = sweep(base, knob, values, methods, spec=st.kernel(),
                 couple_sizes=st.bool("sweep.couple_sizes", False), timing=st.bool("sweep.timing", True),
                 threads=args.threads)
    write_results(rows, args.out)
    failed = [r["status"] for r in rows if r["status"] != "ok"]
    if not failed:
        return EXIT_OK
    return EXIT_DATA if all(s == "failed:EmptyArm" for s in failed) else EXIT_NUMERIC


def _fit_model(method: str, spec, D, D_T, st: Settings, seed: int):
    cfg = st.coke(seed)
    report = {"method": method, "n": len(D), "n_target": len(D_T), "seed": seed}
    base, _, suffix = method.partition("-")
    crossfit = cfg.crossfit or suffix == "cf"
    if base not in BASE_METHODS or suffix not in ("", "cf"):
        raise InvalidInput(f"unknown method {method!r}")
    if base == "coke":
        if crossfit:
            model, *legs = run_crossfit_detailed(spec, D, D_T, cfg)
        else:
            legs = [run_detailed(spec, D, D_T, cfg)]
            model = legs[0].model
        report["grid"] = legs[0].grid
        report["legs"] = [
            {"split_sizes": [len(leg.split[0]), len(leg.split[1])],
             "chosen_index": leg.report.chosen_index,
             "lambda_chosen": [leg.report.lambda_chosen.lam00, leg.report.lambda_chosen.lam01,
                               leg.report.lambda_chosen.lam1],
             "losses": leg.report.losses.tolist()}
            for leg in legs
        ]
        return model, report
    grid = cfg.lambda_grid(spec, len(D)) if (st.str("grid.mode") or st.str("grid.values")) else benchmark_grid(len(D))
    report["grid"] = grid
    clip = st.float("clip", 1e-3)
    if base == "sr":
        lam_t = st.float("lambda.imputation", 1.0 / (5 * len(D)))
        model = sr_pseudo_label(spec, D, D_T, grid, lam_t, seed=seed, crossfit=crossfit)
    elif base == "dr":
        model = dr_cate(spec, D, grid, seed=seed, crossfit=crossfit, clip=clip)
    else:
        model = acw_cate(spec, D, D_T, grid, seed=seed, crossfit=crossfit, clip=clip)
    return model, report


def cmd_fit(args) -> int:
    st = _load_settings(args.config)
    seed = _seed(args, st)
    D = read_labeled(args.source)
    D_T = read_unlabeled(args.target)
    if D.p != D_T.p:
        raise InvalidInput(f"source has {D.p} covariates, target has {D_T.p}")
    method = args.method or st.str("method", "coke")
    model, report = _fit_model(method, st.kernel(), D, D_T, st, seed)
    save_model(args.out, model, method=method, meta={"seed": seed, "n": len(D), "n_target": len(D_T)})
    report_path = args.report or f"{args.out}.report.json"
    Path(report_path).write_text(json.dumps(report, indent=1) + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _ = load_model(args.model)
    Z = read_unlabeled(args.covariates).Z
    write_csv(args.out, ["cate"], ([float(v)] for v in model.predict(Z)))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    st = _load_settings(args.config)
    Z_S = read_unlabeled(args.source).Z
    Z_T = read_unlabeled(args.target).Z
    if Z_S.shape[1] != Z_T.shape[1]:
        raise InvalidInput(f"source has {Z_S.shape[1]} covariates, target has {Z_T.shape[1]}")
    labeled = read_labeled(args.labeled) if args.labeled else None
    if args.model and labeled is None:
        raise InvalidInput("correlations need --labeled target data with a and y columns")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ratio, log_s, log_t = density_ratio_diag(Z_S, Z_T)
    write_csv(out / "log_ratios.csv", ["sample", "log10_ratio"],
              [("source", float(v)) for v in log_s] + [("target", float(v)) for v in log_t])
    summary = [
        ("n_source", len(Z_S)), ("n_target", len(Z_T)),
        ("ess_source", effective_sample_size(ratio.ratio(Z_S))),
        ("source_mean_log10_ratio", float(np.mean(log_s))), ("source_sd_log10_ratio", float(np.std(log_s, ddof=1))),
        ("target_mean_log10_ratio", float(np.mean(log_t))), ("target_sd_log10_ratio", float(np.std(log_t, ddof=1))),
    ]
    write_csv(out / "summary.csv", ["statistic", "value"], summary)

    if labeled is not None:
        if labeled.p != Z_S.shape[1]:
            raise InvalidInput("labeled target covariate count differs from source")
        pi, f0, f1 = fit_glr_nuisances(labeled)
        scores = efficient_score(labeled, pi, f0, f1, clip=st.float("clip", 1e-3))
        write_csv(out / "scores.csv", ["score"], ([float(s)] for s in scores))
        table = []
        for path in args.model or []:
            model, info = load_model(path)
            pred = model.predict(labeled.Z)
            table.append((info.get("method", Path(path).stem), len(scores),
                          spearman(scores, pred), pearson(scores, pred)))
        if table:
            write_csv(out / "correlations.csv", ["method", "n", "spearman", "pearson"], table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coke", description="Transfer learning of treatment effects under covariate shift.")
    parser.add_argument("--version", action="version", version=f"coke {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", metavar="PATH")
            p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True, metavar="PATH")
        p.add_argument("--threads", type=int, default=1, metavar="N")

    p = sub.add_parser("simulate", help="run a simulation sweep and write a results CSV")
    common(p)
    p.add_argument("--method", help="run only this method")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a CATE model on source data for a target population")
    p.add_argument("source")
    p.add_argument("target")
    common(p)
    p.add_argument("--method", help="coke, sr, dr or acw (suffix -cf for cross-fitting)")
    p.add_argument("--report", metavar="PATH", help="report path (default: <out>.report.json)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a model file to covariates")
    p.add_argument("model")
    p.add_argument("covariates")
    common(p, config=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("diagnose", help="overlap diagnostics and score-based validation")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--labeled", metavar="PATH", help="target CSV with a and y for score validation")
    p.add_argument("--model", action="append", metavar="PATH", help="model file to validate (repeatable)")
    common(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for ln, msg in exc.problems:
            print(f"config error: line {ln}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except EmptyArm as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
