"""excursionlab command line.

Exit codes: 0 success or pass, 1 acceptance-threshold failure or violated
condition, 2 bad flags or config, 3 numeric failure, 4 inconclusive check.
"""
import argparse
import csv
import io
import json
import os
import sys

from . import reports
from .errors import (AssumptionCheckFailed, HermiteRangeError, NumericAccuracyError,
                     PreconditionError, ResolutionError, ExcursionLabError)
from .fieldgen import GridSpec
from .hermite_core import hermite_coefficient, hermite_rank
from .models import CovarianceModel, SpectralDensity, Subordinator

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
_VERDICT_EXIT = {"satisfied": EXIT_OK, "violated": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="stdout format")
    p.add_argument("--plot", action="store_true", help="write SVG histogram and QQ plot")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="excursionlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    h = sub.add_parser("hermite", parents=[common], help="Hermite coefficient or rank of 1{f >= u}")
    h.add_argument("--f", required=True,
                   help='subordinator kind, or JSON such as {"kind": "cubic", "params": {"beta": 1}}')
    h.add_argument("--u", type=float, required=True)
    h.add_argument("--sigma", type=float, default=1.0)
    g = h.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--rank", action="store_true")

    for name, text in [("sigma", "normalizing variance sigma_{n,m}^2 per window"),
                       ("check", "dependence condition verdict"),
                       ("experiment", "limit-theorem Monte Carlo experiment"),
                       ("fgn", "fractional Gaussian noise window-scaling experiment"),
                       ("rosenblatt", "draws from the Hermite-type oracle law"),
                       ("volatility", "random-volatility excursion experiment")]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


# ---- output helpers --------------------------------------------------------------

def _dump_json(obj):
    return json.dumps(reports.jsonable(obj), sort_keys=True)


def _csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(args, obj, rows=None):
    if args.format == "csv" and rows is not None:
        sys.stdout.write(_csv(rows))
    else:
        print(_dump_json(obj))


def _need_config(args, schema):
    if not args.config:
        raise _UsageError("--config is required for this subcommand")
    return reports.load_config(args.config, schema)


def _parse_f(text):
    text = text.strip()
    if text.startswith("{"):
        try:
            return Subordinator.from_dict(json.loads(text))
        except (json.JSONDecodeError, KeyError) as exc:
            raise _UsageError(f"bad --f JSON: {exc}") from None
    return Subordinator(text)


def _seed(args, cfg):
    return args.seed if args.seed is not None else int(cfg.get("seed", 0))


def _finish_run(args, cfg, seed, report, stem):
    """Write report JSON, replicate CSV, optional plot and the manifest under --out."""
    if not args.out:
        return {}
    out = reports.ensure_dir(args.out)
    manifest = reports.RunManifest.start(cfg, seed)
    paths = {"json": reports.write_text(os.path.join(out, f"{stem}.json"), report.to_json()),
             "csv": report.write_csv(os.path.join(out, f"{stem}.csv"))}
    if args.plot:
        vals = report.standardized[:, -1]
        paths["svg"] = reports.plot_standardized(vals, os.path.join(out, f"{stem}.svg"), stem)
    paths["manifest"] = os.path.join(out, f"{stem}.manifest.json")
    manifest.finish(paths).write(paths["manifest"])
    return paths


# ---- subcommands -------------------------------------------------------------------

def cmd_hermite(args):
    if args.k is not None and args.k < 0:
        raise _UsageError("--k must be a nonnegative integer")
    if not args.sigma > 0:
        raise _UsageError("--sigma must be positive")
    try:
        f = _parse_f(args.f)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    if args.rank:
        out = {"rank": hermite_rank(f, args.u, args.sigma)}
    else:
        try:
            out = {"a_k": hermite_coefficient(f, args.u, args.sigma, args.k)}
        except HermiteRangeError as exc:
            raise _UsageError(str(exc)) from None
    _emit(args, out, [list(out.keys()), list(out.values())])
    return EXIT_OK


def cmd_sigma(args):
    from .normalizer import plan
    cfg = _need_config(args, reports.SIGMA_SCHEMA)
    model = CovarianceModel.from_dict(cfg["model"])
    m = int(cfg.get("m", 1))
    method = cfg.get("method", "quadrature")
    rows = [("window_index", "sigma2")]
    res = []
    for j, w in enumerate(cfg["windows"]):
        grid = GridSpec(w["extents"], w.get("mesh"))
        p = plan(model, grid.effective_extents, m, method)
        res.append({"window_index": j, "extents": list(grid.effective_extents),
                    "sigma2": p.value, "m": m, "method": method})
        rows.append((j, float(p.value)))
    _emit(args, {"results": res}, rows)
    return EXIT_OK


def cmd_check(args):
    from . import lrd_conditions as lc
    cfg = _need_config(args, reports.CHECK_SCHEMA)
    model = CovarianceModel.from_dict(cfg["model"])
    probes = cfg.get("probes")
    cond = cfg["condition"]
    if cond == "delta_ratio":
        rep = lc.delta_ratio(model, probes)
    elif cond == "condcor2":
        seq = None if probes is None else [[p] * model.d for p in probes]
        rep = lc.check_condcor2(model, seq, cfg.get("delta", 0.5))
    elif cond == "spatiotemporal":
        rep = lc.check_spatiotemporal(model, probes, cfg.get("delta", 0.25))
    else:
        rep = lc.lrd_report(model, probes)
    _emit(args, rep.to_dict(), rep.csv_rows())
    if args.out:
        reports.ensure_dir(args.out)
        reports.write_text(os.path.join(args.out, "check.json"), _dump_json(rep.to_dict()))
    return _VERDICT_EXIT[rep.verdict]


def cmd_experiment(args):
    from .limit_lab import ExperimentConfig, run_clt_experiment, run_rank_m_experiment
    cfg = _need_config(args, reports.EXPERIMENT_SCHEMA)
    seed = _seed(args, cfg)
    cfg = dict(cfg, seed=seed)
    try:
        config = ExperimentConfig.from_dict(cfg, threads=args.threads)
    except (ValueError, KeyError) as exc:
        raise reports.ConfigError([str(exc)]) from None
    if config.rank == 1:
        rep = run_clt_experiment(config)
        ks = rep.largest.ks_distance
        line = f"clt: KS={ks:.4f} (1% critical {rep.extra['ks_critical_1pct']:.4f}), slope={rep.slope:.4f}"
    else:
        rep = run_rank_m_experiment(config)
        rep.extra.pop("_oracle_draws", None)
        line = (f"rank-{config.rank}: oracle KS={rep.extra['oracle_ks_distance']:.4f}, "
                f"Gaussian KS={rep.extra['gaussian_ks_distance']:.4f}, "
                f"skewness={rep.largest.skewness:.3f}")
    _finish_run(args, cfg, seed, rep, "experiment")
    if args.format == "csv":
        sys.stdout.write(rep.csv_text())
    print(("PASS " if rep.passed else "FAIL ") + line, file=sys.stderr if args.format == "csv" else sys.stdout)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_fgn(args):
    from .limit_lab import run_fgn_experiment
    from .limit_lab.experiments import FGN_MAX_NODES
    cfg = _need_config(args, reports.FGN_SCHEMA)
    seed = _seed(args, cfg)
    rep = run_fgn_experiment(cfg["H"], cfg.get("gamma", "auto"), cfg.get("level", 0.0),
                             cfg["replicates"], seed, cfg["ladder"], cfg.get("max_nodes", FGN_MAX_NODES),
                             threads=args.threads)
    _finish_run(args, dict(cfg, seed=seed), seed, rep, "fgn")
    if args.format == "csv":
        sys.stdout.write(rep.csv_text())
    else:
        print(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_rosenblatt(args):
    from .limit_lab import HermiteOracle, moments
    cfg = _need_config(args, reports.ROSENBLATT_SCHEMA)
    seed = _seed(args, cfg)
    density = SpectralDensity.from_dict(cfg["density"])
    kw = {k: cfg[k] for k in ("per_decade", "y_min", "y_max") if k in cfg}
    oracle = HermiteOracle(cfg["m"], density, cfg.get("window", "box"), **kw)
    draws = oracle.sample(int(cfg.get("draws", 10000)), seed=seed)
    summary = {"m": cfg["m"], "density": density.to_dict(), "c_discrete": oracle.c,
               "y_max": oracle.grid.y_max, "resolution_discrepancy": oracle.discrepancy,
               "moments": moments(draws), "draws": len(draws)}
    rows = [("draw", "value")] + [(i, float(v)) for i, v in enumerate(draws)]
    if args.out:
        out = reports.ensure_dir(args.out)
        manifest = reports.RunManifest.start(dict(cfg, seed=seed), seed)
        paths = {"json": reports.write_text(os.path.join(out, "rosenblatt.json"), _dump_json(summary)),
                 "csv": reports.write_text(os.path.join(out, "rosenblatt.csv"), _csv(rows))}
        if args.plot:
            z = (draws - draws.mean()) / draws.std()
            paths["svg"] = reports.plot_standardized(z, os.path.join(out, "rosenblatt.svg"), "oracle")
        paths["manifest"] = os.path.join(out, "rosenblatt.manifest.json")
        manifest.finish(paths).write(paths["manifest"])
    _emit(args, summary, rows)
    return EXIT_OK


def cmd_volatility(args):
    from .limit_lab import run_random_volatility_experiment
    cfg = _need_config(args, reports.VOLATILITY_SCHEMA)
    seed = _seed(args, cfg)
    xi = cfg.get("xi", {"kind": "levy_sqrt", "u": abs(cfg["level"]) or 1.0})
    if xi["kind"] == "constant" and "c" not in xi or xi["kind"] == "levy_sqrt" and "u" not in xi:
        raise reports.ConfigError([f"xi: missing parameter for {xi['kind']}"])
    rep = run_random_volatility_experiment(CovarianceModel.from_dict(cfg["model"]), cfg["level"],
                                           cfg["replicates"], cfg["window"], seed, xi, args.threads)
    _finish_run(args, dict(cfg, seed=seed), seed, rep, "volatility")
    if args.format == "csv":
        sys.stdout.write(rep.csv_text())
    else:
        print(rep.to_json())
    return EXIT_OK if rep.passed in (True, None) else EXIT_FAIL


COMMANDS = {"hermite": cmd_hermite, "sigma": cmd_sigma, "check": cmd_check,
            "experiment": cmd_experiment, "fgn": cmd_fgn, "rosenblatt": cmd_rosenblatt,
            "volatility": cmd_volatility}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise _UsageError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except reports.ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssumptionCheckFailed as exc:
        print(f"assumption check failed: {exc}; ratios={list(map(float, exc.ratios))}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericAccuracyError, ResolutionError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ExcursionLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
