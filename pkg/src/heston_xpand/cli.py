"""``heston-xpand`` command line.

Exit codes: 0 success, 1 failed check or numerical failure, 2 usage or validation
error, 3 a formula's precondition does not hold (zero-correlation formula with
``rho != 0``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import approximators as approx
from . import bench, oracles, terms
from .blackscholes import BsState, DerivOrder, bs_vega, gamma_bs, lambda_gamma_bs
from .model import OptionSpec, QuadratureNonConvergence, RhoNotZero, load_params
from .montecarlo import McConfig, hull_white_mc, mc_price
from .reference import price_reference, put_reference

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2, 3
THREADS_ENV = "HESTON_XPAND_THREADS"

CheckResult = tuple[str, bool, str]


class UsageError(Exception):
    pass


def resolve_threads(flag: int | None) -> int:
    """``--threads`` if given, else ``$HESTON_XPAND_THREADS``, else 1."""
    if flag is not None:
        threads = flag
    else:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise UsageError(f"threads: {THREADS_ENV}={raw!r} is not an integer") from None
    if threads < 1:
        raise UsageError(f"threads: must be >= 1, got {threads}")
    return threads


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.17g}"


# price ----------------------------------------------------------------------------------------


def cmd_price(args) -> int:
    p = load_params(args.params)
    spec = OptionSpec(args.strike, args.maturity, args.t)
    if args.method == "ref":
        res = price_reference(p, spec)
        if args.put:
            start = time.perf_counter()
            price = put_reference(p, spec)
            res = type(res)(price, res.method, None, time.perf_counter() - start)
    else:
        res = approx.PRICERS[approx.ApproxOrder(args.method)](p, spec)
        if args.put:
            # parity on the approximate call
            res = type(res)(res.price - p.s0 + spec.strike * math.exp(-p.r * spec.tau), res.method,
                            res.error_indicator, res.elapsed)
    if args.header:
        print("method,price,error_indicator,elapsed_s")
    print(f"{args.method},{_fmt(res.price)},{_fmt(res.error_indicator)},{res.elapsed:.6g}")
    return EXIT_OK


# sweep ----------------------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    threads = resolve_threads(args.threads)
    out_dir = Path(args.output_dir)
    if args.figure is not None:
        if any(v is not None for v in (args.params, args.strikes, args.maturities, args.methods)):
            raise UsageError("--figure cannot be combined with explicit grid flags")
        spec = bench.SweepSpec.figure(args.figure)
        name = f"fig{args.figure}.csv"
    else:
        if args.params is None or args.strikes is None or args.maturities is None:
            raise UsageError("give --figure N, or --params with --strikes and --maturities")
        methods = args.methods.split(",") if args.methods else ["o2", "o3", "o4"]
        spec = bench.SweepSpec(_floats(args.strikes), _floats(args.maturities), load_params(args.params), methods)
        name = "sweep.csv"
    report = bench.run_sweep(spec, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = report.write_csv(out_dir / name)
    print(f"wrote {path} ({len(report.cells)} rows)")
    for method in spec.methods:
        grid = report.error_grid(method)
        worst = np.nanmax(grid) if np.isfinite(grid).any() else float("nan")
        print(f"{method}: max log10 rel err {worst:.3f}")
    for cell in report.failures[:1]:
        print(f"failed cells for {cell.method}: {cell.failure}", file=sys.stderr)
    return EXIT_OK


# bench ----------------------------------------------------------------------------------------


def cmd_bench(args) -> int:
    threads = resolve_threads(args.threads)
    task = bench.TimingTask.from_number(args.task, args.seed)
    methods = args.methods.split(",") if args.methods else ["ref", "o2", "o3", "o4"]
    unknown = set(methods) - set(bench.METHOD_NAMES) - {"zc"}
    if unknown or "zc" in methods:
        raise UsageError(f"methods: choose from ref,o2,o3,o4, got {args.methods}")
    table = bench.run_timing(task, methods, repeats=args.repeats, threads=threads)
    print(f"params_hash={table.params_hash}")
    print(",".join(bench.TIMING_FIELDS))
    for r in table.rows:
        print(f"{r.task},{r.method},{r.seconds:.6g},{r.speedup:.4g}")
    if args.output_dir:
        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        table.write_csv(out_dir / f"bench_{task.task_id}.csv")
    return EXIT_OK


# check ----------------------------------------------------------------------------------------


def check_terms(n_sets: int = 100, seed: int = 11, tol: float = 1e-10) -> list[CheckResult]:
    cases = oracles.sample_term_params(n_sets, seed)
    worst = {name: 0.0 for name in oracles.ORACLE_TERMS}
    bound_ok = True
    for p, tau in cases:
        for name in oracles.ORACLE_TERMS:
            ref = oracles.oracle_term(name, p.kappa, p.theta, p.nu, p.v0, tau)
            val = terms.evaluate(name, p.kappa, p.theta, p.nu, p.v0, tau)
            worst[name] = max(worst[name], abs(val - ref) / abs(ref))
        total, lower_a, lower_b = oracles.integrated_variance_bounds(p, tau)
        bound_ok &= total >= lower_a * (1 - 1e-12) and total >= lower_b * (1 - 1e-12)
    out = [(f"terms.{name}", err <= tol, f"max rel err {err:.2e} over {n_sets} sets") for name, err in worst.items()]
    out.append(("terms.integrated_variance_lower_bounds", bool(bound_ok), f"{n_sets} sets"))
    return out


def check_derivs(strikes=(80.0, 100.0, 120.0), taus=(0.25, 2.0), vols=(0.15, 0.4, 0.8), tol: float = 1e-6,
                 vega_tol: float = 1e-7) -> list[CheckResult]:
    x, r = math.log(100.0), 0.01
    worst, vega_worst = 0.0, 0.0
    for strike in strikes:
        for tau in taus:
            for y in vols:
                s = BsState(x, y, tau, strike, r)
                for a in range(9):
                    for b in range((8 - a) // 2 + 1):
                        fd = oracles.fd_lambda_gamma(x, strike, r, y, tau, a, b)
                        val = lambda_gamma_bs(s, DerivOrder(a, b))
                        worst = max(worst, abs(val - fd) / (1.0 + abs(fd)))
                fd_v = oracles.fd_vega(x, strike, r, y, tau)
                vega_worst = max(vega_worst, abs(y * tau * gamma_bs(s) - fd_v) / abs(fd_v),
                                 abs(bs_vega(s) - fd_v) / abs(fd_v))
    n = len(strikes) * len(taus) * len(vols)
    return [
        ("derivs.lambda_gamma_vs_fd", worst <= tol, f"max err {worst:.2e} over {n} states, a+2b<=8"),
        ("derivs.vega_identity", vega_worst <= vega_tol, f"max rel err {vega_worst:.2e}"),
    ]


def check_mc(n_paths: int = 200_000, seed: int = 7, threads: int = 1) -> list[CheckResult]:
    spec = OptionSpec(100.0, 1.0)
    p = bench.figure_params(1)
    est = mc_price(p, spec, McConfig(n_paths=n_paths, seed=seed, threads=threads))
    ref = price_reference(p, spec).price
    disc_spot_gap = abs(est.martingale_mean - p.s0)
    p0 = bench.figure_params(5)
    # the conditional estimator's error is small enough that the Euler O(dt) bias needs finer steps
    hw = hull_white_mc(p0, spec, McConfig(n_paths=n_paths, steps_per_year=1000, seed=seed, threads=threads))
    zc = approx.price_zero_corr(p0, spec)
    hw_tol = max(3 * hw.std_error, 10 * zc.error_indicator)
    return [
        ("mc.price_vs_reference", abs(est.price - ref) <= 3 * est.std_error,
         f"mc {est.price:.6f} +- {est.std_error:.1e}, ref {ref:.6f}"),
        ("mc.martingale", disc_spot_gap <= 3 * est.martingale_se, f"gap {disc_spot_gap:.2e}, se {est.martingale_se:.1e}"),
        ("mc.truncation_fraction", est.truncated_fraction < 1e-3, f"{est.truncated_fraction:.2e}"),
        ("mc.hull_white_vs_zero_corr", abs(hw.price - zc.price) <= hw_tol,
         f"hw {hw.price:.6f} +- {hw.std_error:.1e}, zc {zc.price:.6f}"),
    ]


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "terms": check_terms,
    "derivs": check_derivs,
    "mc": check_mc,
}


def cmd_check(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    threads = resolve_threads(args.threads)
    failed = 0
    for name in names:
        results = SUITES[name](threads=threads) if name == "mc" else SUITES[name]()
        for label, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
            failed += not ok
    return EXIT_CHECK if failed else EXIT_OK


# wiring ---------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heston-xpand", description="Heston call pricing by small vol-of-vol expansion.")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("price", help="price one option")
    pr.add_argument("--params", required=True, help="JSON file with kappa, theta, nu, rho, v0, r, s0")
    pr.add_argument("--strike", type=float, required=True)
    pr.add_argument("--maturity", type=float, required=True)
    pr.add_argument("--t", type=float, default=0.0, help="valuation time (default 0)")
    pr.add_argument("--method", choices=["ref", "o2", "o3", "o4", "zc"], required=True)
    pr.add_argument("--put", action="store_true", help="price the put instead of the call")
    pr.add_argument("--header", action="store_true", help="print the CSV header first")
    pr.set_defaults(func=cmd_price)

    sw = sub.add_parser("sweep", help="error sweep over a strike x maturity grid")
    sw.add_argument("--figure", type=int, choices=sorted(bench.FIGURE_PRESETS))
    sw.add_argument("--params")
    sw.add_argument("--strikes", help="comma-separated, ascending")
    sw.add_argument("--maturities", help="comma-separated")
    sw.add_argument("--methods", help="comma-separated subset of ref,o2,o3,o4,zc")
    sw.add_argument("--output-dir", default=".")
    sw.add_argument("--threads", type=int)
    sw.set_defaults(func=cmd_sweep)

    be = sub.add_parser("bench", help="timing task")
    be.add_argument("--task", type=int, choices=[1, 2, 3], required=True)
    be.add_argument("--threads", type=int)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--repeats", type=int, default=5)
    be.add_argument("--methods", help="comma-separated subset of ref,o2,o3,o4")
    be.add_argument("--output-dir")
    be.set_defaults(func=cmd_bench)

    ch = sub.add_parser("check", help="run oracle comparisons")
    ch.add_argument("--suite", choices=["terms", "derivs", "mc", "all"], required=True)
    ch.add_argument("--threads", type=int)
    ch.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RhoNotZero as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except QuadratureNonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
