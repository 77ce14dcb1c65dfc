"""Command-line interface.

Subcommands:
    simulate        run one scenario, write trajectory CSV + summary report
    compare         run several scenarios side by side, write comparison files
    analyze bounds  print the closed-form trade-off and error-bound quantities
    list-scenarios  show the bundled benchmark configurations

Exit codes: 0 success, 2 validation error, 3 divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    BoundInputs,
    EmptyIntervalError,
    convergence_time,
    eps_interval,
    h_minimizer,
    h_value,
    nu_star,
    ultimate_bound,
)
from .linalg import min_max_eig_sym, scaling_matrix, solve_lyapunov
from .observers import ObserverGainProfile, combined_weights
from .scenario import ScenarioError, bundled_scenario_names, resolve_scenario
from .simrun import compare, emit_csv, run, summary_text

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hgobank",
        description="Closed-loop simulations of observer-bank output feedback and their error-bound calculators.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write CSV + summary")
    sim.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--stride", type=int, default=None, help="override the logging stride")
    sim.add_argument("--engine", choices=("auto", "kernel", "python"), default="auto")

    cmp_ = sub.add_parser("compare", help="run scenarios side by side")
    cmp_.add_argument("--scenarios", required=True, nargs="+",
                      help="scenario file paths or bundled names")
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--engine", choices=("auto", "kernel", "python"), default="auto")

    ana = sub.add_parser("analyze", help="closed-form bound calculators")
    ana_sub = ana.add_subparsers(dest="analysis", required=True)
    bounds_p = ana_sub.add_parser("bounds", help="trade-off level, minimizer, admissible noise, eps interval, entry time")
    bounds_p.add_argument("--scenario", required=True)
    bounds_p.add_argument("--a1", type=float, default=0.0,
                          help="fusion cross-term bound; defaults to 0 (run simulate for a measured value)")
    bounds_p.add_argument("--h-bar", type=float, default=None,
                          help="admissible trade-off level; defaults to the scenario's own h(eps, nu_bar)")
    bounds_p.add_argument("--l3", type=float, default=1.0,
                          help="transient inflation constant (>= 1)")

    sub.add_parser("list-scenarios", help="list the bundled scenario names")
    return p


def _cmd_simulate(args) -> int:
    sc = resolve_scenario(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj, metrics = run(sc, seed=args.seed, stride=args.stride, engine=args.engine)
    label = traj.scenario.label
    emit_csv(traj, out_dir / f"{label}.csv")
    (out_dir / f"{label}_summary.txt").write_text(summary_text(traj.scenario, metrics))
    print(summary_text(traj.scenario, metrics))
    if metrics.diverged_at is not None:
        return EXIT_DIVERGENCE
    return EXIT_OK


def _cmd_compare(args) -> int:
    scenarios = [resolve_scenario(s) for s in args.scenarios]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    comparison, results = compare(scenarios, seed=args.seed, engine=args.engine)
    for traj, _ in results:
        emit_csv(traj, out_dir / f"{traj.scenario.label}.csv")
    (out_dir / "comparison.csv").write_text(comparison.to_csv_text())
    (out_dir / "comparison.txt").write_text(comparison.to_text())
    print(comparison.to_text())
    if any(m.diverged_at is not None for _, m in results):
        return EXIT_DIVERGENCE
    return EXIT_OK


def _cmd_analyze_bounds(args) -> int:
    sc = resolve_scenario(args.scenario)
    est = sc.estimator
    if est.kind in ("state_feedback",):
        raise ScenarioError("analyze bounds needs an observer-based scenario")
    profile = ObserverGainProfile(kappa=est.kappa, eps=est.eps)
    n = profile.n
    P0 = solve_lyapunov(profile.companion_Ao())
    lam_min, lam_max = min_max_eig_sym(P0)
    norm_P0 = lam_max
    norm_P0Ho = float(np.linalg.norm(P0 @ profile.H_o()))
    nu_bar = sc.noise.bound
    a2 = 2.0 * norm_P0Ho
    f_bar = norm_P0 * sc.plant.f_bound

    # initial Lyapunov value of the scaled fused error, from the scenario state
    V1_0 = 0.0
    if est.kind == "mhgo" and est.inits:
        inits = np.asarray(est.inits, dtype=float)
        w = combined_weights(np.asarray(est.beta0))
        xo0 = w @ inits
        x0 = np.asarray(sc.plant.x0[:n], dtype=float)
        eta0 = scaling_matrix(profile.eps, n) @ (x0 - xo0)
        V1_0 = float(eta0 @ P0 @ eta0)

    probe = BoundInputs(
        n=n, eps=profile.eps, f_bar=f_bar, nu_bar=nu_bar,
        a1=args.a1, a2=a2, V1_0=V1_0, l3=args.l3,
    )
    h_here = h_value(probe)
    h_bar = args.h_bar if args.h_bar is not None else h_here
    if h_bar <= 0.0:
        raise ScenarioError(
            "the scenario's own h(eps, nu_bar) is 0 (plant f_bound and noise "
            "bound both zero); pass --h-bar explicitly"
        )
    inputs = BoundInputs(
        n=n, eps=profile.eps, f_bar=f_bar, nu_bar=nu_bar,
        a1=args.a1, a2=a2, h_bar=h_bar, V1_0=V1_0, l3=args.l3,
    )

    print(f"scenario: {sc.label}")
    print(f"n = {n}, eps = {profile.eps}, kappa = {list(est.kappa)}")
    print(f"lambda_min(P0) = {lam_min:.10g}, lambda_max(P0) = {lam_max:.10g}")
    print(f"f_bar = ||P0|| * f_bound = {f_bar:.10g}   (f_bound = {sc.plant.f_bound})")
    print(f"a1 = {args.a1:.10g}   a2 = 2 ||P0 H_o|| = {a2:.10g}   nu_bar = {nu_bar:.10g}")
    print(f"h(eps, nu_bar) = {h_here:.10g}")
    res = h_minimizer(inputs)
    if res.vanishing_limit:
        print("eps_star: none (noise-free: the trade-off decreases toward 0 as eps -> 0)")
    else:
        print(f"eps_star = {res.eps_star:.10g}   h(eps_star) = {h_value(inputs, res.eps_star):.10g}")
        print(f"nu_star(eps_star, h_bar={h_bar:.6g}) = {nu_star(inputs, res.eps_star):.10g}")
    try:
        e1, e2 = eps_interval(inputs)
        print(f"eps interval for h <= h_bar: [{e1:.10g}, {e2:.10g}]")
    except EmptyIntervalError as exc:
        print(f"eps interval: empty ({exc})")
    if V1_0 > 0.0 and f_bar > 0.0:
        T = convergence_time(inputs, lam_max)
        print(f"V1(0) = {V1_0:.10g}   l3 = {args.l3}   T(eps) = {T:.10g} s")
    else:
        print("T(eps): not evaluated (needs V1(0) > 0 and f_bar > 0)")
    ub_fused = ultimate_bound(inputs, lam_max, lam_min, fused=True)
    ub_const = ultimate_bound(
        inputs, lam_max, lam_min,
        norm_P0=norm_P0, norm_P0Ho=norm_P0Ho,
        f_bound0=sc.plant.f_bound, fused=False,
    )
    print(f"ultimate bound (fused weights):    {ub_fused:.10g}")
    print(f"ultimate bound (constant weights): {ub_const:.10g}")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name in bundled_scenario_names():
        print(name)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "analyze":
            return _cmd_analyze_bounds(args)
        if args.command == "list-scenarios":
            return _cmd_list(args)
        parser.error(f"unknown command {args.command}")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
