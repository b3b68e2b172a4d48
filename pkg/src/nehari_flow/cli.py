"""Command-line front end: ``nehari-flow <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration or empty
grid, 3 solver non-convergence or infeasible construction.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, ExperimentConfig, build_initial, load_config
from .construct import ConstructionError, certify, high_energy_datum
from .experiments import PHASE_COLUMNS, sweep, verdict_transitions
from .flow import run
from .variational import ConvergenceError, default_seed, stationary_solve, well_depth

log = logging.getLogger("nehari_flow")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("NEHARI_FLOW_THREADS")
    return int(env) if env else 1


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    if args.threads is not None or os.environ.get("NEHARI_FLOW_THREADS"):
        cfg.threads = _threads(args)
    os.environ["NEHARI_FLOW_THREADS"] = str(cfg.threads)
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    u0, info = build_initial(cfg)
    res = run(u0, cfg.params, cfg.flow)
    io.write_trace_csv(out / "trace.csv", res.trace)
    io.trace_plots(out, res.trace)
    io.write_json(out / "summary.json", {**res.to_dict(), "steps": res.steps, "rejected": res.rejected,
                                         "config": cfg.to_dict(), "initial": info})
    print(f"verdict {res.verdict.value} at t={res.t_final:.6g} ({res.certificate})")
    return EXIT_OK


def cmd_stationary(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    st = stationary_solve(cfg.params, default_seed(cfg.domain))
    io.write_json(out / "stationary.json", st.to_dict())
    io.write_field(out / "u_star", st.u_star, cfg.p)
    print(f"residual_rel {st.residual_rel:.3e}")
    print(f"J(u*) {st.J_star:.12g}  I(u*) {st.I_star:.3e}  positive {st.positive}")
    return EXIT_OK


def cmd_depth(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    de = well_depth(cfg.params, cfg.domain, cfg.n_starts, cfg.seed, threads=cfg.threads)
    io.write_json(out / "depth.json", de.to_dict())
    print(f"d_est {de.d_est!r}  spread_rel {de.spread_rel:.3e}  converged {de.converged}/{de.starts}")
    return EXIT_OK


def cmd_construct(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    init = cfg.initial
    info = {}
    if init.get("kind") != "theorem12":
        raise ConfigError("construct needs an initial block of kind 'theorem12'")
    if "M" in init:
        M = init["M"]
    else:
        de = well_depth(cfg.params, cfg.domain, cfg.n_starts, cfg.seed, threads=cfg.threads)
        M = init["M_over_d"] * de.d_est
        info["depth"] = de.to_dict()
    rec = high_energy_datum(M, cfg.params, cfg.domain)
    problems = certify(rec, cfg.params)
    io.write_json(out / "recipe.json", {**rec.to_dict(), "certified": not problems, "problems": problems, **info})
    for name in ("u_M", "v", "w"):
        io.write_field(out / name, getattr(rec, name), cfg.p)
    print("certified" if not problems else "NOT certified: " + "; ".join(problems))
    return EXIT_OK if not problems else EXIT_SOLVER


def cmd_sweep(args) -> int:
    cfg = _load(args)
    scales = cfg.sweep_scales
    if args.points is not None:
        scales = [float(s) for s in np.linspace(args.smin, args.smax, args.points)] if args.points > 0 else []
    if scales is None:
        scales = [float(s) for s in np.linspace(0.25, 2.0, 16)]
    if not scales:
        raise ConfigError("empty scale grid")
    out = _outdir(cfg)
    if args.profile:
        profile, _ = io.read_field(args.profile)
        if profile.domain != cfg.domain:
            raise ConfigError("profile grid does not match the configured domain")
    else:
        profile = stationary_solve(cfg.params, default_seed(cfg.domain)).u_star
    rows = sweep(cfg.params, profile, scales, cfg.flow, threads=cfg.threads)
    with open(out / "phase.csv", "w", newline="") as fh:
        fh.write(",".join(PHASE_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else io.fmt(v) for v in r.as_tuple()) + "\n")
    code = {"GlobalDecay": 0.0, "Undetermined": 0.5, "BlowUp": 1.0}
    s = np.array([r.s for r in rows])
    J0 = np.array([r.J0 for r in rows])
    I0 = np.array([r.I0 for r in rows])
    scale_j = max(float(np.max(np.abs(J0))), 1e-300)
    scale_i = max(float(np.max(np.abs(I0))), 1e-300)
    io.svg_lines(out / "phase.svg", s, {
        "verdict (0 decay, 1 blow-up)": np.array([code.get(r.verdict, np.nan) for r in rows]),
        "J0 / max|J0|": J0 / scale_j,
        "I0 / max|I0|": I0 / scale_i,
    }, title="phase sweep", xlabel="s")
    done = sum(r.verdict != "Error" for r in rows)
    flips = verdict_transitions(rows)
    print(f"{done}/{len(rows)} rows completed, {len(flips)} verdict transition(s)")
    for i in flips:
        print(f"  {rows[i].verdict} -> {rows[i + 1].verdict} between s={rows[i].s:.4g} and s={rows[i + 1].s:.4g}")
    return EXIT_OK if done else EXIT_SOLVER


def cmd_selftest(args) -> int:
    from . import acceptance

    scale = acceptance.BASELINE if args.baseline else acceptance.REDUCED
    seed = 0 if args.seed is None else args.seed
    if args.threads is not None:
        os.environ["NEHARI_FLOW_THREADS"] = str(args.threads)
    only = set(args.only) if args.only else None
    results = acceptance.run_suite(scale, seed, only)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.write_json(Path(args.out) / "selftest.json", acceptance.summary(results, scale, seed))
    return EXIT_OK if ok else EXIT_SELFTEST


COMMANDS = {
    "simulate": cmd_simulate,
    "stationary": cmd_stationary,
    "depth": cmd_depth,
    "construct": cmd_construct,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nehari-flow", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help="worker threads (default $NEHARI_FLOW_THREADS or 1)")
        if name == "sweep":
            sp.add_argument("--profile", help="field stem to scale instead of the stationary solution")
            sp.add_argument("--min", dest="smin", type=float, default=0.25)
            sp.add_argument("--max", dest="smax", type=float, default=2.0)
            sp.add_argument("--points", type=int, help="override the config grid")
        if name == "selftest":
            sp.add_argument("--baseline", action="store_true", help="full-size criteria (m=31)")
            sp.add_argument("--only", type=int, nargs="+", metavar="K")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ConstructionError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
