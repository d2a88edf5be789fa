"""Command-line interface: ``ecl {bounds,generate,verify,solve,ratio,reproduce}``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import atomic, atomic_solvers, bounds, instances, io, nonatomic, nonatomic_solvers, reproduce
from .atomic import AtomicGame, Profile, ValidationError
from .network import PathEnumerationError
from .random_games import DEFAULT_SEED, random_atomic_game, random_nonatomic_game, random_profile

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TABLE_DIGITS = 6


class UsageError(Exception):
    pass


def parse_real(text: str) -> float:
    """Decimal or fraction (``1/3``) as float."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def parse_epsilon(text: str) -> float:
    value = parse_real(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"epsilon must be >= 0, got {text}")
    return value


def parse_grid(spec: str) -> list:
    """``start:stop:step`` with stop included; fractions allowed."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must look like start:stop:step, got {spec!r}")
    try:
        start, stop, step = (Fraction(p.strip()) for p in parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"malformed grid {spec!r}") from exc
    if step <= 0 or stop < start or start < 0:
        raise UsageError(f"grid needs 0 <= start <= stop and step > 0, got {spec!r}")
    n = int((stop - start) / step)
    values = [start + k * step for k in range(n + 1)]
    # a decimal step like 0.0833 may stop just short of an intended 1/3 endpoint; keep stop itself
    if values[-1] != stop and (stop - values[-1]) < step / 2:
        values.append(stop)
    return [float(v) for v in values]


def default_seed() -> int:
    env = os.environ.get("ECL_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ECL_SEED must be an integer, got {env!r}")


def _emit(obj, out):
    text = io.dump_json(obj, path=out)
    if out is None:
        print(text)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{TABLE_DIGITS}g}"
    return str(x)


# --- subcommands -------------------------------------------------------------


def cmd_bounds(args) -> int:
    rows = [bounds.bound_report(e).as_dict() for e in parse_grid(args.grid)]
    if args.format == "json":
        _emit([{k: io.report_number(v) for k, v in r.items()} for r in rows], args.output)
        return EXIT_OK
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def cmd_generate(args) -> int:
    fam = args.family
    if fam in ("random-atomic", "random-nonatomic"):
        rng = np.random.default_rng(args.seed)
        game = random_atomic_game(rng) if fam == "random-atomic" else random_nonatomic_game(rng)
        _emit(io.game_to_dict(game), args.output)
        return EXIT_OK
    if fam == "atomic-pos":
        bundle = instances.atomic_pos_lb(args.epsilon, args.n or 3, args.lam, args.delta)
    elif fam == "two-links":
        bundle = instances.two_links(args.n or 4, args.gamma)
    elif fam == "nonatomic-poa" and args.network:
        bundle = instances.routing_poa_lb(args.epsilon)
    else:
        bundle = instances.generate(fam, args.epsilon)
    _emit(io.bundle_to_dict(bundle), args.output)
    return EXIT_OK


def _verify_report(game, state) -> dict:
    if isinstance(game, AtomicGame):
        rep = atomic.profile_epsilon(game, state)
        return {
            "kind": "atomic",
            "epsilon_star": rep.epsilon_star,
            "witness": None if rep.witness is None else list(rep.witness),
            "social_cost": atomic.social_cost(game, state),
        }
    state = nonatomic.check_flow(game, state)
    rep = nonatomic.flow_epsilon(game, state)
    return {
        "kind": "nonatomic",
        "epsilon_star": rep.epsilon_star,
        "witness": None if rep.witness is None else list(rep.witness),
        "social_cost": nonatomic.social_cost(game, state),
    }


def cmd_verify(args) -> int:
    game = io.load_game(args.game)
    raw = io.load_json(args.state)
    if isinstance(raw, dict) and raw.get("kind") == "equilibrium_set":
        raw = {"choices": raw["worst"]}
    state = io.state_from_dict(raw, game, role=args.role)
    out = _verify_report(game, state)
    ok = out["epsilon_star"] <= args.epsilon + atomic.TOL
    out["epsilon"] = args.epsilon
    out["is_equilibrium"] = ok
    _emit({k: io.report_number(v) if isinstance(v, float) else v for k, v in out.items()}, None)
    return EXIT_OK if ok else EXIT_FAIL


ATOMIC_METHODS = ("brute", "dynamics", "descent")
FLOW_METHODS = ("fw-potential", "fw-opt")


def _start_profile(args, game):
    if args.start:
        return atomic.check_profile(game, io.load_state(args.start, game, role="equilibrium"))
    if args.random_start:
        return random_profile(game, np.random.default_rng(args.seed))
    return Profile((0,) * game.n_players)


def cmd_solve(args) -> int:
    game = io.load_game(args.game)
    atomic_game = isinstance(game, AtomicGame)
    if (args.method in ATOMIC_METHODS) != atomic_game:
        kind = "atomic" if atomic_game else "non-atomic"
        raise UsageError(f"method {args.method!r} does not apply to a {kind} game")
    needs_eps = args.method not in ("fw-opt",)
    if needs_eps and args.epsilon is None:
        raise UsageError(f"method {args.method!r} needs --epsilon")
    if args.method == "brute":
        es = atomic_solvers.brute_force(game, args.epsilon, cap=args.cap, jobs=args.jobs)
        out = io.equilibrium_set_to_dict(es)
    elif args.method in ("dynamics", "descent"):
        start = _start_profile(args, game)
        if args.method == "dynamics":
            term, trace = atomic_solvers.epsilon_best_response(
                game, start, args.epsilon, order=args.order, max_steps=args.max_steps
            )
        else:
            term, trace = atomic_solvers.potential_descent(game, start, args.epsilon, max_steps=args.max_steps)
        out = io.trace_to_dict(trace, atomic.profile_epsilon(game, term))
        out["seed"] = args.seed
        if args.trace_csv:
            with open(args.trace_csv, "w", newline="") as fh:
                trace.to_csv(fh)
    else:
        objective = "potential" if args.method == "fw-potential" else "social_cost"
        res = nonatomic_solvers.minimize(
            game,
            objective,
            args.epsilon if objective == "potential" else None,
            tol=args.tol,
            max_iter=args.max_iter,
            method=args.fw,
            trace=args.trace,
        )
        out = io.solve_result_to_dict(res, game)
        if objective == "potential":
            out["epsilon_star"] = io.report_number(nonatomic.flow_epsilon(game, res.flow).epsilon_star)
    _emit(out, args.output)
    if args.output:
        summary = {k: out[k] for k in ("poa", "pos", "opt_cost", "objective", "social_cost", "epsilon_star",
                                       "converged", "iterations") if k in out}
        print(json.dumps(summary))
    converged = out.get("converged", True)
    return EXIT_OK if converged else EXIT_FAIL


def cmd_ratio(args) -> int:
    raw = io.load_json(args.file)
    if args.states:
        if len(args.states) != 2:
            raise UsageError("ratio takes a game file and exactly two profile/flow files")
        game = io.game_from_dict(raw)
        a = io.load_state(args.states[0], game)
        b = io.load_state(args.states[1], game)
        mod = atomic if isinstance(game, AtomicGame) else nonatomic
        ca, cb = mod.social_cost(game, a), mod.social_cost(game, b)
        ratio = atomic_solvers.cost_ratio(ca, cb)
        _emit({"cost_a": io.report_number(ca), "cost_b": io.report_number(cb), "ratio": io.report_number(ratio)}, None)
        return EXIT_OK
    bundle = io.bundle_from_dict(raw)
    eq, opt = bundle.costs()
    measured_ratio = eq / opt
    measured_eps = bundle.measured_epsilon()
    ok = math.isclose(measured_ratio, bundle.expected_ratio, rel_tol=instances.BUNDLE_TOL, abs_tol=instances.BUNDLE_TOL)
    ok = ok and abs(measured_eps - bundle.expected_epsilon) <= instances.BUNDLE_TOL * max(1.0, bundle.expected_epsilon)
    _emit(
        {
            "family": bundle.family,
            "equilibrium_cost": io.report_number(eq),
            "optimum_cost": io.report_number(opt),
            "ratio": io.report_number(measured_ratio),
            "expected_ratio": io.report_number(bundle.expected_ratio),
            "epsilon_star": io.report_number(measured_eps),
            "expected_epsilon": io.report_number(bundle.expected_epsilon),
            "matches": ok,
        },
        None,
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reproduce(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    families = None
    if args.families:
        families = [f for chunk in args.families for f in chunk.split(",") if f]
        unknown = [f for f in families if f not in reproduce.SUITES]
        if unknown:
            raise UsageError(f"unknown families {unknown}; choose from {list(reproduce.SUITES)}")
    log = (lambda msg: print(msg, file=sys.stderr)) if not args.quiet else None
    report = reproduce.run(families, seed=args.seed, jobs=args.jobs, progress=log)
    io.dump_json(report.as_dict(), path=out / "report.json")
    with open(out / "report.csv", "w", newline="") as fh:
        report.write_csv(fh)
    with open(out / "bounds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        rows = [bounds.bound_report(e).as_dict() for e in reproduce.grid(0, 3, 0.05)]
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])
    for crit, ok in sorted(report.criteria().items()):
        print(f"criterion {crit:2d}: {'pass' if ok else 'FAIL'}")
    if report.passed:
        print(f"all {len(report.rows)} checks passed; report in {out}")
        return EXIT_OK
    print("failing rows:")
    for r in report.failures():
        print(f"  [{r.criterion}] {r.family}: {r.param} expected {r.expected!r} measured {r.measured!r} {r.note}")
    return EXIT_FAIL


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecl", description="Approximate equilibria in linear congestion games.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="table of PoA/PoS bounds over an epsilon grid")
    b.add_argument("--grid", default="0:2:0.05", help="start:stop:step, stop included; fractions allowed")
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bounds)

    g = sub.add_parser("generate", help="write a lower-bound instance bundle (or a random game)")
    g.add_argument(
        "--family",
        required=True,
        choices=instances.FAMILIES + ("random-atomic", "random-nonatomic"),
    )
    g.add_argument("--epsilon", type=parse_epsilon, default=0.0)
    g.add_argument("--n", type=int)
    g.add_argument("--lambda", dest="lam", type=int, help="fixed players of the atomic-pos family (default: best)")
    g.add_argument("--delta", type=parse_real, default=1e-9)
    g.add_argument("--gamma", type=parse_real, default=0.5, help="two-links offset")
    g.add_argument("--network", action="store_true", help="nonatomic-poa as a routing network")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="smallest epsilon of a profile or flow; exit 0 iff <= --epsilon")
    v.add_argument("game", help="game, network or bundle file")
    v.add_argument("state", help="profile, flow, solver result or bundle file")
    v.add_argument("--epsilon", type=parse_epsilon, required=True)
    v.add_argument("--role", choices=("equilibrium", "optimum"), default="equilibrium",
                   help="which designated state to take from a bundle")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="compute equilibria or optima")
    s.add_argument("game")
    s.add_argument("--method", required=True, choices=ATOMIC_METHODS + FLOW_METHODS)
    s.add_argument("--epsilon", type=parse_epsilon)
    s.add_argument("--start", help="start profile file for dynamics/descent")
    s.add_argument("--random-start", action="store_true")
    s.add_argument("--order", choices=atomic_solvers.BR_RULES, default="round-robin")
    s.add_argument("--max-steps", type=int, default=100_000)
    s.add_argument("--trace-csv", help="write the dynamics trace as CSV")
    s.add_argument("--tol", type=parse_real, default=nonatomic_solvers.DEFAULT_TOL)
    s.add_argument("--max-iter", type=int, default=nonatomic_solvers.DEFAULT_MAX_ITER)
    s.add_argument("--fw", choices=nonatomic_solvers.METHODS, default="pairwise")
    s.add_argument("--trace", action="store_true", help="record the Frank-Wolfe gap per iteration")
    s.add_argument("--cap", type=int, default=atomic_solvers.DEFAULT_CAP)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("ratio", help="cost ratio of a bundle, or of two states of a game")
    r.add_argument("file", help="bundle file, or game file followed by two state files")
    r.add_argument("states", nargs="*")
    r.set_defaults(func=cmd_ratio)

    rp = sub.add_parser("reproduce", help="run every acceptance check and write a report")
    rp.add_argument("--out", default="reproduction")
    rp.add_argument("--families", action="append", help=f"comma-separated subset of {list(reproduce.SUITES)}")
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--quiet", action="store_true")
    rp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", "absent") is None:
            args.seed = default_seed()
        return args.func(args)
    except (UsageError, io.SchemaError, ValidationError, bounds.DomainError,
            atomic_solvers.EnumerationTooLarge, PathEnumerationError, instances.ConstructionError,
            FileNotFoundError, KeyError) as exc:
        print(f"ecl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
