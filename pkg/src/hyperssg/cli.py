"""Command line: solve, certify, robustness, experiment, gen.

Game files are JSON::

    {"K": 2,
     "leader": {"R": 1, "covered": [..K], "uncovered": [..K]},
     "followers": [{"R": 1, "payoffs": [{"covered": <payoff>, "uncovered": <payoff>}, ..K]}, ..n],
     "theta": {"dim": m, "true": [..m], "box": {"lo": [..], "hi": [..], "grid": [..]}}
              (or "set": [[..m], ...] instead of "box"),
     "name": "optional"}

where <payoff> is one of
``{"family": "constant", "value": v}``, ``{"family": "affine", "const": c, "grad": [..m]}``,
``{"family": "poly", "coeffs": [c0..c4], "index": j}`` or
``{"family": "scaled_affine", "base": b, "p0": p, "p_grad": [..m]}``.
Unknown keys anywhere are rejected.

Exit codes: 0 ok, 1 not certified, 2 invalid input or failed assumption, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .equilibrium import BudgetError, solve_dsse, solve_msse, solve_msse_milp, solve_sse
from .harness import CASES, ExperimentPlan, fmt, run_cases, run_robustness
from .instances import FIXTURES, InstanceGenConfig, fixture, generate_random
from .model import DomainError, ParametricPayoff, SecurityGame, SpecError, ThetaSpace
from .stability import certify_dsse_stability, certify_msse_stability

SCHEMA_VERSION = 1
EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# game files
# ---------------------------------------------------------------------------

def _keys(d, allowed, where, required=None):
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise SpecError(f"{where}: unknown keys {sorted(extra)}")
    missing = set(allowed if required is None else required) - set(d)
    if missing:
        raise SpecError(f"{where}: missing keys {sorted(missing)}")


def game_to_dict(game: SecurityGame) -> dict:
    d = {"K": game.K,
         "leader": {"R": game.leader_resource, "covered": list(game.leader_covered),
                    "uncovered": list(game.leader_uncovered)},
         "followers": [{"R": game.follower_resources[i],
                        "payoffs": [{"covered": game.covered[i][k].to_dict(),
                                     "uncovered": game.uncovered[i][k].to_dict()}
                                    for k in range(game.K)]}
                       for i in range(game.n)],
         "theta": game.theta.to_dict()}
    if game.name:
        d["name"] = game.name
    return d


def _theta_from_dict(d) -> ThetaSpace:
    _keys(d, {"dim", "true", "box", "set"}, "theta", {"dim", "true"})
    if ("box" in d) == ("set" in d):
        raise SpecError("theta: give exactly one of 'box' or 'set'")
    if "box" in d:
        _keys(d["box"], {"lo", "hi", "grid"}, "theta.box")
        th = ThetaSpace.box(d["true"], d["box"]["lo"], d["box"]["hi"], d["box"]["grid"])
    else:
        th = ThetaSpace.finite(d["true"], d["set"])
    if th.dim != int(d["dim"]):
        raise SpecError("theta: 'dim' does not match the coordinates")
    return th


def game_from_dict(d) -> SecurityGame:
    try:
        _keys(d, {"K", "leader", "followers", "theta", "name"}, "game",
              {"K", "leader", "followers", "theta"})
        _keys(d["leader"], {"R", "covered", "uncovered"}, "leader")
        K = int(d["K"])
        cov, unc, res = [], [], []
        for i, f in enumerate(d["followers"]):
            _keys(f, {"R", "payoffs"}, f"followers[{i}]")
            if len(f["payoffs"]) != K:
                raise SpecError(f"followers[{i}]: need {K} payoff entries")
            for k, p in enumerate(f["payoffs"]):
                _keys(p, {"covered", "uncovered"}, f"followers[{i}].payoffs[{k}]")
            cov.append([ParametricPayoff.from_dict(p["covered"]) for p in f["payoffs"]])
            unc.append([ParametricPayoff.from_dict(p["uncovered"]) for p in f["payoffs"]])
            res.append(f["R"])
        lead = d["leader"]
        if len(lead["covered"]) != K:
            raise SpecError(f"leader: need {K} covered payoffs")
        return SecurityGame.build(lead["R"], res, lead["covered"], lead["uncovered"], cov, unc,
                                  _theta_from_dict(d["theta"]), d.get("name", ""))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(f"malformed game spec: {e!r}") from e


def load_game(path) -> SecurityGame:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: not valid JSON ({e})") from e
    return game_from_dict(d)


def dump_json(obj, path=None):
    # json writes floats with repr, the shortest text that reads back to the same double
    text = json.dumps(obj, indent=1, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def save_game(game: SecurityGame, path=None):
    dump_json(game_to_dict(game), path)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def equilibrium_to_dict(eq) -> dict:
    return {"x": _arr(eq.x), "y": _arr(eq.y), "leader_value": float(eq.leader_value),
            "follower_perceived": _arr(eq.follower_perceived),
            "follower_actual": _arr(eq.follower_actual),
            "chosen_targets": list(eq.chosen_targets), "theta_used": _arr(eq.theta_used),
            "status": eq.status, "bound": None if eq.bound is None else float(eq.bound),
            "lp_solves": int(eq.lp_solves), "refined": bool(eq.refined),
            "tiebreak_trace": [{"x": _arr(p.x), "y": _arr(p.y)} for p in eq.tiebreak_trace]}


def hne_to_dict(h) -> dict:
    return {"is_hne": bool(h.is_hne), "literal_is_hne": bool(h.literal_is_hne), "mode": h.mode,
            "leader_br_targets": [int(k) for k in h.leader_br_targets],
            "follower_br_sets": [[int(k) for k in s] for s in h.follower_br_sets],
            "violation": None if h.violation is None else [h.violation[0], float(h.violation[1])],
            "witness": None if h.witness is None else _arr(h.witness)}


def stability_to_dict(rep, which) -> dict:
    d = {"which": which, "stable": bool(rep.stable), "condition_holds": bool(rep.condition_holds),
         "theorem_respected": bool(rep.theorem_respected),
         "equilibrium": equilibrium_to_dict(rep.equilibrium), "hne": hne_to_dict(rep.hne)}
    c = rep.certificate
    if which == "msse":
        d["sol"] = None if c is None else {"lambda": float(c.lam), "y_prime": _arr(c.y_prime),
                                           "residual": float(c.residual)}
    else:
        d["trick"] = None if c is None else {"theta": _arr(c[0]), "k_max": int(c[1])}
        d["value_matches"] = rep.value_matches
        d["expected_value"] = rep.expected_value
    return d


def robustness_to_dict(rep) -> dict:
    ing = rep.ingredients
    return {"delta_msse": rep.delta_msse, "delta_dsse": rep.delta_dsse, "x_sse": _arr(rep.x_sse),
            "empirical_msse": rep.empirical_msse, "empirical_dsse": rep.empirical_dsse,
            "shell_width": rep.shell_width, "bound_respected": rep.bound_respected,
            "tags": list(rep.tags),
            "ingredients": {"gamma1": ing.gamma1, "gamma2": ing.gamma2, "g1": _arr(ing.g1),
                            "g2": _arr(ing.g2), "grad_star": _arr(ing.grad_star),
                            "sigma": ing.sigma, "sigma_source": ing.sigma_source,
                            "degenerate": list(ing.degenerate)}}


def result_doc(kind, game, body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "game": game.name,
            "tool_version": __version__, **body}


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise SpecError(f"bad float list {text!r}") from e


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    game = load_game(args.game)
    theta = _floats(args.theta) if args.theta else None
    if args.mode == "msse" and theta is None:
        raise SpecError("--mode msse needs --theta")
    if args.mode == "dsse":
        _, eq = solve_dsse(game, budget=args.budget)
    elif args.milp:
        eq = solve_msse_milp(game, None if args.mode == "sse" else theta)
    elif args.mode == "sse":
        eq = solve_sse(game, budget=args.budget)
    else:
        eq = solve_msse(game, theta, budget=args.budget)
    doc = result_doc("solve", game, {"mode": args.mode, "milp": bool(args.milp),
                                     "result": equilibrium_to_dict(eq)})
    dump_json(doc, args.out)
    if eq.status != "optimal":
        print(f"status {eq.status}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_certify(args) -> int:
    game = load_game(args.game)
    mixed = not args.literal
    if args.which == "msse":
        theta = _floats(args.theta) if args.theta else None
        rep = certify_msse_stability(game, theta, check_assumptions=not args.skip_assumptions,
                                     mixed_followers=mixed, budget=args.budget, milp=args.milp)
    else:
        rep = certify_dsse_stability(game, check_assumptions=not args.skip_assumptions,
                                     mixed_followers=mixed, budget=args.budget,
                                     full_cover=args.full_cover)
    doc = result_doc("certify", game, stability_to_dict(rep, args.which))
    if args.out:
        dump_json(doc, args.out)
    eq = rep.equilibrium
    print(f"{args.which} leader_value={fmt(eq.leader_value)} targets={list(eq.chosen_targets)} "
          f"theta={[float(t) for t in eq.theta_used]}")
    print(f"condition_holds={rep.condition_holds} hne={rep.hne.is_hne} "
          f"literal_hne={rep.hne.literal_is_hne} mode={rep.hne.mode}")
    if rep.hne.violation is not None:
        print(f"violation={rep.hne.violation[0]} value={fmt(rep.hne.violation[1])}")
    if rep.stable:
        print("STABLE")
        return EXIT_OK
    print("NOT-CERTIFIED")
    return EXIT_NOT_CERTIFIED


def cmd_robustness(args) -> int:
    game = load_game(args.game)
    plan = ExperimentPlan(f"robustness-{args.which}", base_seed=args.seed, budget=args.budget)
    x_sse = _floats(args.x_sse) if args.x_sse else None
    header, rows, rep = run_robustness(game, plan, sigma=args.sigma, x_sse=x_sse)
    print(f"delta_theta_msse={fmt(rep.delta_msse)}")
    print(f"delta_theta_dsse={fmt(rep.delta_dsse)}")
    emp = rep.empirical_msse if args.which == "msse" else rep.empirical_dsse
    print(f"empirical_{args.which}={fmt(emp)} shell_width={fmt(rep.shell_width)}")
    print(f"sigma={fmt(rep.ingredients.sigma)} ({rep.ingredients.sigma_source})")
    if rep.tags:
        print("notes: " + ", ".join(rep.tags))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if args.out:
        dump_json(result_doc("robustness", game, robustness_to_dict(rep)), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.plan:
        with open(args.plan, encoding="utf-8") as fh:
            try:
                plan = ExperimentPlan.from_dict(json.load(fh))
            except json.JSONDecodeError as e:
                raise SpecError(f"{args.plan}: not valid JSON ({e})") from e
    else:
        if not args.case:
            raise SpecError("give --plan or --case")
        params = json.loads(args.fixture_params) if args.fixture_params else {}
        plan = ExperimentPlan(args.case, axis=args.axis, values=_int_list(args.values),
                              fixed=args.fixed, instances=args.instances, base_seed=args.seed,
                              budget=args.budget, use_milp=args.milp, mixed=not args.literal,
                              full_cover=args.full_cover, fixture=args.fixture,
                              fixture_params=params)
    out = Path(args.out)
    if plan.case.startswith("robustness"):
        if not plan.fixture:
            raise SpecError("robustness plans need a fixture")
        game, info = fixture(plan.fixture, **plan.fixture_params)
        run_robustness(game, plan, out, x_sse=info.params.get("x_sse"))
        print(out / f"{plan.case}.csv")
        return EXIT_OK
    rows, _ = run_cases(plan, out, workers=args.workers)
    for r in rows:
        print(f"{plan.case} {plan.axis}={r.value} {r.numerator}/{r.denominator} "
              f"ratio={fmt(r.ratio)}" + (" partial" if r.partial else ""))
    return EXIT_OK


def _int_list(text):
    try:
        out = []
        for part in text.split(","):
            if ".." in part:
                a, b = part.split("..")
                out += list(range(int(a), int(b) + 1))
            elif part.strip():
                out.append(int(part))
        return out
    except ValueError as e:
        raise SpecError(f"bad integer list {text!r}") from e


def cmd_gen(args) -> int:
    if args.fixture:
        params = json.loads(args.fixture_params) if args.fixture_params else {}
        game, _ = fixture(args.fixture, **params)
    else:
        if args.n is None or args.k is None:
            raise SpecError("gen needs --n and --k (or --fixture)")
        game = generate_random(InstanceGenConfig(args.n, args.k, args.seed, mode=args.mode))
    save_game(game, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperssg", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, game=True):
        if game:
            p.add_argument("--game", required=True, help="game spec JSON")
        p.add_argument("--budget", type=int, default=10 ** 5, help="assignment budget per solve")

    p = sub.add_parser("solve", help="compute an SSE, MSSE or DSSE")
    common(p)
    p.add_argument("--mode", choices=("sse", "msse", "dsse"), required=True)
    p.add_argument("--theta", help="perceived theta, comma separated")
    p.add_argument("--milp", action="store_true", help="branch and bound instead of enumeration")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check the stability condition and HNE")
    common(p)
    p.add_argument("--which", choices=("msse", "dsse"), required=True)
    p.add_argument("--theta")
    p.add_argument("--milp", action="store_true")
    p.add_argument("--literal", action="store_true",
                   help="pure-support HNE check, no follower splitting")
    p.add_argument("--full-cover", action="store_true",
                   help="trick condition also needs the leader fully on k_max")
    p.add_argument("--skip-assumptions", action="store_true",
                   help="run the checks even when the game fails the required assumptions")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("robustness", help="robustness radii and utilities along theta")
    common(p)
    p.add_argument("--which", choices=("msse", "dsse"), required=True)
    p.add_argument("--sigma", type=float, help="override the payoff Lipschitz constant")
    p.add_argument("--x-sse", help="leader allocation to use instead of the solved SSE")
    p.add_argument("--seed", type=int, default=0, help="direction sampling seed")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("experiment", help="ratio or robustness sweeps to CSV")
    common(p, game=False)
    p.add_argument("--plan", help="plan JSON (overrides the inline flags)")
    p.add_argument("--case", choices=CASES)
    p.add_argument("--axis", choices=("n", "K"), default="K")
    p.add_argument("--values", default="2..4", help="e.g. 2..5 or 2,4,6")
    p.add_argument("--fixed", type=int, default=2)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--milp", action="store_true")
    p.add_argument("--literal", action="store_true")
    p.add_argument("--full-cover", action="store_true")
    p.add_argument("--fixture", choices=sorted(FIXTURES))
    p.add_argument("--fixture-params", help="JSON object of fixture keyword arguments")
    p.add_argument("--workers", type=int, help="default: $HYPERSSG_WORKERS or 1")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen", help="write a random instance or a named fixture as JSON")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("misperception", "deception"), default="misperception")
    p.add_argument("--fixture", choices=sorted(FIXTURES))
    p.add_argument("--fixture-params")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (SpecError, DomainError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
